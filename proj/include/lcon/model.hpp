// Source laws, additive mod-q noise channels, the noise-induced distortion
// measure and the max-entropy function.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lcon/alphabet.hpp"
#include "lcon/error.hpp"
#include "lcon/ktuple.hpp"
#include "lcon/random.hpp"

namespace lcon {

inline constexpr double kSingularTolerance = 1e-9;
inline constexpr double kPmfTolerance = 1e-12;

/// Throws InvalidPMF unless `pmf` is a probability vector (length >= 2 when
/// `expected_size` is 0, otherwise exactly `expected_size`).
inline void validate_pmf(std::span<const double> pmf, std::size_t expected_size = 0) {
  if (expected_size != 0 && pmf.size() != expected_size)
    throw Error(Errc::invalid_pmf, "expected " + std::to_string(expected_size) +
                                       " entries, got " + std::to_string(pmf.size()));
  if (pmf.size() < 2 || pmf.size() > static_cast<std::size_t>(kMaxAlphabet))
    throw Error(Errc::invalid_pmf, "probability vector length must lie in [2, 256]");
  double sum = 0.0;
  for (double p : pmf) {
    if (!std::isfinite(p) || p < 0.0)
      throw Error(Errc::invalid_pmf, "entries must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kPmfTolerance)
    throw Error(Errc::invalid_pmf, "entries sum to " + std::to_string(sum));
}

/// Shannon entropy in bits of a validated probability vector.
inline double entropy(std::span<const double> pmf) {
  validate_pmf(pmf);
  return entropy_bits(pmf);
}

/// Magnitudes of the DFT coefficients of `pmf`. The circulant matrix whose rows
/// are cyclic shifts of `pmf` has exactly these values as eigenvalue moduli.
inline std::vector<double> dft_magnitudes(std::span<const double> pmf) {
  const std::size_t q = pmf.size();
  std::vector<double> mags(q);
  for (std::size_t j = 0; j < q; ++j) {
    double re = 0.0, im = 0.0;
    for (std::size_t a = 0; a < q; ++a) {
      const double angle =
          2.0 * std::numbers::pi * static_cast<double>((a * j) % q) / static_cast<double>(q);
      re += pmf[a] * std::cos(angle);
      im -= pmf[a] * std::sin(angle);
    }
    mags[j] = std::hypot(re, im);
  }
  return mags;
}

/// Law of an additive noise symbol N over Z_q with a certificate that its
/// circulant matrix is invertible.
class NoiseModel {
 public:
  int q() const noexcept { return static_cast<int>(pmf_.size()); }
  const std::vector<double>& pmf() const noexcept { return pmf_; }
  double operator[](std::size_t a) const noexcept { return pmf_[a]; }
  double spectrum_min() const noexcept { return spectrum_min_; }
  double entropy() const noexcept { return entropy_bits(pmf_); }
  bool is_zero_noise() const noexcept { return pmf_[0] == 1.0; }

 private:
  NoiseModel(std::vector<double> pmf, double spectrum_min)
      : pmf_(std::move(pmf)), spectrum_min_(spectrum_min) {}
  friend NoiseModel build_noise(std::vector<double> pmf, double tol);

  std::vector<double> pmf_;
  double spectrum_min_;
};

inline NoiseModel build_noise(std::vector<double> pmf, double tol = kSingularTolerance) {
  validate_pmf(pmf);
  const auto mags = dft_magnitudes(pmf);
  const double smin = *std::min_element(mags.begin(), mags.end());
  if (!(smin > tol))
    throw Error(Errc::singular_noise, "smallest DFT coefficient magnitude " +
                                          std::to_string(smin) + " is not above " +
                                          std::to_string(tol));
  return NoiseModel(std::move(pmf), smin);
}

/// The identity channel on Z_q.
inline NoiseModel zero_noise(int q) {
  std::vector<double> pmf(static_cast<std::size_t>(Alphabet(q).q), 0.0);
  pmf[0] = 1.0;
  return build_noise(std::move(pmf));
}

/// Difference distortion rho(a) = log2(1 / P_N(a)) in bits; +inf off the
/// noise support.
struct DistortionMeasure {
  std::vector<double> rho;

  int q() const noexcept { return static_cast<int>(rho.size()); }
  double operator()(std::size_t diff) const noexcept { return rho[diff]; }

  /// rho((z - xhat) mod q)
  double cost(Symbol z, Symbol xhat) const noexcept {
    const int qq = q();
    return rho[static_cast<std::size_t>((z - xhat + qq) % qq)];
  }
};

inline DistortionMeasure induced_distortion(const NoiseModel& noise) {
  DistortionMeasure d;
  d.rho.resize(noise.pmf().size());
  for (std::size_t a = 0; a < d.rho.size(); ++a) {
    const double p = noise[a];
    d.rho[a] = p > 0.0 ? -std::log2(p) : std::numeric_limits<double>::infinity();
  }
  return d;
}

/// Solution of max{H(M) : E rho_N(M) <= D} over laws M on the noise support.
struct MaxEntropySolution {
  double entropy = 0.0;
  /// Tilt exponent of the maximizer P(a) ~ P_N(a)^beta; +inf for the
  /// degenerate limit, 0 when the uniform law on the support is feasible.
  double beta = 0.0;
  std::vector<double> distribution;
};

namespace detail {

inline void tilted_law(std::span<const double> pmf, double beta, std::vector<double>& out) {
  out.assign(pmf.size(), 0.0);
  double max_log = -std::numeric_limits<double>::infinity();
  for (double p : pmf)
    if (p > 0.0) max_log = std::max(max_log, beta * std::log(p));
  double z = 0.0;
  for (std::size_t a = 0; a < pmf.size(); ++a)
    if (pmf[a] > 0.0) {
      out[a] = std::exp(beta * std::log(pmf[a]) - max_log);
      z += out[a];
    }
  for (double& v : out) v /= z;
}

inline double expected_cost(std::span<const double> law, const DistortionMeasure& rho) {
  double e = 0.0;
  for (std::size_t a = 0; a < law.size(); ++a)
    if (law[a] > 0.0) e += law[a] * rho.rho[a];
  return e;
}

}  // namespace detail

inline MaxEntropySolution max_entropy_solve(const NoiseModel& noise, double D) {
  const auto rho = induced_distortion(noise);
  const auto& pmf = noise.pmf();
  double rho_min = std::numeric_limits<double>::infinity();
  std::size_t support = 0;
  double uniform_cost = 0.0;
  for (std::size_t a = 0; a < pmf.size(); ++a)
    if (pmf[a] > 0.0) {
      rho_min = std::min(rho_min, rho.rho[a]);
      uniform_cost += rho.rho[a];
      ++support;
    }
  uniform_cost /= static_cast<double>(support);

  const double slack = 1e-12 * std::max(1.0, std::abs(rho_min));
  if (!(D >= rho_min - slack))
    throw Error(Errc::infeasible_distortion,
                "D=" + std::to_string(D) + " is below min rho=" + std::to_string(rho_min));

  MaxEntropySolution sol;
  if (uniform_cost <= D) {
    sol.beta = 0.0;
    sol.distribution.assign(pmf.size(), 0.0);
    for (std::size_t a = 0; a < pmf.size(); ++a)
      if (pmf[a] > 0.0) sol.distribution[a] = 1.0 / static_cast<double>(support);
    sol.entropy = std::log2(static_cast<double>(support));
    return sol;
  }
  if (D <= rho_min + slack) {
    // Limit beta -> inf: uniform on the most likely noise symbols.
    std::size_t ties = 0;
    sol.distribution.assign(pmf.size(), 0.0);
    for (std::size_t a = 0; a < pmf.size(); ++a)
      if (pmf[a] > 0.0 && rho.rho[a] <= rho_min + slack) ++ties;
    for (std::size_t a = 0; a < pmf.size(); ++a)
      if (pmf[a] > 0.0 && rho.rho[a] <= rho_min + slack)
        sol.distribution[a] = 1.0 / static_cast<double>(ties);
    sol.beta = std::numeric_limits<double>::infinity();
    sol.entropy = std::log2(static_cast<double>(ties));
    return sol;
  }

  // E rho(P_beta) decreases in beta from the uniform cost to rho_min.
  std::vector<double> law;
  auto cost_at = [&](double beta) {
    detail::tilted_law(pmf, beta, law);
    return detail::expected_cost(law, rho);
  };
  double lo = 0.0, hi = 1.0;
  while (cost_at(hi) > D) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw Error(Errc::no_convergence, "could not bracket the tilt exponent");
  }
  detail::tilted_law(pmf, lo, law);
  double h_lo = entropy_bits(law);
  detail::tilted_law(pmf, hi, law);
  double h_hi = entropy_bits(law);
  double beta = hi;
  for (int iter = 0; iter < 400; ++iter) {
    beta = 0.5 * (lo + hi);
    const double c = cost_at(beta);
    const double h = entropy_bits(law);
    if (std::abs(c - D) < 1e-10) break;
    if (c > D) {
      lo = beta;
      h_lo = h;
    } else {
      hi = beta;
      h_hi = h;
    }
    if (std::abs(h_lo - h_hi) < 1e-12) break;
  }
  detail::tilted_law(pmf, beta, law);
  sol.beta = beta;
  sol.entropy = entropy_bits(law);
  sol.distribution = law;
  return sol;
}

/// phi_N(D) in bits.
inline double max_entropy(const NoiseModel& noise, double D) {
  return max_entropy_solve(noise, D).entropy;
}

/// Law of the clean process: IID or a stationary ergodic first-order Markov chain.
class SourceModel {
 public:
  enum class Kind { iid, markov };

  static SourceModel iid(std::vector<double> pmf) {
    validate_pmf(pmf);
    SourceModel s;
    s.kind_ = Kind::iid;
    s.q_ = static_cast<int>(pmf.size());
    s.marginal_ = std::move(pmf);
    return s;
  }

  /// Markov chain from its row-stochastic transition matrix; the initial law
  /// is the (unique) stationary distribution.
  static SourceModel markov(const std::vector<std::vector<double>>& transition) {
    SourceModel s = markov_unchecked_stationary(transition);
    s.marginal_ = stationary_distribution(s.transition_, s.q_);
    return s;
  }

  /// Markov chain with an explicit initial law, which must be stationary.
  static SourceModel markov(const std::vector<std::vector<double>>& transition,
                            std::vector<double> initial) {
    SourceModel s = markov_unchecked_stationary(transition);
    validate_pmf(initial, static_cast<std::size_t>(s.q_));
    for (int j = 0; j < s.q_; ++j) {
      double v = 0.0;
      for (int i = 0; i < s.q_; ++i) v += initial[i] * s.p(i, j);
      if (std::abs(v - initial[j]) > 1e-9)
        throw Error(Errc::invalid_markov, "initial law is not stationary");
    }
    s.marginal_ = std::move(initial);
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_iid() const noexcept { return kind_ == Kind::iid; }
  int q() const noexcept { return q_; }

  /// Per-symbol law (the pmf, or the stationary distribution).
  const std::vector<double>& marginal() const noexcept { return marginal_; }

  /// P(next = j | current = i). For IID sources this is the pmf of j.
  double p(int i, int j) const noexcept {
    return kind_ == Kind::iid ? marginal_[static_cast<std::size_t>(j)]
                              : transition_[static_cast<std::size_t>(i * q_ + j)];
  }

  std::span<const double> row(int i) const noexcept {
    if (kind_ == Kind::iid) return marginal_;
    return std::span<const double>(transition_).subspan(static_cast<std::size_t>(i * q_),
                                                        static_cast<std::size_t>(q_));
  }

  /// Entropy rate in bits/symbol.
  double entropy_rate() const {
    if (is_iid()) return entropy_bits(marginal_);
    double h = 0.0;
    for (int i = 0; i < q_; ++i) h += marginal_[i] * entropy_bits(row(i));
    return h;
  }

 private:
  SourceModel() = default;

  static SourceModel markov_unchecked_stationary(
      const std::vector<std::vector<double>>& transition) {
    const std::size_t q = transition.size();
    if (q < 2 || q > static_cast<std::size_t>(kMaxAlphabet))
      throw Error(Errc::invalid_markov, "transition matrix must have 2..256 rows");
    SourceModel s;
    s.kind_ = Kind::markov;
    s.q_ = static_cast<int>(q);
    s.transition_.reserve(q * q);
    for (const auto& r : transition) {
      if (r.size() != q) throw Error(Errc::invalid_markov, "transition matrix is not square");
      try {
        validate_pmf(r, q);
      } catch (const Error& e) {
        throw Error(Errc::invalid_markov, std::string("row is not stochastic: ") + e.what());
      }
      s.transition_.insert(s.transition_.end(), r.begin(), r.end());
    }
    if (!is_irreducible(s.transition_, s.q_))
      throw Error(Errc::invalid_markov, "chain is not irreducible");
    if (period(s.transition_, s.q_) != 1)
      throw Error(Errc::invalid_markov, "chain is periodic");
    return s;
  }

  static std::vector<int> bfs_levels(const std::vector<double>& t, int q, bool reverse) {
    std::vector<int> level(static_cast<std::size_t>(q), -1);
    std::queue<int> frontier;
    level[0] = 0;
    frontier.push(0);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v = 0; v < q; ++v) {
        const double w = reverse ? t[static_cast<std::size_t>(v * q + u)]
                                 : t[static_cast<std::size_t>(u * q + v)];
        if (w > 0.0 && level[v] < 0) {
          level[v] = level[u] + 1;
          frontier.push(v);
        }
      }
    }
    return level;
  }

  static bool is_irreducible(const std::vector<double>& t, int q) {
    const auto fwd = bfs_levels(t, q, false);
    const auto bwd = bfs_levels(t, q, true);
    return std::none_of(fwd.begin(), fwd.end(), [](int l) { return l < 0; }) &&
           std::none_of(bwd.begin(), bwd.end(), [](int l) { return l < 0; });
  }

  // gcd of cycle lengths, via BFS levels: gcd over edges of level[u] + 1 - level[v].
  static int period(const std::vector<double>& t, int q) {
    const auto level = bfs_levels(t, q, false);
    int g = 0;
    for (int u = 0; u < q; ++u)
      for (int v = 0; v < q; ++v)
        if (t[static_cast<std::size_t>(u * q + v)] > 0.0)
          g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
    return g;
  }

  static std::vector<double> stationary_distribution(const std::vector<double>& t, int q) {
    // Solve (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        a(i, j) = t[static_cast<std::size_t>(j * q + i)] - (i == j ? 1.0 : 0.0);
    a.row(q - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
    b(q - 1) = 1.0;
    const Eigen::VectorXd pi = a.fullPivLu().solve(b);
    std::vector<double> out(static_cast<std::size_t>(q));
    double sum = 0.0;
    for (int i = 0; i < q; ++i) {
      out[i] = std::max(0.0, pi(i));
      sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
  }

  Kind kind_ = Kind::iid;
  int q_ = 2;
  std::vector<double> marginal_;
  std::vector<double> transition_;
};

/// n symbols of the source, deterministic in `seed`.
inline Sequence sample_source(const SourceModel& source, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::invalid_argument, "sample length must be positive");
  Rng rng(derive_seed(seed, Stream::source));
  Sequence x(n);
  const CategoricalSampler first(source.marginal());
  if (source.is_iid()) {
    for (auto& s : x) s = static_cast<Symbol>(first(rng));
    return x;
  }
  std::vector<CategoricalSampler> rows;
  rows.reserve(static_cast<std::size_t>(source.q()));
  for (int i = 0; i < source.q(); ++i) rows.emplace_back(source.row(i));
  x[0] = static_cast<Symbol>(first(rng));
  for (std::size_t i = 1; i < n; ++i) x[i] = static_cast<Symbol>(rows[x[i - 1]](rng));
  return x;
}

/// z[i] = (x[i] + draws[i]) mod q.
inline Sequence add_noise(std::span<const Symbol> x, std::span<const Symbol> draws, int q) {
  if (x.size() != draws.size())
    throw Error(Errc::length_mismatch, "signal and noise lengths differ");
  check_symbols(x, q);
  check_symbols(draws, q);
  Sequence z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = static_cast<Symbol>((x[i] + draws[i]) % q);
  return z;
}

/// Passes x through the additive channel; noise draws are IID and
/// deterministic in `seed`.
inline Sequence corrupt(std::span<const Symbol> x, const NoiseModel& noise, std::uint64_t seed) {
  const int q = noise.q();
  check_symbols(x, q);
  Rng rng(derive_seed(seed, Stream::noise));
  const CategoricalSampler draw(noise.pmf());
  Sequence z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    z[i] = static_cast<Symbol>((x[i] + draw(rng)) % static_cast<std::size_t>(q));
  return z;
}

/// Exact stationary law of X^k.
inline KTupleDist kth_order_dist(const SourceModel& source, int k,
                                 std::size_t limit = kTableLimit) {
  if (k < 1) throw Error(Errc::invalid_argument, "k must be at least 1");
  const int q = source.q();
  checked_power(q, k, limit);
  std::vector<double> cur = source.marginal();
  for (int order = 2; order <= k; ++order) {
    std::vector<double> next(cur.size() * static_cast<std::size_t>(q));
    for (std::size_t idx = 0; idx < cur.size(); ++idx) {
      const int last = static_cast<int>(idx % static_cast<std::size_t>(q));
      for (int s = 0; s < q; ++s)
        next[idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(s)] =
            cur[idx] * source.p(last, s);
    }
    cur = std::move(next);
  }
  KTupleDist d = make_table(q, k, false);
  d.table = std::move(cur);
  return d;
}

/// Law of Z^k = X^k + N^k (coordinate-wise circular convolution).
inline KTupleDist pass_through_noise(const KTupleDist& x_law, const NoiseModel& noise) {
  if (x_law.joint || x_law.q != noise.q())
    throw Error(Errc::shape_mismatch, "law and noise alphabets differ");
  const auto q = static_cast<std::size_t>(x_law.q);
  std::vector<double> cur = x_law.table;
  std::vector<double> next(cur.size());
  std::size_t stride = 1;
  for (int axis = 0; axis < x_law.k; ++axis) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t idx = 0; idx < cur.size(); ++idx) {
      if (cur[idx] == 0.0) continue;
      const std::size_t digit = (idx / stride) % q;
      const std::size_t base = idx - digit * stride;
      for (std::size_t a = 0; a < q; ++a)
        if (noise[a] > 0.0) next[base + ((digit + a) % q) * stride] += cur[idx] * noise[a];
    }
    std::swap(cur, next);
    stride *= q;
  }
  KTupleDist out = make_table(x_law.q, x_law.k, false);
  out.table = std::move(cur);
  return out;
}

/// Joint law of (Z^k, X^k) with Z^k = X^k + N^k, laid out z-major.
inline KTupleDist joint_through_noise(const KTupleDist& x_law, const NoiseModel& noise) {
  if (x_law.joint || x_law.q != noise.q())
    throw Error(Errc::shape_mismatch, "law and noise alphabets differ");
  const int q = x_law.q;
  const int k = x_law.k;
  KTupleDist joint = make_table(q, k, true);
  const std::size_t m = x_law.table.size();
  std::vector<Symbol> xs(static_cast<std::size_t>(k)), zs(static_cast<std::size_t>(k));
  for (std::size_t xi = 0; xi < m; ++xi) {
    if (x_law.table[xi] == 0.0) continue;
    tuple_from_index(xi, q, xs);
    for (std::size_t zi = 0; zi < m; ++zi) {
      tuple_from_index(zi, q, zs);
      double p = x_law.table[xi];
      for (int i = 0; i < k && p > 0.0; ++i) p *= noise[(zs[i] - xs[i] + q) % q];
      joint.table[zi * m + xi] = p;
    }
  }
  return joint;
}

struct NoisyLaw {
  KTupleDist z;      ///< P_{Z^k}
  KTupleDist joint;  ///< P_{Z^k, X^k}
};

inline NoisyLaw noisy_kth_order_dist(const SourceModel& source, const NoiseModel& noise, int k,
                                     std::size_t limit = kTableLimit) {
  if (source.q() != noise.q()) throw Error(Errc::shape_mismatch, "alphabet sizes differ");
  checked_power(source.q(), 2 * k, limit);
  const KTupleDist x = kth_order_dist(source, k, limit);
  NoisyLaw law{pass_through_noise(x, noise), joint_through_noise(x, noise)};
  return law;
}

/// Law of U + W mod q.
inline NoiseModel compose_noise(const NoiseModel& u, const NoiseModel& w,
                                double tol = kSingularTolerance) {
  if (u.q() != w.q()) throw Error(Errc::shape_mismatch, "alphabet sizes differ");
  const auto q = static_cast<std::size_t>(u.q());
  std::vector<double> pmf(q, 0.0);
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b) pmf[(a + b) % q] += u[a] * w[b];
  return build_noise(std::move(pmf), tol);
}

}  // namespace lcon
