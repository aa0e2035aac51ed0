// Rate-distortion of the noisy source under the noise-induced distortion:
// a Blahut-Arimoto solver, the closed form at D = H(N), and entropy-rate
// brackets for hidden-Markov noisy sources.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "lcon/alphabet.hpp"
#include "lcon/error.hpp"
#include "lcon/ktuple.hpp"
#include "lcon/model.hpp"

namespace lcon {

/// Square distortion matrix over tuple indices, rows = source tuple.
struct DistortionMatrix {
  std::size_t size = 0;
  std::vector<double> values;

  double operator()(std::size_t z, std::size_t xhat) const noexcept {
    return values[z * size + xhat];
  }
};

/// (1/k) sum_i rho(z_i - xhat_i) over k-tuples.
inline DistortionMatrix tuple_distortion(const DistortionMeasure& rho, int k,
                                         std::size_t limit = kTableLimit) {
  const int q = rho.q();
  const std::size_t m = checked_power(q, k, limit);
  checked_power(q, 2 * k, limit);
  DistortionMatrix d;
  d.size = m;
  d.values.resize(m * m);
  std::vector<Symbol> zs(static_cast<std::size_t>(k)), xs(static_cast<std::size_t>(k));
  for (std::size_t zi = 0; zi < m; ++zi) {
    tuple_from_index(zi, q, zs);
    for (std::size_t xi = 0; xi < m; ++xi) {
      tuple_from_index(xi, q, xs);
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += rho.cost(zs[i], xs[i]);
      d.values[zi * m + xi] = s / static_cast<double>(k);
    }
  }
  return d;
}

struct RDPoint {
  double rate = 0.0;        ///< bits per symbol of the tuple (I / k)
  double distortion = 0.0;  ///< expected tuple distortion, bits
  double slope = 0.0;       ///< Lagrange slope s (natural units); 0 on the R = 0 branch
  std::vector<double> test_channel;     ///< row-major P(xhat | z), size x size
  std::vector<double> output_marginal;  ///< law of xhat
  bool converged = true;
  std::size_t iterations = 0;
};

struct BlahutArimotoOptions {
  double rate_tol = 1e-10;        ///< stop when the rate changes less than this
  double distortion_tol = 1e-10;  ///< slope bisection target on E[rho]
  std::size_t max_iterations = 100000;
  bool throw_on_no_convergence = true;
};

/// I(Z;Xhat) in bits for input law p and row-major channel.
inline double channel_mutual_information(std::span<const double> p,
                                         std::span<const double> channel) {
  const std::size_t m = p.size();
  std::vector<double> out(m, 0.0);
  for (std::size_t z = 0; z < m; ++z)
    for (std::size_t x = 0; x < m; ++x) out[x] += p[z] * channel[z * m + x];
  double i = 0.0;
  for (std::size_t z = 0; z < m; ++z) {
    if (p[z] <= 0.0) continue;
    for (std::size_t x = 0; x < m; ++x) {
      const double c = channel[z * m + x];
      if (c > 0.0) i += p[z] * c * std::log2(c / out[x]);
    }
  }
  return i;
}

namespace detail {

struct BaState {
  std::vector<double> channel;
  std::vector<double> marginal;
  double rate = 0.0;  // bits per tuple
  double distortion = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Blahut-Arimoto iterations at fixed slope, starting from `marginal`.
inline BaState ba_fixed_slope(std::span<const double> p, const DistortionMatrix& rho, double s,
                              std::vector<double> marginal, const BlahutArimotoOptions& opt) {
  const std::size_t m = p.size();
  std::vector<double> a(m * m, 0.0);
  for (std::size_t z = 0; z < m; ++z) {
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < m; ++x) row_min = std::min(row_min, rho(z, x));
    for (std::size_t x = 0; x < m; ++x) {
      const double r = rho(z, x);
      a[z * m + x] = std::isfinite(r) ? std::exp(-s * (r - row_min)) : 0.0;
    }
  }

  BaState st;
  st.channel.assign(m * m, 0.0);
  std::vector<double> next(m);
  double prev_rate = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t z = 0; z < m; ++z) {
      double c = 0.0;
      for (std::size_t x = 0; x < m; ++x) c += marginal[x] * a[z * m + x];
      for (std::size_t x = 0; x < m; ++x) {
        const double w = c > 0.0 ? marginal[x] * a[z * m + x] / c : 0.0;
        st.channel[z * m + x] = w;
        next[x] += p[z] * w;
      }
    }
    double rate = 0.0, dist = 0.0;
    for (std::size_t z = 0; z < m; ++z) {
      if (p[z] <= 0.0) continue;
      for (std::size_t x = 0; x < m; ++x) {
        const double w = st.channel[z * m + x];
        if (w > 0.0) {
          rate += p[z] * w * std::log2(w / next[x]);
          dist += p[z] * w * rho(z, x);
        }
      }
    }
    marginal.swap(next);
    st.rate = rate;
    st.distortion = dist;
    st.iterations = it;
    if (std::abs(rate - prev_rate) < opt.rate_tol) {
      st.converged = true;
      break;
    }
    prev_rate = rate;
  }
  st.marginal = std::move(marginal);
  return st;
}

}  // namespace detail

/// Smallest achievable expected distortion: each source tuple mapped to its
/// cheapest reproduction.
inline double min_distortion(std::span<const double> p, const DistortionMatrix& rho) {
  double d = 0.0;
  for (std::size_t z = 0; z < rho.size; ++z) {
    if (p[z] <= 0.0) continue;
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < rho.size; ++x) row_min = std::min(row_min, rho(z, x));
    d += p[z] * row_min;
  }
  return d;
}

/// Smallest distortion at zero rate, attained by a constant reproduction.
inline double zero_rate_distortion(std::span<const double> p, const DistortionMatrix& rho,
                                   std::size_t* best = nullptr) {
  double d_max = std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < rho.size; ++x) {
    double d = 0.0;
    for (std::size_t z = 0; z < rho.size; ++z)
      if (p[z] > 0.0) d += p[z] * rho(z, x);
    if (d < d_max) {
      d_max = d;
      if (best) *best = x;
    }
  }
  return d_max;
}

/// R(D) of the tuple source `source_law` (per symbol) at expected distortion D.
inline RDPoint blahut_arimoto(const KTupleDist& source_law, const DistortionMatrix& rho, double D,
                              const BlahutArimotoOptions& opt = {}) {
  if (source_law.joint || source_law.table.size() != rho.size)
    throw Error(Errc::shape_mismatch, "source law and distortion matrix sizes differ");
  const std::span<const double> p = source_law.table;
  const std::size_t m = rho.size;
  const double per_symbol = 1.0 / static_cast<double>(source_law.k);

  const double d_min = min_distortion(p, rho);
  if (!std::isfinite(d_min))
    throw Error(Errc::infeasible_distortion, "some source tuple has no finite-cost reproduction");
  if (D < d_min - opt.distortion_tol)
    throw Error(Errc::infeasible_distortion, "D=" + std::to_string(D) +
                                                 " is below the minimum distortion " +
                                                 std::to_string(d_min));

  std::size_t best = 0;
  const double d_max = zero_rate_distortion(p, rho, &best);
  if (D >= d_max) {
    RDPoint pt;
    pt.rate = 0.0;
    pt.distortion = d_max;
    pt.test_channel.assign(m * m, 0.0);
    for (std::size_t z = 0; z < m; ++z) pt.test_channel[z * m + best] = 1.0;
    pt.output_marginal.assign(m, 0.0);
    pt.output_marginal[best] = 1.0;
    return pt;
  }

  std::vector<double> marginal(m, 1.0 / static_cast<double>(m));
  auto run = [&](double s) {
    auto st = detail::ba_fixed_slope(p, rho, s, marginal, opt);
    marginal = st.marginal;
    return st;
  };

  double s_lo = 0.0, s_hi = 1.0;
  detail::BaState st = run(s_hi);
  std::size_t total = st.iterations;
  bool converged = st.converged;
  while (st.distortion > D + opt.distortion_tol) {
    s_lo = s_hi;
    s_hi *= 2.0;
    if (s_hi > 1e12) throw Error(Errc::no_convergence, "could not bracket the slope");
    st = run(s_hi);
    total += st.iterations;
    converged = st.converged;
  }
  double slope = s_hi;
  if (std::abs(st.distortion - D) >= opt.distortion_tol) {
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (s_lo + s_hi);
      st = run(mid);
      total += st.iterations;
      converged = st.converged;
      slope = mid;
      if (std::abs(st.distortion - D) < opt.distortion_tol) break;
      if (st.distortion > D)
        s_lo = mid;
      else
        s_hi = mid;
      if (s_hi - s_lo <= 1e-15 * s_hi) break;
    }
  }
  if (!converged && opt.throw_on_no_convergence)
    throw Error(Errc::no_convergence, "Blahut-Arimoto hit the iteration cap");

  RDPoint pt;
  pt.rate = st.rate * per_symbol;
  pt.distortion = st.distortion;
  pt.slope = slope;
  pt.test_channel = std::move(st.channel);
  pt.output_marginal = std::move(st.marginal);
  pt.converged = converged;
  pt.iterations = total;
  return pt;
}

/// R(Z^k, H(N)) = (1/k) H(Z^k) - H(N).
inline double closed_form_rate(const SourceModel& source, const NoiseModel& noise, int k,
                               std::size_t limit = kTableLimit) {
  const KTupleDist z = pass_through_noise(kth_order_dist(source, k, limit), noise);
  return entropy_bits(z) / static_cast<double>(k) - noise.entropy();
}

/// Closed interval of bits-per-symbol values; `lower == upper` when exact.
struct RateInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool exact() const noexcept { return lower == upper; }
  double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

struct EntropyRateBounds {
  int k = 1;
  double lower = 0.0;  ///< H(Z_k | Z^{k-1}, X_1)
  double upper = 0.0;  ///< H(Z_k | Z^{k-1})
  double joint_entropy = 0.0;  ///< H(Z^k)
};

namespace detail {

// H(X_1, Z^k): split the X^k law by its first symbol and push each slice
// through the channel.
inline double first_state_joint_entropy(const KTupleDist& x_law, const NoiseModel& noise) {
  const auto q = static_cast<std::size_t>(x_law.q);
  const std::size_t tail = x_law.table.size() / q;
  double h = 0.0;
  KTupleDist slice = make_table(x_law.q, x_law.k, false);
  for (std::size_t x1 = 0; x1 < q; ++x1) {
    std::fill(slice.table.begin(), slice.table.end(), 0.0);
    std::copy_n(x_law.table.begin() + static_cast<std::ptrdiff_t>(x1 * tail), tail,
                slice.table.begin() + static_cast<std::ptrdiff_t>(x1 * tail));
    h += entropy_bits(pass_through_noise(slice, noise));
  }
  return h;
}

}  // namespace detail

/// Bounds H(Z_k | Z^{k-1}, X_1) <= entropy rate of Z <= H(Z_k | Z^{k-1}) for
/// k = 1..kmax. The upper sequence is non-increasing, the lower non-decreasing.
inline std::vector<EntropyRateBounds> entropy_rate_bound_sequence(
    const SourceModel& source, const NoiseModel& noise, int kmax,
    std::size_t limit = kTableLimit) {
  if (kmax < 1) throw Error(Errc::invalid_argument, "kmax must be at least 1");
  checked_power(source.q(), kmax + 1, limit);
  std::vector<EntropyRateBounds> out;
  double h_z_prev = 0.0;
  double h_xz_prev = entropy_bits(source.marginal());  // H(X_1)
  for (int k = 1; k <= kmax; ++k) {
    const KTupleDist x = kth_order_dist(source, k, limit);
    const double h_z = entropy_bits(pass_through_noise(x, noise));
    const double h_xz = detail::first_state_joint_entropy(x, noise);
    out.push_back({k, h_xz - h_xz_prev, h_z - h_z_prev, h_z});
    h_z_prev = h_z;
    h_xz_prev = h_xz;
  }
  return out;
}

inline EntropyRateBounds entropy_rate_bounds(const SourceModel& source, const NoiseModel& noise,
                                             int kmax, std::size_t limit = kTableLimit) {
  return entropy_rate_bound_sequence(source, noise, kmax, limit).back();
}

/// Largest k for which the entropy-rate bracket fits in the table limit.
inline int max_bound_order(int q, std::size_t limit = kTableLimit, int cap = 12) {
  int k = 1;
  std::size_t size = static_cast<std::size_t>(q) * static_cast<std::size_t>(q);
  while (k < cap && size * static_cast<std::size_t>(q) <= limit) {
    size *= static_cast<std::size_t>(q);
    ++k;
  }
  return k;
}

/// (1/n) H(Z^n) - H(N) in bits per data component. Exact for IID sources and
/// for Markov sources whose Z^n table fits; otherwise a bracket from the
/// entropy-rate bounds at order `kmax` (0 selects the largest feasible order).
inline RateInterval rate_needed(const SourceModel& source, const NoiseModel& noise,
                                std::uint64_t n, int kmax = 0,
                                std::size_t limit = kTableLimit) {
  if (n < 1) throw Error(Errc::invalid_argument, "n must be at least 1");
  const double hn = noise.entropy();
  if (source.is_iid()) {
    const double r = closed_form_rate(source, noise, 1, limit);
    return {r, r};
  }
  const int q = source.q();
  std::size_t size = 1;
  bool fits = true;
  for (std::uint64_t i = 0; i < n; ++i) {
    size *= static_cast<std::size_t>(q);
    if (size > limit) {
      fits = false;
      break;
    }
  }
  if (fits) {
    const double r = closed_form_rate(source, noise, static_cast<int>(n), limit);
    return {r, r};
  }
  if (kmax == 0) kmax = max_bound_order(q, limit);
  const auto b = entropy_rate_bounds(source, noise, kmax, limit);
  const double nn = static_cast<double>(n);
  const double upper = (b.joint_entropy + (nn - static_cast<double>(kmax)) * b.upper) / nn;
  return {b.lower - hn, upper - hn};
}

}  // namespace lcon
