// Random-codebook block codec with minimum-distortion encoding, and exact
// posterior sampling of the clean source given its noisy observation.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lcon/alphabet.hpp"
#include "lcon/error.hpp"
#include "lcon/model.hpp"
#include "lcon/random.hpp"

namespace lcon {

inline constexpr int kMaxCodebookBits = 24;

/// ceil(n * rate) with a small allowance for rounding in n * rate.
inline int codebook_bits(std::size_t n, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate))
    throw Error(Errc::invalid_argument, "rate must be finite and non-negative");
  const double raw = static_cast<double>(n) * rate;
  const double bits = std::ceil(raw - 1e-9);
  if (bits > kMaxCodebookBits)
    throw Error(Errc::codebook_too_large,
                "ceil(n*rate)=" + std::to_string(bits) + " exceeds 24 bits");
  return static_cast<int>(std::max(0.0, bits));
}

class Codebook {
 public:
  Codebook(int q, std::size_t n, int bits_per_block, std::vector<double> generator_marginal,
           std::uint64_t seed)
      : q_(q), n_(n), bits_(bits_per_block), seed_(seed), marginal_(std::move(generator_marginal)) {
    static_cast<void>(Alphabet(q));
    if (n == 0) throw Error(Errc::invalid_argument, "block length must be positive");
    if (bits_per_block < 0 || bits_per_block > kMaxCodebookBits)
      throw Error(Errc::codebook_too_large, "bits per block must lie in [0, 24]");
    validate_pmf(marginal_, static_cast<std::size_t>(q));
    const std::size_t count = std::size_t{1} << bits_;
    symbols_.resize(count * n_);
    Rng rng(derive_seed(seed_, Stream::codebook));
    const CategoricalSampler draw(marginal_);
    for (auto& s : symbols_) s = static_cast<Symbol>(draw(rng));
  }

  int q() const noexcept { return q_; }
  std::size_t block_length() const noexcept { return n_; }
  int bits_per_block() const noexcept { return bits_; }
  std::size_t size() const noexcept { return std::size_t{1} << bits_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<double>& generator_marginal() const noexcept { return marginal_; }
  double rate() const noexcept { return static_cast<double>(bits_) / static_cast<double>(n_); }

  std::span<const Symbol> codeword(std::size_t index) const {
    if (index >= size())
      throw Error(Errc::index_out_of_range, "codeword index " + std::to_string(index) +
                                                " >= " + std::to_string(size()));
    return std::span<const Symbol>(symbols_).subspan(index * n_, n_);
  }

  const std::vector<Symbol>& symbols() const noexcept { return symbols_; }

 private:
  int q_;
  std::size_t n_;
  int bits_;
  std::uint64_t seed_;
  std::vector<double> marginal_;
  std::vector<Symbol> symbols_;
};

/// Codebook with bits_per_block = ceil(n * rate).
inline Codebook build_codebook(std::size_t n, double rate, std::vector<double> marginal,
                               std::uint64_t seed) {
  const int q = static_cast<int>(marginal.size());
  return Codebook(q, n, codebook_bits(n, rate), std::move(marginal), seed);
}

struct EncodeResult {
  std::uint32_t index = 0;
  double distortion = 0.0;  ///< (1/n) sum rho(z_i - xhat_i), bits
  bool flagged = false;     ///< every codeword had infinite cost
};

/// Minimum-distortion encoder bound to one codebook; ties go to the lowest
/// index. Read-only after construction, so one instance can serve many threads.
class Encoder {
 public:
  Encoder(const Codebook& book, const DistortionMeasure& rho) : book_(&book), rho_(rho) {
    if (rho.q() != book.q()) throw Error(Errc::shape_mismatch, "alphabet sizes differ");
    const auto q = static_cast<std::size_t>(book.q());
    cost_.resize(q * q);
    for (std::size_t z = 0; z < q; ++z)
      for (std::size_t c = 0; c < q; ++c) cost_[z * q + c] = rho.rho[(z + q - c) % q];
    binary_ = q == 2 && book.block_length() <= 64;
    if (binary_) {
      packed_.resize(book.size());
      for (std::size_t i = 0; i < book.size(); ++i) packed_[i] = pack(book.codeword(i));
    }
  }

  EncodeResult operator()(std::span<const Symbol> z) const {
    if (z.size() != book_->block_length())
      throw Error(Errc::length_mismatch, "block length does not match the codebook");
    check_symbols(z, book_->q());
    return binary_ ? encode_binary(z) : encode_generic(z);
  }

  const Codebook& codebook() const noexcept { return *book_; }

 private:
  static std::uint64_t pack(std::span<const Symbol> s) {
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < s.size(); ++i) w |= static_cast<std::uint64_t>(s[i]) << i;
    return w;
  }

  // With q = 2 the cost depends only on the Hamming distance h:
  // (n - h) rho(0) + h rho(1). It is strictly monotone in h because uniform
  // noise is excluded, so the best codeword is the first with extreme h.
  EncodeResult encode_binary(std::span<const Symbol> z) const {
    const std::uint64_t zw = pack(z);
    const auto n = static_cast<int>(z.size());
    const bool prefer_far = rho_.rho[1] < rho_.rho[0];
    int best_h = prefer_far ? -1 : n + 1;
    std::size_t best = 0;
    for (std::size_t i = 0; i < packed_.size(); ++i) {
      const int h = std::popcount(zw ^ packed_[i]);
      if (prefer_far ? h > best_h : h < best_h) {
        best_h = h;
        best = i;
        if (best_h == (prefer_far ? n : 0)) break;
      }
    }
    double total = 0.0;
    if (n - best_h > 0) total += static_cast<double>(n - best_h) * rho_.rho[0];
    if (best_h > 0) total += static_cast<double>(best_h) * rho_.rho[1];
    EncodeResult r{static_cast<std::uint32_t>(best), total / static_cast<double>(n), false};
    if (!std::isfinite(total)) r = {0, std::numeric_limits<double>::infinity(), true};
    return r;
  }

  EncodeResult encode_generic(std::span<const Symbol> z) const {
    const auto q = static_cast<std::size_t>(book_->q());
    const std::size_t n = z.size();
    const Symbol* words = book_->symbols().data();
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    std::vector<std::uint32_t> hist(q);
    for (std::size_t i = 0; i < book_->size(); ++i) {
      const Symbol* w = words + i * n;
      // The running sum only prunes; the compared cost is rebuilt from the
      // difference histogram so equal costs round identically.
      const double bound = best_cost + 1e-9 * (1.0 + best_cost);
      std::fill(hist.begin(), hist.end(), 0u);
      double partial = 0.0;
      std::size_t j = 0;
      for (; j < n && partial <= bound; ++j) {
        partial += cost_[z[j] * q + w[j]];
        ++hist[(z[j] + q - w[j]) % q];
      }
      if (j < n) continue;
      double c = 0.0;
      for (std::size_t a = 0; a < q; ++a)
        if (hist[a]) c += static_cast<double>(hist[a]) * rho_.rho[a];
      if (c < best_cost) {
        best_cost = c;
        best = i;
      }
    }
    if (!std::isfinite(best_cost))
      return {0, std::numeric_limits<double>::infinity(), true};
    return {static_cast<std::uint32_t>(best), best_cost / static_cast<double>(n), false};
  }

  const Codebook* book_;
  DistortionMeasure rho_;
  std::vector<double> cost_;
  bool binary_ = false;
  std::vector<std::uint64_t> packed_;
};

inline EncodeResult encode(std::span<const Symbol> z, const Codebook& book,
                           const DistortionMeasure& rho) {
  return Encoder(book, rho)(z);
}

inline Sequence decode(std::size_t index, const Codebook& book) {
  const auto w = book.codeword(index);
  return Sequence(w.begin(), w.end());
}

/// (1/n) sum rho(z_i - xhat_i).
inline double block_distortion(std::span<const Symbol> z, std::span<const Symbol> xhat,
                               const DistortionMeasure& rho) {
  if (z.size() != xhat.size()) throw Error(Errc::length_mismatch, "sequence lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += rho.cost(z[i], xhat[i]);
  return s / static_cast<double>(z.size());
}

/// Exact draw of X^n from P(X^n | Z^n = z). Componentwise Bayes for IID
/// sources; backward filtering then forward sampling for Markov sources.
inline Sequence posterior_sample(std::span<const Symbol> z, const SourceModel& source,
                                 const NoiseModel& noise, std::uint64_t seed) {
  const int q = source.q();
  if (noise.q() != q) throw Error(Errc::shape_mismatch, "alphabet sizes differ");
  check_symbols(z, q);
  const auto qs = static_cast<std::size_t>(q);
  const std::size_t n = z.size();
  Rng rng(derive_seed(seed, Stream::posterior));
  Sequence x(n);
  if (n == 0) return x;
  auto lik = [&](Symbol zz, std::size_t xx) { return noise[(zz + qs - xx) % qs]; };

  if (source.is_iid()) {
    std::vector<CategoricalSampler> post(qs);
    std::vector<bool> possible(qs, false);
    for (std::size_t zz = 0; zz < qs; ++zz) {
      std::vector<double> w(qs);
      double norm = 0.0;
      for (std::size_t xx = 0; xx < qs; ++xx) {
        w[xx] = source.marginal()[xx] * lik(static_cast<Symbol>(zz), xx);
        norm += w[xx];
      }
      if (norm > 0.0) {
        for (double& v : w) v /= norm;
        post[zz] = CategoricalSampler(w);
        possible[zz] = true;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!possible[z[i]])
        throw Error(Errc::zero_likelihood, "observation has zero probability under the model");
      x[i] = static_cast<Symbol>(post[z[i]](rng));
    }
    return x;
  }

  // beta[t][s] proportional to P(z_{t+1..n-1} | X_t = s), normalized per step.
  std::vector<double> beta(n * qs, 0.0);
  for (std::size_t s = 0; s < qs; ++s) beta[(n - 1) * qs + s] = 1.0;
  for (std::size_t t = n - 1; t-- > 0;) {
    double norm = 0.0;
    for (std::size_t s = 0; s < qs; ++s) {
      double v = 0.0;
      for (std::size_t s2 = 0; s2 < qs; ++s2)
        v += source.p(static_cast<int>(s), static_cast<int>(s2)) * lik(z[t + 1], s2) *
             beta[(t + 1) * qs + s2];
      beta[t * qs + s] = v;
      norm += v;
    }
    if (!(norm > 0.0))
      throw Error(Errc::zero_likelihood, "observation has zero probability under the model");
    for (std::size_t s = 0; s < qs; ++s) beta[t * qs + s] /= norm;
  }
  std::vector<double> w(qs);
  auto draw = [&]() {
    double norm = 0.0;
    for (double v : w) norm += v;
    if (!(norm > 0.0))
      throw Error(Errc::zero_likelihood, "observation has zero probability under the model");
    double u = rng.uniform() * norm;
    std::size_t last = 0;
    for (std::size_t s = 0; s < qs; ++s) {
      if (w[s] <= 0.0) continue;
      last = s;
      if (u < w[s]) return static_cast<Symbol>(s);
      u -= w[s];
    }
    return static_cast<Symbol>(last);
  };
  for (std::size_t s = 0; s < qs; ++s)
    w[s] = source.marginal()[s] * lik(z[0], s) * beta[s];
  x[0] = draw();
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t s = 0; s < qs; ++s)
      w[s] = source.p(x[t - 1], static_cast<int>(s)) * lik(z[t], s) * beta[t * qs + s];
    x[t] = draw();
  }
  return x;
}

/// Exact draw of the partially noisy X + U given Z = X + U + W: sample X from
/// its posterior under the composite noise, then each U_i from
/// P(U_i | Z_i - X_i) ~ P_U(u) P_W(z_i - x_i - u).
inline Sequence partial_posterior_sample(std::span<const Symbol> z, const SourceModel& source,
                                         const NoiseModel& u, const NoiseModel& w,
                                         std::uint64_t seed) {
  const NoiseModel n = compose_noise(u, w);
  const Sequence x = posterior_sample(z, source, n, seed);
  const auto q = static_cast<std::size_t>(source.q());
  std::vector<CategoricalSampler> residual(q);
  for (std::size_t r = 0; r < q; ++r) {
    std::vector<double> p(q);
    double norm = 0.0;
    for (std::size_t a = 0; a < q; ++a) {
      p[a] = u[a] * w[(r + q - a) % q];
      norm += p[a];
    }
    if (norm > 0.0) {
      for (double& v : p) v /= norm;
      residual[r] = CategoricalSampler(p);
    }
  }
  Rng rng(derive_seed(seed, Stream::residual));
  Sequence out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::size_t r = (z[i] + q - x[i]) % q;
    out[i] = static_cast<Symbol>((x[i] + residual[r](rng)) % q);
  }
  return out;
}

}  // namespace lcon
