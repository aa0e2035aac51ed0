// Seeded, platform-independent random streams.
//
// Every draw goes through std::mt19937_64 (whose output sequence is fixed by
// the standard) and our own uniform/inverse-CDF conversion, so the same seed
// yields the same symbols on every toolchain. The std:: distributions are
// implementation-defined and are not used for anything that is persisted.
#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lcon/error.hpp"

namespace lcon {

/// Stream tags used when deriving independent substreams from a master seed.
enum class Stream : std::uint64_t {
  source = 0x5352'4300,
  noise = 0x4e4f'4953,
  codebook = 0x434f'4442,
  posterior = 0x504f'5354,
  residual = 0x5245'5349,
  trial = 0x5452'4941,
  label = 0x4c41'4245,
  block = 0x424c'4f43,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e37'79b9'7f4a'7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58'476d'1ce4'e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d0'49bb'1331'11ebULL;
  return x ^ (x >> 31);
}

/// Seed for substream `index` of `stream` under `master`. Pure function of its
/// arguments, so per-block seeds do not depend on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t index = 0) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ splitmix64(index + 0x632b'e59b'd9b4'e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF sampler over {0, ..., size-1}. Zero-probability symbols are
/// never returned.
class CategoricalSampler {
 public:
  CategoricalSampler() = default;

  explicit CategoricalSampler(std::span<const double> pmf) {
    if (pmf.empty()) throw Error(Errc::invalid_pmf, "empty probability vector");
    cdf_.resize(pmf.size());
    double acc = 0.0;
    last_positive_ = 0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      acc += pmf[i];
      cdf_[i] = acc;
      if (pmf[i] > 0.0) last_positive_ = i;
    }
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) return last_positive_;
    return static_cast<std::size_t>(it - cdf_.begin());
  }

  std::size_t size() const noexcept { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

}  // namespace lcon
