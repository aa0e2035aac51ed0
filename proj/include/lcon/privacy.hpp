// Mutual-information privacy-leakage bounds and differential-privacy noise
// calibration. The DP calculators use natural logarithms and sensitivity 1.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lcon/alphabet.hpp"
#include "lcon/error.hpp"
#include "lcon/model.hpp"
#include "lcon/rd.hpp"

namespace lcon {

/// (1/n) H(Z^n) - H(N), which equals (1/n) I(X^n; Z^n) and so bounds the
/// per-component leakage of the compressed dataset by data processing. Same
/// expression as the storage rate; long Markov blocks give a bracket.
inline RateInterval leakage_upper_bound(const SourceModel& source, const NoiseModel& noise,
                                        std::uint64_t n, std::size_t limit = kTableLimit) {
  return rate_needed(source, noise, n, 0, limit);
}

/// log2(q) - H(N): the bound on both the storage rate and the leakage.
inline double leakage_cap(const NoiseModel& noise) {
  return std::log2(static_cast<double>(noise.q())) - noise.entropy();
}

struct PrivacyReport {
  RateInterval leakage_upper;
  double leakage_cap = 0.0;
  std::uint64_t n = 1;
  std::vector<std::string> assumptions;
};

inline PrivacyReport privacy_report(const SourceModel& source, const NoiseModel& noise,
                                    std::uint64_t n) {
  PrivacyReport r;
  r.leakage_upper = leakage_upper_bound(source, noise, n);
  r.leakage_cap = leakage_cap(noise);
  r.n = n;
  r.assumptions = {
      "examples are IID copies of the block law; noise is IID, independent of the data",
      "bound is the data-processing bound through the noisy data; compression only lowers it",
      "conservative: no compressor-specific tightening is applied",
  };
  if (!r.leakage_upper.exact())
    r.assumptions.push_back("Markov source: bracket from conditional entropy bounds on Z");
  return r;
}

enum class DPMechanism { gaussian, laplacian };

struct DPParams {
  double epsilon = 1.0;
  std::optional<double> delta;  ///< absent for pure epsilon-DP
  std::uint64_t k_queries = 1;
  DPMechanism mechanism = DPMechanism::gaussian;
  double noise_scale = 0.0;  ///< sigma^2 (gaussian) or b (laplacian)
};

namespace detail {

inline void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(Errc::invalid_params, "epsilon must be positive");
}

inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::invalid_params, "delta must lie in (0, 1)");
}

}  // namespace detail

/// Gaussian mechanism variance for (epsilon, delta)-DP: 2 ln(2/delta) / epsilon^2.
inline double dp_gaussian(double epsilon, double delta) {
  detail::check_epsilon(epsilon);
  detail::check_delta(delta);
  return 2.0 * std::log(2.0 / delta) / (epsilon * epsilon);
}

/// Laplace mechanism scale for epsilon-DP: b = 1 / epsilon.
inline double dp_laplace(double epsilon) {
  detail::check_epsilon(epsilon);
  return 1.0 / epsilon;
}

/// Noise scale after composing k queries: sigma^2 = 8k ln(e + epsilon/delta) /
/// epsilon^2 for the Gaussian mechanism; the Laplacian mechanism matches that
/// variance, 2 b^2 = sigma^2, and returns b.
inline double dp_composed(double epsilon, double delta, std::uint64_t k_queries,
                          DPMechanism mechanism) {
  detail::check_epsilon(epsilon);
  detail::check_delta(delta);
  if (k_queries < 1) throw Error(Errc::invalid_params, "k_queries must be at least 1");
  const double variance = 8.0 * static_cast<double>(k_queries) *
                          std::log(std::numbers::e + epsilon / delta) / (epsilon * epsilon);
  return mechanism == DPMechanism::gaussian ? variance : std::sqrt(variance / 2.0);
}

/// Fills in noise_scale. Single queries use the direct formulas; k > 1 uses
/// the composition bound.
inline DPParams calibrate(DPParams p) {
  if (p.k_queries < 1) throw Error(Errc::invalid_params, "k_queries must be at least 1");
  if (p.k_queries == 1 && p.mechanism == DPMechanism::laplacian) {
    p.noise_scale = dp_laplace(p.epsilon);
  } else if (p.k_queries == 1) {
    if (!p.delta) throw Error(Errc::invalid_params, "the Gaussian mechanism requires delta");
    p.noise_scale = dp_gaussian(p.epsilon, *p.delta);
  } else {
    if (!p.delta) throw Error(Errc::invalid_params, "the composition bound requires delta");
    p.noise_scale = dp_composed(p.epsilon, *p.delta, p.k_queries, p.mechanism);
  }
  return p;
}

}  // namespace lcon
