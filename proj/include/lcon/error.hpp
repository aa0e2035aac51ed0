// Error categories shared by every lcon module.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lcon {

enum class Errc {
  invalid_pmf,
  singular_noise,
  invalid_markov,
  symbol_out_of_range,
  table_too_large,
  infeasible_distortion,
  no_convergence,
  k_too_large,
  length_mismatch,
  shape_mismatch,
  codebook_too_large,
  index_out_of_range,
  zero_likelihood,
  invalid_params,
  corrupt_container,
  invalid_argument,
  config_error,
};

/// Coarse grouping used by the CLI to choose an exit code.
enum class ErrorClass { config, model, resource };

constexpr std::string_view to_string(Errc e) noexcept {
  switch (e) {
    case Errc::invalid_pmf: return "InvalidPMF";
    case Errc::singular_noise: return "SingularNoise";
    case Errc::invalid_markov: return "InvalidMarkov";
    case Errc::symbol_out_of_range: return "SymbolOutOfRange";
    case Errc::table_too_large: return "TableTooLarge";
    case Errc::infeasible_distortion: return "InfeasibleDistortion";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::k_too_large: return "KTooLarge";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::codebook_too_large: return "CodebookTooLarge";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::zero_likelihood: return "ZeroLikelihood";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::corrupt_container: return "CorruptContainer";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

constexpr ErrorClass error_class(Errc e) noexcept {
  switch (e) {
    case Errc::table_too_large:
    case Errc::codebook_too_large:
      return ErrorClass::resource;
    case Errc::config_error:
      return ErrorClass::config;
    default:
      return ErrorClass::model;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace lcon
