// Experiment configuration: JSON schema, validation and model construction.
//
// {
//   "alphabet_size": 2,                                  required
//   "source": {"iid": [p0, ...]}                         required, one of
//           | {"markov": [[...], ...], "initial": [...]} ("initial" optional)
//   "noise": {"pmf": [...]}                              required, one of
//          | {"compose": {"u": [...], "w": [...]}}
//   "singular_tolerance": 1e-9,
//   "master_seed": 1,                                    required
//   "block_length": 16,
//   "num_blocks": 10000,
//   "trials": 32,                 independent codebooks per point
//   "k_orders": [1, 2],
//   "n_grid": [4, 8, 16],
//   "rate_margin": 0.15,
//   "distortion": 0.469,          D override
//   "distortion_grid": [...],     absolute D values
//   "distortion_grid_factors": [0.5, 0.75, 1, 1.25, 1.5],   multiples of H(N)
//   "rd_points": 41,
//   "posterior_length": 1000000,
//   "dataset": "blocks.txt",
//   "output": "out",
//   "privacy": {"epsilon": 1, "delta": 0.05, "k_queries": 1, "mechanism": "gaussian"}
// }
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcon/lcon.hpp"

namespace lcon::cli {

using nlohmann::json;

struct NoiseSpec {
  std::vector<double> pmf;
  std::optional<std::vector<double>> u, w;  ///< set for a composed noise

  bool composed() const { return u.has_value(); }
};

struct ExperimentConfig {
  int alphabet_size = 2;
  bool markov = false;
  std::vector<double> iid_pmf;
  std::vector<std::vector<double>> transition;
  std::optional<std::vector<double>> initial;
  NoiseSpec noise;
  double singular_tolerance = kSingularTolerance;
  std::uint64_t master_seed = 0;
  std::size_t block_length = 16;
  std::size_t num_blocks = 10000;
  std::size_t trials = 32;
  std::vector<int> k_orders{1};
  std::vector<std::size_t> n_grid{4, 8, 16};
  double rate_margin = kDefaultRateMargin;
  std::optional<double> distortion;
  std::optional<std::vector<double>> distortion_grid;
  std::optional<std::vector<double>> distortion_grid_factors;
  std::size_t rd_points = 41;
  std::size_t posterior_length = 1000000;
  std::optional<std::string> dataset;
  std::optional<std::string> output;
  std::optional<DPParams> privacy;

  /// FNV-1a of the canonical JSON text (keys sorted, no whitespace).
  std::uint64_t hash = 0;

  SourceModel source() const {
    if (!markov) return SourceModel::iid(iid_pmf);
    return initial ? SourceModel::markov(transition, *initial) : SourceModel::markov(transition);
  }

  NoiseModel channel() const {
    if (noise.composed())
      return compose_noise(build_noise(*noise.u, singular_tolerance),
                           build_noise(*noise.w, singular_tolerance), singular_tolerance);
    return build_noise(noise.pmf, singular_tolerance);
  }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[noreturn]] inline void fail(const std::string& what) { throw Error(Errc::config_error, what); }

inline void allow_keys(const json& j, const std::string& where, std::set<std::string> keys) {
  if (!j.is_object()) fail(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) fail("unknown key '" + k + "' in " + where);
}

inline std::vector<double> pmf_vector(const json& j, const std::string& where, int q) {
  if (!j.is_array()) fail(where + " must be an array of numbers");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) fail(where + " must contain only numbers");
    v.push_back(e.get<double>());
  }
  if (static_cast<int>(v.size()) != q)
    fail(where + " has " + std::to_string(v.size()) + " entries, alphabet_size is " +
         std::to_string(q));
  return v;
}

template <typename T>
T number(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) fail("'" + key + "' must be a number");
  } else {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail("'" + key + "' must be a non-negative integer");
  }
  return v.get<T>();
}

template <typename T>
std::vector<T> number_list(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.empty()) fail("'" + key + "' must be a non-empty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    json one = json::object({{key, v[i]}});
    out.push_back(number<T>(one, key));
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  using detail::fail;
  detail::allow_keys(j, "config",
                     {"alphabet_size", "source", "noise", "singular_tolerance", "master_seed",
                      "block_length", "num_blocks", "trials", "k_orders", "n_grid", "rate_margin",
                      "distortion", "distortion_grid", "distortion_grid_factors", "rd_points",
                      "posterior_length", "dataset", "output", "privacy"});
  ExperimentConfig c;
  for (const char* key : {"alphabet_size", "source", "noise", "master_seed"})
    if (!j.contains(key)) fail(std::string("missing required key '") + key + "'");
  c.alphabet_size = static_cast<int>(detail::number<std::uint64_t>(j, "alphabet_size"));
  if (c.alphabet_size < 2 || c.alphabet_size > kMaxAlphabet)
    fail("alphabet_size must lie in [2, 256]");
  const int q = c.alphabet_size;
  c.master_seed = detail::number<std::uint64_t>(j, "master_seed");

  const auto& src = j.at("source");
  detail::allow_keys(src, "source", {"iid", "markov", "initial"});
  if (src.contains("iid") == src.contains("markov"))
    fail("source needs exactly one of 'iid' or 'markov'");
  if (src.contains("iid")) {
    if (src.contains("initial")) fail("'initial' only applies to a markov source");
    c.iid_pmf = detail::pmf_vector(src.at("iid"), "source.iid", q);
  } else {
    c.markov = true;
    const auto& rows = src.at("markov");
    if (!rows.is_array() || static_cast<int>(rows.size()) != q)
      fail("source.markov must be a q x q array");
    for (const auto& row : rows) c.transition.push_back(detail::pmf_vector(row, "source.markov row", q));
    if (src.contains("initial")) c.initial = detail::pmf_vector(src.at("initial"), "source.initial", q);
  }

  const auto& noise = j.at("noise");
  detail::allow_keys(noise, "noise", {"pmf", "compose"});
  if (noise.contains("pmf") == noise.contains("compose"))
    fail("noise needs exactly one of 'pmf' or 'compose'");
  if (noise.contains("pmf")) {
    c.noise.pmf = detail::pmf_vector(noise.at("pmf"), "noise.pmf", q);
  } else {
    const auto& comp = noise.at("compose");
    detail::allow_keys(comp, "noise.compose", {"u", "w"});
    if (!comp.contains("u") || !comp.contains("w")) fail("noise.compose needs 'u' and 'w'");
    c.noise.u = detail::pmf_vector(comp.at("u"), "noise.compose.u", q);
    c.noise.w = detail::pmf_vector(comp.at("w"), "noise.compose.w", q);
  }

  if (j.contains("singular_tolerance")) {
    c.singular_tolerance = detail::number<double>(j, "singular_tolerance");
    if (!(c.singular_tolerance > 0.0)) fail("singular_tolerance must be positive");
  }
  if (j.contains("block_length")) c.block_length = detail::number<std::size_t>(j, "block_length");
  if (j.contains("num_blocks")) c.num_blocks = detail::number<std::size_t>(j, "num_blocks");
  if (j.contains("trials")) c.trials = detail::number<std::size_t>(j, "trials");
  if (j.contains("k_orders")) {
    c.k_orders.clear();
    for (auto k : detail::number_list<std::uint64_t>(j, "k_orders")) c.k_orders.push_back(int(k));
  }
  if (j.contains("n_grid")) c.n_grid = detail::number_list<std::size_t>(j, "n_grid");
  if (j.contains("rate_margin")) {
    c.rate_margin = detail::number<double>(j, "rate_margin");
    if (!(c.rate_margin >= 0.0)) fail("rate_margin must be non-negative");
  }
  if (j.contains("distortion")) c.distortion = detail::number<double>(j, "distortion");
  if (j.contains("distortion_grid"))
    c.distortion_grid = detail::number_list<double>(j, "distortion_grid");
  if (j.contains("distortion_grid_factors"))
    c.distortion_grid_factors = detail::number_list<double>(j, "distortion_grid_factors");
  if (c.distortion_grid && c.distortion_grid_factors)
    fail("give either distortion_grid or distortion_grid_factors, not both");
  if (j.contains("rd_points")) c.rd_points = detail::number<std::size_t>(j, "rd_points");
  if (j.contains("posterior_length"))
    c.posterior_length = detail::number<std::size_t>(j, "posterior_length");
  for (const char* key : {"dataset", "output"})
    if (j.contains(key) && !j.at(key).is_string()) fail(std::string("'") + key + "' must be a string");
  if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
  if (j.contains("output")) c.output = j.at("output").get<std::string>();

  if (j.contains("privacy")) {
    const auto& p = j.at("privacy");
    detail::allow_keys(p, "privacy", {"epsilon", "delta", "k_queries", "mechanism"});
    DPParams dp;
    if (!p.contains("epsilon")) fail("privacy.epsilon is required");
    dp.epsilon = detail::number<double>(p, "epsilon");
    if (p.contains("delta")) dp.delta = detail::number<double>(p, "delta");
    if (p.contains("k_queries")) dp.k_queries = detail::number<std::uint64_t>(p, "k_queries");
    if (p.contains("mechanism")) {
      const auto m = p.at("mechanism");
      if (m == "gaussian")
        dp.mechanism = DPMechanism::gaussian;
      else if (m == "laplacian")
        dp.mechanism = DPMechanism::laplacian;
      else
        fail("privacy.mechanism must be 'gaussian' or 'laplacian'");
    }
    c.privacy = dp;
  }

  if (c.block_length < 1) fail("block_length must be at least 1");
  if (c.num_blocks < 1 || c.trials < 1) fail("num_blocks and trials must be at least 1");
  if (c.rd_points < 2) fail("rd_points must be at least 2");
  if (c.posterior_length < 1) fail("posterior_length must be at least 1");
  for (int k : c.k_orders)
    if (k < 1 || static_cast<std::size_t>(k) > c.block_length)
      fail("k_orders must lie in [1, block_length]");
  for (std::size_t n : c.n_grid)
    if (n < 1) fail("n_grid entries must be positive");

  c.hash = detail::fnv1a(j.dump());
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::fail("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    detail::fail(std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace lcon::cli
