// Subcommand implementations. Each writes its outputs under `out` and returns
// the process exit code.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "config.hpp"
#include "lcon/lcon.hpp"

namespace lcon::cli {

struct RunContext {
  std::filesystem::path out = ".";
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.12g}", v);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::optional<std::uint64_t> hash,
            std::optional<std::uint64_t> seed, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary) {
    if (!out_) throw Error(Errc::config_error, "cannot write " + path.string());
    out_ << "# config_hash=" << (hash ? fmt::format("{:016x}", *hash) : std::string("none"))
         << " seed=" << (seed ? std::to_string(*seed) : std::string("none")) << '\n';
    row(columns);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline std::filesystem::path prepare_out(const RunContext& ctx) {
  std::filesystem::create_directories(ctx.out);
  return ctx.out;
}

// Dataset text: one block per line, whitespace-separated symbols, optional
// trailing label=<id>. Blank lines and lines starting with '#' are skipped.
inline std::vector<DataBlock> read_dataset(std::istream& in, int q) {
  std::vector<DataBlock> blocks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream tokens(line);
    std::string tok;
    DataBlock b;
    const std::string where = "dataset line " + std::to_string(line_no);
    while (tokens >> tok) {
      if (b.label) throw Error(Errc::config_error, where + ": label must be the last token");
      std::size_t used = 0;
      unsigned long v = 0;
      const bool is_label = tok.rfind("label=", 0) == 0;
      const std::string digits = is_label ? tok.substr(6) : tok;
      try {
        if (digits.empty() || digits[0] == '-' || digits[0] == '+') throw std::invalid_argument(tok);
        v = std::stoul(digits, &used);
      } catch (const std::exception&) {
        throw Error(Errc::config_error, where + ": bad token '" + tok + "'");
      }
      if (used != digits.size()) throw Error(Errc::config_error, where + ": bad token '" + tok + "'");
      if (is_label) {
        if (v > 0xffff) throw Error(Errc::config_error, where + ": label exceeds 65535");
        b.label = static_cast<std::uint16_t>(v);
      } else {
        if (v >= static_cast<unsigned long>(q))
          throw Error(Errc::symbol_out_of_range, where + ": symbol " + tok + " >= q");
        b.symbols.push_back(static_cast<Symbol>(v));
      }
    }
    if (b.symbols.empty()) throw Error(Errc::config_error, where + ": block has no symbols");
    blocks.push_back(std::move(b));
  }
  return blocks;
}

inline void write_blocks(const std::filesystem::path& path, const std::vector<Sequence>& blocks,
                         const std::vector<std::uint16_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::config_error, "cannot write " + path.string());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = 0; j < blocks[i].size(); ++j)
      out << (j ? " " : "") << static_cast<int>(blocks[i][j]);
    if (!labels.empty()) out << " label=" << labels[i];
    out << '\n';
  }
}

inline std::vector<double> distortion_grid(const ExperimentConfig& c, const NoiseModel& noise,
                                           std::span<const double> default_factors) {
  std::vector<double> grid;
  if (c.distortion_grid) return *c.distortion_grid;
  const auto factors = c.distortion_grid_factors
                           ? *c.distortion_grid_factors
                           : std::vector<double>(default_factors.begin(), default_factors.end());
  for (double f : factors) grid.push_back(f * noise.entropy());
  return grid;
}

inline int cmd_rd_curve(const ExperimentConfig& c, const RunContext& ctx) {
  const auto src = c.source();
  const auto noise = c.channel();
  CsvWriter csv(prepare_out(ctx) / "rd_curve.csv", c.hash, ctx.seed,
                {"k", "D", "rate", "kind", "status"});
  BlahutArimotoOptions opt;
  opt.throw_on_no_convergence = false;
  for (int k : c.k_orders) {
    const KTupleDist z = pass_through_noise(kth_order_dist(src, k), noise);
    const DistortionMatrix rho = tuple_distortion(induced_distortion(noise), k);
    std::vector<double> grid;
    if (c.distortion_grid || c.distortion_grid_factors) {
      grid = distortion_grid(c, noise, std::vector<double>{});
    } else {
      const double lo = min_distortion(z.table, rho);
      double hi = zero_rate_distortion(z.table, rho);
      if (!std::isfinite(hi)) hi = lo + 2.0 * std::log2(static_cast<double>(c.alphabet_size));
      for (std::size_t i = 0; i < c.rd_points; ++i)
        grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(c.rd_points - 1));
    }
    for (double D : grid) {
      try {
        const RDPoint pt = blahut_arimoto(z, rho, D, opt);
        csv.row({std::to_string(k), num(D), num(pt.rate), "blahut_arimoto",
                 pt.converged ? "ok" : "no_convergence"});
      } catch (const Error& e) {
        if (e.code() != Errc::infeasible_distortion) throw;
        csv.row({std::to_string(k), num(D), "", "blahut_arimoto", "infeasible"});
      }
    }
    csv.row({std::to_string(k), num(noise.entropy()), num(closed_form_rate(src, noise, k)),
             "closed_form_marker", "ok"});
  }
  return 0;
}

inline int cmd_verify(const ExperimentConfig& c, const RunContext& ctx) {
  const auto src = c.source();
  const auto noise = c.channel();
  TrendConfig cfg;
  cfg.n_grid = c.n_grid;
  cfg.num_blocks = c.num_blocks;
  cfg.seeds = c.trials;
  cfg.rate_margin = c.rate_margin;
  cfg.master_seed = ctx.seed;
  cfg.threads = ctx.threads;
  const auto pts = verify_trend(src, noise, cfg);
  CsvWriter csv(prepare_out(ctx) / "verify.csv", c.hash, ctx.seed,
                {"n", "bits_per_block", "code_rate", "codec_tv", "oracle_tv", "mean_distortion",
                 "flagged_blocks"});
  for (const auto& p : pts)
    csv.row({std::to_string(p.n), std::to_string(p.bits_per_block), num(p.code_rate),
             num(p.codec_tv), num(p.oracle_tv), num(p.mean_distortion),
             std::to_string(p.flagged_blocks)});
  return 0;
}

inline int cmd_sweep_distortion(const ExperimentConfig& c, const RunContext& ctx) {
  const auto src = c.source();
  const auto noise = c.channel();
  static const std::vector<double> kFactors{0.5, 0.75, 1.0, 1.25, 1.5};
  const auto grid = distortion_grid(c, noise, kFactors);
  TrendConfig cfg;
  cfg.num_blocks = c.num_blocks;
  cfg.seeds = c.trials;
  cfg.rate_margin = c.rate_margin;
  cfg.master_seed = ctx.seed;
  cfg.threads = ctx.threads;
  const auto pts = sweep_distortion(src, noise, grid, c.block_length, cfg);
  CsvWriter csv(prepare_out(ctx) / "sweep_distortion.csv", c.hash, ctx.seed,
                {"D", "D_over_HN", "feasible", "rd_rate", "code_rate", "tv_to_P_ZX",
                 "mean_distortion"});
  const double hn = noise.entropy();
  for (const auto& p : pts) {
    const std::string ratio = hn > 0.0 ? num(p.distortion_level / hn) : "";
    if (!p.feasible) {
      csv.row({num(p.distortion_level), ratio, "0", "", "", "", ""});
      continue;
    }
    csv.row({num(p.distortion_level), ratio, "1", num(p.rd_rate), num(p.code_rate), num(p.tv),
             num(p.mean_distortion)});
  }
  return 0;
}

inline int cmd_privacy_report(const ExperimentConfig& c, const RunContext& ctx) {
  const auto src = c.source();
  const auto noise = c.channel();
  std::vector<std::size_t> lengths = c.n_grid;
  lengths.push_back(c.block_length);
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  const auto dir = prepare_out(ctx);
  CsvWriter csv(dir / "privacy_report.csv", c.hash, ctx.seed,
                {"n", "leakage_lower", "leakage_upper", "leakage_cap", "exact"});
  std::ofstream text(dir / "privacy_report.txt", std::ios::binary);
  if (!text) throw Error(Errc::config_error, "cannot write privacy_report.txt");
  text << "noise entropy H(N) = " << num(noise.entropy()) << " bits\n";
  text << "leakage cap log2(q) - H(N) = " << num(leakage_cap(noise)) << " bits per component\n";
  PrivacyReport last;
  for (std::size_t n : lengths) {
    last = privacy_report(src, noise, n);
    csv.row({std::to_string(n), num(last.leakage_upper.lower), num(last.leakage_upper.upper),
             num(last.leakage_cap), last.leakage_upper.exact() ? "1" : "0"});
    text << "n = " << n << ": leakage per component <= " << num(last.leakage_upper.upper);
    if (!last.leakage_upper.exact()) text << " (bracket from " << num(last.leakage_upper.lower) << ")";
    text << '\n';
  }
  text << "assumptions:\n";
  for (const auto& a : last.assumptions) text << "  - " << a << '\n';
  text.close();
  std::ifstream back(dir / "privacy_report.txt");
  std::cout << back.rdbuf();
  return 0;
}

inline int cmd_calibrate(const DPParams& params, std::optional<std::uint64_t> hash,
                         std::optional<std::uint64_t> seed, const RunContext& ctx) {
  const DPParams p = calibrate(params);
  CsvWriter csv(prepare_out(ctx) / "calibrate.csv", hash, seed,
                {"epsilon", "delta", "k_queries", "mechanism", "noise_scale", "scale_kind"});
  const bool gaussian = p.mechanism == DPMechanism::gaussian;
  csv.row({num(p.epsilon), p.delta ? num(*p.delta) : "", std::to_string(p.k_queries),
           gaussian ? "gaussian" : "laplacian", num(p.noise_scale), gaussian ? "variance" : "b"});
  std::cout << (gaussian ? "sigma^2 = " : "b = ") << num(p.noise_scale) << '\n';
  return 0;
}

inline int cmd_corollary(const ExperimentConfig& c, const RunContext& ctx) {
  if (!c.noise.composed())
    throw Error(Errc::config_error, "corollary needs noise.compose with 'u' and 'w'");
  const auto src = c.source();
  const auto u = build_noise(*c.noise.u, c.singular_tolerance);
  const auto w = build_noise(*c.noise.w, c.singular_tolerance);
  const int max_k = *std::max_element(c.k_orders.begin(), c.k_orders.end());
  if (static_cast<std::size_t>(max_k) > c.posterior_length)
    throw Error(Errc::config_error, "k_orders exceed posterior_length");
  const auto post = corollary_experiment(src, u, w, c.posterior_length, ctx.seed, max_k);
  TrendConfig cfg;
  cfg.n_grid = c.n_grid;
  cfg.num_blocks = c.num_blocks;
  cfg.seeds = c.trials;
  cfg.rate_margin = c.rate_margin;
  cfg.master_seed = ctx.seed;
  cfg.threads = ctx.threads;
  const auto op = corollary_operational(src, u, w, cfg);
  CsvWriter csv(prepare_out(ctx) / "corollary.csv", c.hash, ctx.seed,
                {"path", "n", "k", "tv_to_partially_noisy_target", "mean_distortion",
                 "bits_per_block"});
  for (const auto& o : post)
    if (std::find(c.k_orders.begin(), c.k_orders.end(), o.k) != c.k_orders.end())
      csv.row({"posterior", std::to_string(c.posterior_length), std::to_string(o.k), num(o.tv), "",
               ""});
  for (const auto& p : op)
    csv.row({"operational", std::to_string(p.n), "1", num(p.tv), num(p.mean_distortion),
             std::to_string(p.bits_per_block)});
  return 0;
}

inline int cmd_preprocess(const ExperimentConfig& c, const RunContext& ctx,
                          const std::string& input) {
  std::ifstream in(input);
  if (!in) throw Error(Errc::config_error, "cannot open dataset " + input);
  const auto blocks = read_dataset(in, c.alphabet_size);
  const auto src = c.source();
  const auto noise = c.channel();
  PreprocessOptions opt;
  opt.rate_margin = c.rate_margin;
  opt.distortion = c.distortion;
  opt.threads = ctx.threads;
  const auto res = lcon_preprocess(blocks, src, noise, opt, ctx.seed);
  const auto dir = prepare_out(ctx);
  write_container_file((dir / "encoded.lcon").string(), res.container);
  write_blocks(dir / "reconstructions.txt", res.reconstructions, res.container.labels);
  const std::size_t n = res.container.n;
  const auto leak = leakage_upper_bound(src, noise, n);
  CsvWriter csv(dir / "summary.csv", c.hash, ctx.seed,
                {"label", "blocks", "n", "bits_per_block", "rate", "mean_distortion",
                 "flagged_blocks", "payload_bits", "leakage_upper", "leakage_cap"});
  for (const auto& cls : res.classes) {
    csv.row({cls.label ? std::to_string(*cls.label) : "all", std::to_string(cls.blocks),
             std::to_string(n), std::to_string(res.container.bits_per_block), num(cls.rate),
             num(cls.mean_distortion), std::to_string(cls.flagged_blocks),
             std::to_string(cls.payload_bits), num(leak.upper), num(leakage_cap(noise))});
  }
  std::cout << "blocks=" << blocks.size() << " n=" << n << " rate=" << num(res.rate)
            << " bits/symbol leakage<=" << num(leak.upper) << " cap=" << num(leakage_cap(noise))
            << '\n';
  return 0;
}

inline int cmd_decode(const std::string& container, const RunContext& ctx) {
  const auto ds = read_container_file(container);
  write_blocks(prepare_out(ctx) / "reconstructions.txt", decode_dataset(ds), ds.labels);
  return 0;
}

}  // namespace lcon::cli
