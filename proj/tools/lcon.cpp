#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

using namespace lcon;
using namespace lcon::cli;

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::config: return 2;
    case ErrorClass::model: return 3;
    case ErrorClass::resource: return 4;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lcon: noise injection followed by matched lossy compression"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_dir;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--out", out_dir, "output directory");

  auto* rd = app.add_subcommand("rd-curve", "rate-distortion curve with the closed-form marker");
  auto* pre = app.add_subcommand("preprocess", "corrupt, compress and store a dataset");
  std::string input;
  pre->add_option("--input", input, "dataset file (overrides the config)");
  auto* dec = app.add_subcommand("decode", "decode a container to reconstructions");
  std::string container;
  dec->add_option("--container", container, "container file")->required();
  auto* verify = app.add_subcommand("verify", "codec and posterior-oracle TV over the n grid");
  auto* sweep = app.add_subcommand("sweep-distortion", "TV to P_ZX across distortion levels");
  auto* privacy = app.add_subcommand("privacy-report", "leakage bound and cap");
  auto* cal = app.add_subcommand("calibrate", "DP noise scale");
  std::optional<double> epsilon, delta;
  std::optional<std::uint64_t> k_queries;
  std::optional<std::string> mechanism;
  cal->add_option("--epsilon", epsilon);
  cal->add_option("--delta", delta);
  cal->add_option("--k-queries", k_queries);
  cal->add_option("--mechanism", mechanism)->check(CLI::IsMember({"gaussian", "laplacian"}));
  auto* cor = app.add_subcommand("corollary", "partially noisy source: posterior and codec paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunContext ctx;
    ctx.threads = threads;
    std::optional<ExperimentConfig> cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (cfg) ctx.seed = seed.value_or(cfg->master_seed);
    const std::string out = !out_dir.empty() ? out_dir : (cfg && cfg->output ? *cfg->output : ".");
    ctx.out = out;

    if (*dec) return cmd_decode(container, ctx);
    if (*cal) {
      DPParams p = cfg && cfg->privacy ? *cfg->privacy : DPParams{};
      if (epsilon) p.epsilon = *epsilon;
      if (delta) p.delta = *delta;
      if (k_queries) p.k_queries = *k_queries;
      if (mechanism) p.mechanism = *mechanism == "gaussian" ? DPMechanism::gaussian : DPMechanism::laplacian;
      if (!cfg && !epsilon) throw Error(Errc::config_error, "calibrate needs --config or --epsilon");
      std::optional<std::uint64_t> hash;
      if (cfg) hash = cfg->hash;
      return cmd_calibrate(p, hash, cfg ? std::optional<std::uint64_t>(ctx.seed) : seed, ctx);
    }
    if (!cfg) throw Error(Errc::config_error, "--config is required");
    if (*rd) return cmd_rd_curve(*cfg, ctx);
    if (*verify) return cmd_verify(*cfg, ctx);
    if (*sweep) return cmd_sweep_distortion(*cfg, ctx);
    if (*privacy) return cmd_privacy_report(*cfg, ctx);
    if (*cor) return cmd_corollary(*cfg, ctx);
    if (*pre) {
      const std::string path = !input.empty() ? input : cfg->dataset.value_or("");
      if (path.empty()) throw Error(Errc::config_error, "preprocess needs --input or 'dataset'");
      return cmd_preprocess(*cfg, ctx, path);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(error_class(e.code()));
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: ConfigError: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: ConfigError: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
