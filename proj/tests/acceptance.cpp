// Acceptance checks, one PASS/FAIL line each. Exit status is the number of
// failed checks.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lcon/lcon.hpp"

namespace {

using namespace lcon;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> random_pmf(std::mt19937_64& gen, int q, double floor) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  std::vector<double> p(static_cast<std::size_t>(q));
  for (auto& v : p) v = u(gen);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= s;
  return p;
}

NoiseModel random_noise(std::mt19937_64& gen, int q) {
  for (;;) {
    auto p = random_pmf(gen, q, 0.0);
    // Concentrate mass on 0 so draws look like noise rather than scrambling.
    p[0] += 1.5;
    for (auto& v : p) v /= 2.5;
    try {
      return build_noise(p);
    } catch (const Error&) {
    }
  }
}

Outcome closed_form_vs_solver() {
  std::mt19937_64 gen(1001);
  double worst = 0.0;
  int pairs = 0;
  for (int t = 0; t < 20; ++t) {
    const int q = 2 + t % 2;
    const NoiseModel noise = random_noise(gen, q);
    SourceModel src = SourceModel::iid(random_pmf(gen, q, 0.05));
    if (t % 4 >= 2) {
      std::vector<std::vector<double>> rows;
      for (int i = 0; i < q; ++i) rows.push_back(random_pmf(gen, q, 0.05));
      src = SourceModel::markov(rows);
    }
    for (int k = 1; k <= 2; ++k) {
      const KTupleDist z = pass_through_noise(kth_order_dist(src, k), noise);
      const RDPoint pt =
          blahut_arimoto(z, tuple_distortion(induced_distortion(noise), k), noise.entropy());
      worst = std::max(worst, std::abs(pt.rate - closed_form_rate(src, noise, k)));
    }
    ++pairs;
  }
  return {worst < 1e-3, std::to_string(pairs) + " pairs x k in {1,2}, max |R_BA - R_closed| = " +
                            fmt("%.3e", worst)};
}

Outcome max_entropy_fixed_point() {
  std::mt19937_64 gen(2002);
  double worst_fp = 0.0, worst_concave = 0.0, worst_mono = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int q = 2 + t % 5;
    const NoiseModel noise = random_noise(gen, q);
    worst_fp = std::max(worst_fp, std::abs(max_entropy(noise, noise.entropy()) - noise.entropy()));
    const auto rho = induced_distortion(noise);
    const double lo = *std::min_element(rho.rho.begin(), rho.rho.end());
    const double mean = std::accumulate(rho.rho.begin(), rho.rho.end(), 0.0) / q;
    const double hi = lo + 1.2 * (mean - lo);
    std::vector<double> phi;
    for (int i = 0; i < 50; ++i) phi.push_back(max_entropy(noise, lo + (hi - lo) * i / 49.0));
    for (std::size_t i = 1; i < phi.size(); ++i) worst_mono = std::max(worst_mono, phi[i - 1] - phi[i]);
    for (std::size_t i = 1; i + 1 < phi.size(); ++i)
      worst_concave = std::max(worst_concave, 0.5 * (phi[i - 1] + phi[i + 1]) - phi[i]);
  }
  const bool pass = worst_fp < 1e-9 && worst_mono <= 1e-12 && worst_concave <= 1e-9;
  return {pass, "100 PMFs: max |phi(H)-H| = " + fmt("%.2e", worst_fp) +
                    ", max decrease = " + fmt("%.2e", worst_mono) +
                    ", max convexity defect = " + fmt("%.2e", worst_concave)};
}

double multinomial_band(const KTupleDist& p, double n) {
  double s = 0.0;
  for (double v : p.table) s += 4.0 * std::sqrt(v * (1 - v) / n);
  return 0.5 * s;
}

Outcome posterior_oracle() {
  const std::size_t n = 1000000;
  const auto noise = build_noise({0.9, 0.1});
  const std::vector<std::pair<std::string, SourceModel>> configs{
      {"iid", SourceModel::iid({0.3, 0.7})},
      {"markov", SourceModel::markov({{0.9, 0.1}, {0.2, 0.8}})},
  };
  bool pass = true;
  std::string detail;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& [name, src] = configs[c];
    const Sequence x = sample_source(src, n, 300 + c);
    const Sequence z = corrupt(x, noise, 300 + c);
    const Sequence post = posterior_sample(z, src, noise, 400 + c);
    for (int k = 1; k <= 2; ++k) {
      const auto exact = noisy_kth_order_dist(src, noise, k).joint;
      const double tv = tv_distance(joint_emp_dist(z, post, k, 2), exact);
      pass = pass && tv < 0.01;
      detail += name + " k=" + std::to_string(k) + " tv=" + fmt("%.5f", tv) + " (band " +
                fmt("%.4f", multinomial_band(exact, double(n))) + ") ";
    }
  }
  return {pass, detail};
}

Outcome codec_trend() {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = build_noise({0.9, 0.1});
  TrendConfig cfg;
  cfg.master_seed = 4004;
  cfg.with_oracle = false;
  const auto pts = verify_trend(src, noise, cfg);
  bool decreasing = true;
  for (std::size_t i = 1; i < pts.size(); ++i)
    decreasing = decreasing && pts[i].codec_tv < pts[i - 1].codec_tv;
  const double d16 = pts.back().mean_distortion;
  std::string detail;
  for (const auto& p : pts)
    detail += "n=" + std::to_string(p.n) + " tv=" + fmt("%.5f", p.codec_tv) + " ";
  detail += "distortion(n=16)=" + fmt("%.4f", d16);
  return {decreasing && d16 >= 0.42 && d16 <= 0.57, detail};
}

Outcome matched_sweep() {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = build_noise({0.9, 0.1});
  TrendConfig cfg;
  cfg.master_seed = 5005;
  std::vector<double> grid;
  for (double f : {0.5, 0.75, 1.0, 1.25, 1.5}) grid.push_back(f * noise.entropy());
  const auto pts = sweep_distortion(src, noise, grid, 16, cfg);
  std::size_t best = 0;
  std::string detail;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].feasible && (!pts[best].feasible || pts[i].tv < pts[best].tv)) best = i;
    detail += fmt("D=%.3f", pts[i].distortion_level) +
              (pts[i].feasible ? " tv=" + fmt("%.5f", pts[i].tv) : std::string(" infeasible")) + " ";
  }
  return {best == 2, detail + "argmin at index " + std::to_string(best)};
}

Outcome corollary() {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto u = build_noise({0.9, 0.1});
  const auto w = build_noise({0.9, 0.1});
  const auto post = corollary_experiment(src, u, w, 1000000, 6006);
  TrendConfig cfg;
  cfg.master_seed = 6007;
  cfg.with_oracle = false;
  const auto op = corollary_operational(src, u, w, cfg);
  bool pass = true;
  std::string detail;
  for (const auto& o : post) {
    pass = pass && o.tv < 0.01;
    detail += "posterior k=" + std::to_string(o.k) + " tv=" + fmt("%.5f", o.tv) + " ";
  }
  for (std::size_t i = 0; i < op.size(); ++i) {
    if (i) pass = pass && op[i].tv < op[i - 1].tv;
    detail += "n=" + std::to_string(op[i].n) + " tv=" + fmt("%.5f", op[i].tv) + " ";
  }
  return {pass, detail};
}

// Largest deviation of the exact Z^n law from uniform.
double distance_from_uniform(const SourceModel& src, const NoiseModel& noise, int n) {
  const auto z = pass_through_noise(kth_order_dist(src, n), noise);
  const double u = 1.0 / static_cast<double>(z.table.size());
  double worst = 0.0;
  for (double p : z.table) worst = std::max(worst, std::abs(p - u));
  return worst;
}

Outcome privacy_identity() {
  const auto n2 = build_noise({0.9, 0.1});
  const auto n3 = build_noise({0.7, 0.2, 0.1});
  const std::vector<std::pair<SourceModel, const NoiseModel*>> models{
      {SourceModel::iid({0.5, 0.5}), &n2},
      {SourceModel::iid({0.25, 0.75}), &n2},
      {SourceModel::iid({1.0 / 3, 1.0 / 3, 1.0 / 3}), &n3},
      {SourceModel::iid({0.5, 0.3, 0.2}), &n3},
      {SourceModel::markov({{0.9, 0.1}, {0.2, 0.8}}), &n2},
      {SourceModel::markov({{0.7, 0.3}, {0.3, 0.7}}), &n2},
      {SourceModel::markov({{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.3, 0.3, 0.4}}), &n3},
  };
  double worst_identity = 0.0;
  bool cap_ok = true;
  for (const auto& [src, noise] : models)
    for (int n : {1, 2, 4, 6}) {
      const auto leak = leakage_upper_bound(src, *noise, static_cast<std::uint64_t>(n));
      const auto need = rate_needed(src, *noise, static_cast<std::uint64_t>(n));
      worst_identity = std::max({worst_identity, std::abs(leak.lower - need.lower),
                                 std::abs(leak.upper - need.upper)});
      const double cap = leakage_cap(*noise);
      const bool uniform = distance_from_uniform(src, *noise, n) < 1e-12;
      const bool at_cap = std::abs(leak.upper - cap) < 1e-12;
      cap_ok = cap_ok && leak.upper <= cap + 1e-12 && uniform == at_cap;
    }
  const double near = leakage_cap(build_noise({0.51, 0.49}));
  const bool pass = worst_identity < 1e-12 && cap_ok && std::abs(near - 0.00029) <= 1e-5;
  return {pass, "max |leakage - rate_needed| = " + fmt("%.2e", worst_identity) +
                    ", cap/equality " + (cap_ok ? "ok" : "violated") +
                    ", cap[0.51,0.49] = " + fmt("%.6f", near)};
}

Outcome dp_calibration() {
  const double g = dp_gaussian(1.0, 0.05);
  const double c = dp_composed(1.0, 0.05, 10, DPMechanism::gaussian);
  const double l = dp_laplace(0.5);
  double scale_err = 0.0;
  for (double eps : {0.1, 0.5, 2.0, 4.0}) {
    const double r = dp_gaussian(eps, 0.05) * eps * eps / g;
    scale_err = std::max(scale_err, std::abs(r - 1.0));
    const double rc = dp_composed(eps, 0.05, 1, DPMechanism::gaussian) * eps * eps /
                      dp_composed(1.0, 0.05 / eps, 1, DPMechanism::gaussian);
    scale_err = std::max(scale_err, std::abs(rc - 1.0));
  }
  const double base = dp_composed(1.0, 0.05, 1, DPMechanism::gaussian);
  for (std::uint64_t k : {2u, 5u, 10u, 100u})
    scale_err = std::max(scale_err,
                         std::abs(dp_composed(1.0, 0.05, k, DPMechanism::gaussian) /
                                      (static_cast<double>(k) * base) -
                                  1.0));
  const bool pass = std::abs(g - 7.37776) <= 1e-5 && std::abs(c - 249.87) <= 0.01 && l == 2.0 &&
                    scale_err <= 1e-12;
  return {pass, "gaussian=" + fmt("%.6f", g) + " composed(k=10)=" + fmt("%.6f", c) +
                    " (expected 249.87+-0.01) laplace=" + fmt("%.6f", l) +
                    " scaling err=" + fmt("%.1e", scale_err)};
}

Outcome expectation_identity() {
  const std::size_t trials = 100000;
  const std::vector<std::vector<double>> t{{0.8, 0.2}, {0.35, 0.65}};
  const auto chain = SourceModel::markov(t);
  double worst = 0.0;
  for (std::size_t n : {4u, 16u, 64u}) {
    // Chain started in state 0, so window laws drift with position.
    SequenceSampler cold = [&](std::uint64_t seed) {
      Rng rng(seed);
      Sequence x(n);
      x[0] = 0;
      for (std::size_t i = 1; i < n; ++i) x[i] = rng.uniform() < t[x[i - 1]][1] ? 1 : 0;
      return x;
    };
    SequenceSampler stationary = [&](std::uint64_t seed) { return sample_source(chain, n, seed); };
    for (int k = 1; k <= 3; ++k) {
      const std::size_t m = std::size_t{1} << k;
      std::vector<double> exact(m, 0.0);
      std::vector<double> mu{1.0, 0.0};
      for (std::size_t j = 0; j + std::size_t(k) <= n; ++j) {
        for (std::size_t tup = 0; tup < m; ++tup) {
          int prev = (tup >> (k - 1)) & 1;
          double p = mu[std::size_t(prev)];
          for (int l = 1; l < k; ++l) {
            const int cur = (tup >> (k - 1 - l)) & 1;
            p *= t[std::size_t(prev)][std::size_t(cur)];
            prev = cur;
          }
          exact[tup] += p / double(n - std::size_t(k) + 1);
        }
        mu = {mu[0] * t[0][0] + mu[1] * t[1][0], mu[0] * t[0][1] + mu[1] * t[1][1]};
      }
      const auto est = ave_dist(cold, k, 2, trials, 9000 + n * 10 + std::size_t(k));
      double tv = 0.0;
      for (std::size_t i = 0; i < m; ++i) tv += 0.5 * std::abs(est.table[i] - exact[i]);
      worst = std::max(worst, tv);
      const auto est_s = ave_dist(stationary, k, 2, trials, 9500 + n * 10 + std::size_t(k));
      worst = std::max(worst, tv_distance(est_s, kth_order_dist(chain, k)));
    }
  }
  return {worst < 0.01, "n in {4,16,64}, k<=3, 1e5 trials: max TV = " + fmt("%.5f", worst)};
}

Outcome container_round_trip() {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = build_noise({0.9, 0.1});
  bool pass = true;
  std::size_t flips = 0, detected = 0;
  for (bool labeled : {false, true}) {
    std::vector<DataBlock> data;
    for (std::uint64_t i = 0; i < 200; ++i) {
      DataBlock b{sample_source(src, 16, 10000 + i), std::nullopt};
      if (labeled) b.label = static_cast<std::uint16_t>(i % 4);
      data.push_back(b);
    }
    const std::uint64_t seed = 10010;
    const auto res = lcon_preprocess(data, src, noise, {}, seed);
    const std::string path = "acceptance_container.lcon";
    write_container_file(path, res.container);
    const auto back = read_container_file(path);
    std::remove(path.c_str());
    pass = pass && decode_dataset(back) == res.reconstructions;

    const auto generator = matched_generator_marginal(src, noise);
    std::vector<std::optional<std::uint16_t>> labels{std::nullopt};
    if (labeled) labels = {0, 1, 2, 3};
    for (const auto& label : labels) {
      const Codebook direct(2, 16, res.container.bits_per_block, generator,
                            class_codebook_seed(derive_seed(seed, Stream::codebook), label));
      pass = pass && rebuild_codebook(back, label).symbols() == direct.symbols();
    }

    const auto bytes = write_container(back);
    for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
      auto bad = bytes;
      bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      ++flips;
      try {
        read_container(bad);
      } catch (const Error& e) {
        if (e.code() == Errc::corrupt_container) ++detected;
      }
    }
  }
  pass = pass && flips == detected;
  return {pass, "decode identical, codebooks identical, " + std::to_string(detected) + "/" +
                    std::to_string(flips) + " bit flips detected"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"closed-form rate vs Blahut-Arimoto", closed_form_vs_solver},
      {"max-entropy fixed point, concave and non-decreasing", max_entropy_fixed_point},
      {"posterior sampling joint law at n=1e6", posterior_oracle},
      {"codec trend over n, distortion near H(N)", codec_trend},
      {"distortion sweep minimized at H(N)", matched_sweep},
      {"partially noisy source, posterior and operational", corollary},
      {"leakage equals rate, bounded by cap", privacy_identity},
      {"DP calibration values and scaling", dp_calibration},
      {"Monte Carlo Q^emp average vs exact Q^ave", expectation_identity},
      {"container round trip, CRC, codebook rebuild", container_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, checks[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed;
}
