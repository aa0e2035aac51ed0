// The LCoN dataset pipeline (corrupt, compress with the matched distortion,
// store) and the Monte Carlo experiments built on the codec.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lcon/codec.hpp"
#include "lcon/container.hpp"
#include "lcon/empirical.hpp"
#include "lcon/error.hpp"
#include "lcon/model.hpp"
#include "lcon/parallel.hpp"
#include "lcon/rd.hpp"

namespace lcon {

inline constexpr double kDefaultRateMargin = 0.15;

/// First-order rate-distortion point of Z = X + N under the distortion induced
/// by `rho_noise` (N itself, or a component of it).
inline RDPoint symbol_rd_point(const SourceModel& source, const NoiseModel& channel,
                               const NoiseModel& rho_noise, double D) {
  const KTupleDist z = pass_through_noise(kth_order_dist(source, 1), channel);
  BlahutArimotoOptions opt;
  opt.throw_on_no_convergence = false;
  return blahut_arimoto(z, tuple_distortion(induced_distortion(rho_noise), 1), D, opt);
}

/// Codeword law for the matched codec: the output marginal of the optimal
/// test channel at D = H(N).
inline std::vector<double> matched_generator_marginal(const SourceModel& source,
                                                      const NoiseModel& noise) {
  return symbol_rd_point(source, noise, noise, noise.entropy()).output_marginal;
}

/// Alternative posterior draw used as an oracle next to the codec.
using PosteriorOracle =
    std::function<Sequence(std::span<const Symbol> z, std::uint64_t seed)>;

struct BlockCodecSpec {
  const SourceModel* source = nullptr;
  const NoiseModel* channel = nullptr;  ///< noise injected into each block
  DistortionMeasure rho;                ///< distortion the encoder minimizes
  std::size_t n = 0;
  std::size_t num_blocks = 0;
  double rate = 0.0;
  std::vector<double> generator;
  int max_k = 1;
  PosteriorOracle oracle;  ///< optional
  unsigned threads = 1;
};

struct BlockCodecResult {
  std::vector<TupleCounter> codec;   ///< joint (Z, Xhat) counts, index k-1
  std::vector<TupleCounter> oracle;  ///< joint (Z, oracle draw) counts, index k-1
  double distortion_sum = 0.0;       ///< over blocks with finite distortion
  std::uint64_t finite_blocks = 0;
  std::uint64_t flagged_blocks = 0;
  int bits_per_block = 0;

  double mean_distortion() const {
    return finite_blocks ? distortion_sum / static_cast<double>(finite_blocks) : 0.0;
  }

  void merge(const BlockCodecResult& other) {
    for (std::size_t i = 0; i < codec.size(); ++i) codec[i].merge(other.codec[i]);
    for (std::size_t i = 0; i < oracle.size(); ++i) oracle[i].merge(other.oracle[i]);
    distortion_sum += other.distortion_sum;
    finite_blocks += other.finite_blocks;
    flagged_blocks += other.flagged_blocks;
  }
};

namespace detail {

inline BlockCodecResult empty_result(int q, int max_k, bool with_oracle) {
  BlockCodecResult r;
  for (int k = 1; k <= max_k; ++k) {
    r.codec.emplace_back(q, k, true);
    if (with_oracle) r.oracle.emplace_back(q, k, true);
  }
  return r;
}

}  // namespace detail

/// Encodes `num_blocks` fresh blocks of the source, corrupted by `channel`,
/// with one random codebook. Block i uses seeds derived from (seed, i), so the
/// result does not depend on the thread count.
inline BlockCodecResult run_block_codec(const BlockCodecSpec& spec, std::uint64_t seed) {
  const int q = spec.source->q();
  if (spec.max_k < 1 || static_cast<std::size_t>(spec.max_k) > spec.n)
    throw Error(Errc::k_too_large, "k must lie in [1, n]");
  const Codebook book(q, spec.n, codebook_bits(spec.n, spec.rate), spec.generator,
                      derive_seed(seed, Stream::codebook));
  const Encoder encoder(book, spec.rho);
  const bool with_oracle = static_cast<bool>(spec.oracle);

  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (spec.num_blocks + kChunk - 1) / kChunk;
  std::vector<BlockCodecResult> partial(chunks);
  std::vector<double> distortion(spec.num_blocks, 0.0);
  std::vector<char> finite(spec.num_blocks, 0);

  parallel_for(chunks, spec.threads, [&](std::size_t c) {
    BlockCodecResult r = detail::empty_result(q, spec.max_k, with_oracle);
    const std::size_t end = std::min(spec.num_blocks, (c + 1) * kChunk);
    for (std::size_t b = c * kChunk; b < end; ++b) {
      const std::uint64_t block_seed = derive_seed(seed, Stream::block, b);
      const Sequence x = sample_source(*spec.source, spec.n, block_seed);
      const Sequence z = corrupt(x, *spec.channel, block_seed);
      const EncodeResult enc = encoder(z);
      const auto xhat = book.codeword(enc.index);
      for (auto& counter : r.codec) counter.add(z, xhat);
      if (with_oracle) {
        const Sequence post = spec.oracle(z, block_seed);
        for (auto& counter : r.oracle) counter.add(z, post);
      }
      if (enc.flagged) {
        ++r.flagged_blocks;
      } else {
        distortion[b] = enc.distortion;
        finite[b] = 1;
      }
    }
    partial[c] = std::move(r);
  });

  BlockCodecResult total = detail::empty_result(q, spec.max_k, with_oracle);
  total.bits_per_block = book.bits_per_block();
  for (const auto& r : partial) total.merge(r);
  // Summed in block order so the value is independent of scheduling.
  for (std::size_t b = 0; b < spec.num_blocks; ++b)
    if (finite[b]) {
      total.distortion_sum += distortion[b];
      ++total.finite_blocks;
    }
  return total;
}

struct TrendConfig {
  std::vector<std::size_t> n_grid{4, 8, 16};
  std::size_t num_blocks = 10000;
  std::size_t seeds = 32;
  double rate_margin = kDefaultRateMargin;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  bool with_oracle = true;
};

struct TrendPoint {
  std::size_t n = 0;
  int bits_per_block = 0;
  double code_rate = 0.0;
  double codec_tv = 0.0;   ///< TV(pooled k=1 joint of (Z, Xhat), P_{Z,X})
  double oracle_tv = 0.0;  ///< same for posterior samples of the same Z blocks
  double mean_distortion = 0.0;
  std::uint64_t flagged_blocks = 0;
};

/// Pools the k=1 joint law of (Z, Xhat) over `seeds` independent codebooks at
/// each block length and compares it with P_{Z,X}.
inline std::vector<TrendPoint> verify_trend(const SourceModel& source, const NoiseModel& noise,
                                            const TrendConfig& cfg) {
  const double rate = closed_form_rate(source, noise, 1) + cfg.rate_margin;
  const auto generator = matched_generator_marginal(source, noise);
  const KTupleDist target = noisy_kth_order_dist(source, noise, 1).joint;
  std::vector<TrendPoint> out;
  for (std::size_t n : cfg.n_grid) {
    BlockCodecSpec spec{&source, &noise, induced_distortion(noise), n, cfg.num_blocks,
                        rate, generator, 1, {}, cfg.threads};
    if (cfg.with_oracle)
      spec.oracle = [&](std::span<const Symbol> z, std::uint64_t s) {
        return posterior_sample(z, source, noise, s);
      };
    BlockCodecResult pooled = detail::empty_result(source.q(), 1, cfg.with_oracle);
    for (std::size_t t = 0; t < cfg.seeds; ++t) {
      const auto seed = derive_seed(derive_seed(cfg.master_seed, Stream::trial, t), Stream::block, n);
      const auto r = run_block_codec(spec, seed);
      pooled.merge(r);
      pooled.bits_per_block = r.bits_per_block;
    }
    TrendPoint p;
    p.n = n;
    p.bits_per_block = pooled.bits_per_block;
    p.code_rate = static_cast<double>(pooled.bits_per_block) / static_cast<double>(n);
    p.codec_tv = tv_distance(pooled.codec[0].distribution(DistKind::averaged), target);
    if (cfg.with_oracle)
      p.oracle_tv = tv_distance(pooled.oracle[0].distribution(DistKind::averaged), target);
    p.mean_distortion = pooled.mean_distortion();
    p.flagged_blocks = pooled.flagged_blocks;
    out.push_back(p);
  }
  return out;
}

struct SweepPoint {
  double distortion_level = 0.0;
  bool feasible = true;
  double rd_rate = 0.0;    ///< R(D) from Blahut-Arimoto
  double code_rate = 0.0;  ///< bits_per_block / n
  double tv = 0.0;         ///< TV(pooled k=1 joint of (Z, Xhat), P_{Z,X})
  double mean_distortion = 0.0;
};

/// Compresses at each D with the matched distortion measure (codeword law and
/// rate from the D-point of the rate-distortion curve) and measures the
/// distance of the reconstructions' joint law to P_{Z,X}.
inline std::vector<SweepPoint> sweep_distortion(const SourceModel& source,
                                                const NoiseModel& noise,
                                                std::span<const double> grid, std::size_t n,
                                                const TrendConfig& cfg) {
  const KTupleDist target = noisy_kth_order_dist(source, noise, 1).joint;
  std::vector<SweepPoint> out;
  for (double D : grid) {
    SweepPoint p;
    p.distortion_level = D;
    RDPoint rd;
    try {
      rd = symbol_rd_point(source, noise, noise, D);
    } catch (const Error& e) {
      if (e.code() != Errc::infeasible_distortion) throw;
      p.feasible = false;
      out.push_back(p);
      continue;
    }
    p.rd_rate = rd.rate;
    BlockCodecSpec spec{&source, &noise, induced_distortion(noise), n, cfg.num_blocks,
                        rd.rate + cfg.rate_margin, rd.output_marginal, 1, {}, cfg.threads};
    BlockCodecResult pooled = detail::empty_result(source.q(), 1, false);
    for (std::size_t t = 0; t < cfg.seeds; ++t) {
      const auto seed = derive_seed(derive_seed(cfg.master_seed, Stream::trial, t), Stream::block, n);
      const auto r = run_block_codec(spec, seed);
      pooled.merge(r);
      pooled.bits_per_block = r.bits_per_block;
    }
    p.code_rate = static_cast<double>(pooled.bits_per_block) / static_cast<double>(n);
    p.tv = tv_distance(pooled.codec[0].distribution(DistKind::averaged), target);
    p.mean_distortion = pooled.mean_distortion();
    out.push_back(p);
  }
  return out;
}

/// Exact P_{Z^k, Xtilde^k} with Xtilde = X + U and Z = Xtilde + W.
inline KTupleDist partially_noisy_target(const SourceModel& source, const NoiseModel& u,
                                         const NoiseModel& w, int k) {
  const KTupleDist tilde = pass_through_noise(kth_order_dist(source, k), u);
  return joint_through_noise(tilde, w);
}

struct CorollaryOrder {
  int k = 1;
  KTupleDist empirical;
  KTupleDist target;
  double tv = 0.0;
};

/// Posterior path: corrupt one length-n realization with N = U + W and draw
/// the partially noisy source from its posterior given Z.
inline std::vector<CorollaryOrder> corollary_experiment(const SourceModel& source,
                                                        const NoiseModel& u, const NoiseModel& w,
                                                        std::size_t n, std::uint64_t seed,
                                                        int max_k = 2) {
  const NoiseModel composed = compose_noise(u, w);
  const Sequence x = sample_source(source, n, seed);
  const Sequence z = corrupt(x, composed, seed);
  const Sequence xt = partial_posterior_sample(z, source, u, w, seed);
  std::vector<CorollaryOrder> out;
  for (int k = 1; k <= max_k; ++k) {
    CorollaryOrder o;
    o.k = k;
    o.empirical = joint_emp_dist(z, xt, k, source.q());
    o.target = partially_noisy_target(source, u, w, k);
    o.tv = tv_distance(o.empirical, o.target);
    out.push_back(std::move(o));
  }
  return out;
}

struct CorollaryTrendPoint {
  std::size_t n = 0;
  int bits_per_block = 0;
  double tv = 0.0;
  double mean_distortion = 0.0;
};

/// Operational path: corrupt with U + W, compress with the distortion induced
/// by W at level H(W), and compare against P_{Z, X+U}.
inline std::vector<CorollaryTrendPoint> corollary_operational(const SourceModel& source,
                                                              const NoiseModel& u,
                                                              const NoiseModel& w,
                                                              const TrendConfig& cfg) {
  const NoiseModel composed = compose_noise(u, w);
  const KTupleDist z_law = pass_through_noise(kth_order_dist(source, 1), composed);
  const double rate = entropy_bits(z_law) - w.entropy() + cfg.rate_margin;
  const auto generator = symbol_rd_point(source, composed, w, w.entropy()).output_marginal;
  const KTupleDist target = partially_noisy_target(source, u, w, 1);
  std::vector<CorollaryTrendPoint> out;
  for (std::size_t n : cfg.n_grid) {
    BlockCodecSpec spec{&source, &composed, induced_distortion(w), n, cfg.num_blocks,
                        rate, generator, 1, {}, cfg.threads};
    BlockCodecResult pooled = detail::empty_result(source.q(), 1, false);
    for (std::size_t t = 0; t < cfg.seeds; ++t) {
      const auto seed = derive_seed(derive_seed(cfg.master_seed, Stream::trial, t), Stream::block, n);
      const auto r = run_block_codec(spec, seed);
      pooled.merge(r);
      pooled.bits_per_block = r.bits_per_block;
    }
    out.push_back({n, pooled.bits_per_block,
                   tv_distance(pooled.codec[0].distribution(DistKind::averaged), target),
                   pooled.mean_distortion()});
  }
  return out;
}

struct DataBlock {
  Sequence symbols;
  std::optional<std::uint16_t> label;
};

struct ClassSummary {
  std::optional<std::uint16_t> label;
  std::size_t blocks = 0;
  std::uint64_t payload_bits = 0;
  double rate = 0.0;  ///< bits_per_block / n
  double mean_distortion = 0.0;
  std::uint64_t flagged_blocks = 0;
};

struct PreprocessOptions {
  double rate_margin = kDefaultRateMargin;
  /// Distortion level; H(N) when absent.
  std::optional<double> distortion;
  unsigned threads = 1;
};

struct PreprocessResult {
  EncodedDataset container;
  std::vector<Sequence> noisy;
  std::vector<Sequence> reconstructions;
  std::vector<ClassSummary> classes;
  double rate = 0.0;  ///< bits_per_block / n
};

/// Corrupts every block, compresses each label class with its own codebook at
/// the matched distortion level, and returns the container together with the
/// reconstructions it decodes to.
inline PreprocessResult lcon_preprocess(const std::vector<DataBlock>& dataset,
                                        const SourceModel& source, const NoiseModel& noise,
                                        const PreprocessOptions& opt, std::uint64_t seed) {
  if (dataset.empty()) throw Error(Errc::invalid_argument, "dataset has no blocks");
  if (source.q() != noise.q()) throw Error(Errc::shape_mismatch, "alphabet sizes differ");
  const std::size_t n = dataset.front().symbols.size();
  const bool labeled = dataset.front().label.has_value();
  for (const auto& b : dataset) {
    if (b.symbols.size() != n)
      throw Error(Errc::length_mismatch, "all blocks must have the same length");
    if (b.label.has_value() != labeled)
      throw Error(Errc::invalid_argument, "either every block or no block carries a label");
    check_symbols(b.symbols, source.q());
  }
  if (n == 0) throw Error(Errc::invalid_argument, "blocks must be non-empty");

  const double level = opt.distortion.value_or(noise.entropy());
  double base_rate = 0.0;
  std::vector<double> generator;
  if (opt.distortion) {
    const RDPoint rd = symbol_rd_point(source, noise, noise, level);
    base_rate = rd.rate;
    generator = rd.output_marginal;
  } else {
    base_rate = closed_form_rate(source, noise, 1);
    generator = matched_generator_marginal(source, noise);
  }
  const int bits = codebook_bits(n, base_rate + opt.rate_margin);

  PreprocessResult res;
  EncodedDataset& ds = res.container;
  ds.q = source.q();
  ds.n = static_cast<std::uint32_t>(n);
  ds.k = 1;
  ds.bits_per_block = bits;
  ds.codebook_seed = derive_seed(seed, Stream::codebook);
  ds.distortion_level = level;
  ds.noise_pmf = noise.pmf();
  ds.generator_marginal = generator;
  ds.indices.assign(dataset.size(), 0);
  if (labeled)
    for (const auto& b : dataset) ds.labels.push_back(*b.label);

  res.noisy.resize(dataset.size());
  res.reconstructions.resize(dataset.size());
  const DistortionMeasure rho = induced_distortion(noise);

  std::map<std::optional<std::uint16_t>, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < dataset.size(); ++i) classes[dataset[i].label].push_back(i);

  for (const auto& [label, members] : classes) {
    const Codebook book = rebuild_codebook(ds, label);
    const Encoder encoder(book, rho);
    std::vector<EncodeResult> enc(members.size());
    parallel_for(members.size(), opt.threads, [&](std::size_t j) {
      const std::size_t i = members[j];
      res.noisy[i] = corrupt(dataset[i].symbols, noise, derive_seed(seed, Stream::block, i));
      enc[j] = encoder(res.noisy[i]);
      res.reconstructions[i] = decode(enc[j].index, book);
      ds.indices[i] = enc[j].index;
    });
    ClassSummary s;
    s.label = label;
    s.blocks = members.size();
    s.payload_bits = static_cast<std::uint64_t>(members.size()) * static_cast<std::uint64_t>(bits);
    s.rate = book.rate();
    double sum = 0.0;
    std::size_t finite = 0;
    for (const auto& e : enc) {
      if (e.flagged) {
        ++s.flagged_blocks;
      } else {
        sum += e.distortion;
        ++finite;
      }
    }
    s.mean_distortion = finite ? sum / static_cast<double>(finite) : 0.0;
    res.classes.push_back(s);
  }
  res.rate = static_cast<double>(bits) / static_cast<double>(n);
  return res;
}

}  // namespace lcon
