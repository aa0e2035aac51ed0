#include <gtest/gtest.h>

#include <vector>

#include "lcon/pipeline.hpp"

namespace {

using namespace lcon;

TEST(BlockCodec, IndependentOfThreadCount) {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = build_noise({0.9, 0.1});
  BlockCodecSpec spec{&src, &noise, induced_distortion(noise), 8, 3000,
                      closed_form_rate(src, noise, 1) + 0.15,
                      matched_generator_marginal(src, noise), 2, {}, 1};
  const auto one = run_block_codec(spec, 11);
  spec.threads = 4;
  const auto four = run_block_codec(spec, 11);
  EXPECT_EQ(one.codec[0].counts(), four.codec[0].counts());
  EXPECT_EQ(one.codec[1].counts(), four.codec[1].counts());
  EXPECT_EQ(one.distortion_sum, four.distortion_sum);
  EXPECT_EQ(one.bits_per_block, codebook_bits(8, spec.rate));
  EXPECT_EQ(one.codec[0].windows(), 3000u * 8u);
}

TEST(Trend, SmallRunIsDeterministicWithOracleInBand) {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = build_noise({0.9, 0.1});
  TrendConfig cfg;
  cfg.n_grid = {4, 8};
  cfg.num_blocks = 2000;
  cfg.seeds = 4;
  cfg.master_seed = 5;
  const auto a = verify_trend(src, noise, cfg);
  cfg.threads = 3;
  const auto b = verify_trend(src, noise, cfg);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].codec_tv, b[i].codec_tv);
    EXPECT_EQ(a[i].mean_distortion, b[i].mean_distortion);
    // 4 cells, 8000 blocks of n symbols each
    EXPECT_LT(a[i].oracle_tv, 0.02);
  }
  EXPECT_GT(a[0].codec_tv, a[1].codec_tv);
}

TEST(Trend, ZeroNoiseIsLossless) {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = zero_noise(2);
  TrendConfig cfg;
  cfg.n_grid = {4};
  cfg.num_blocks = 2000;
  cfg.seeds = 2;
  cfg.rate_margin = 1.0;
  const auto p = verify_trend(src, noise, cfg).front();
  EXPECT_EQ(p.flagged_blocks, 0u);
  EXPECT_DOUBLE_EQ(p.mean_distortion, 0.0);
  EXPECT_NEAR(p.codec_tv, 0.0, 0.02);
}

TEST(Sweep, InfeasibleLevelIsFlagged) {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = build_noise({0.9, 0.1});
  TrendConfig cfg;
  cfg.num_blocks = 300;
  cfg.seeds = 2;
  const std::vector<double> grid{0.05, noise.entropy()};
  const auto pts = sweep_distortion(src, noise, grid, 8, cfg);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_FALSE(pts[0].feasible);
  EXPECT_TRUE(pts[1].feasible);
  EXPECT_NEAR(pts[1].rd_rate, 1.0 - noise.entropy(), 1e-6);
}

TEST(Corollary, PosteriorPathAndTarget) {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto u = build_noise({0.9, 0.1});
  const auto w = build_noise({0.9, 0.1});
  const auto target = partially_noisy_target(src, u, w, 1);
  // P(z, x+u): x+u ~ Bern(0.5), z differs with probability 0.1.
  EXPECT_NEAR(target.table[0], 0.45, 1e-15);
  EXPECT_NEAR(target.table[1], 0.05, 1e-15);
  const auto res = corollary_experiment(src, u, w, 200000, 3);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_LT(res[0].tv, 0.01);
  EXPECT_LT(res[1].tv, 0.01);
}

std::vector<DataBlock> toy_dataset(bool labeled) {
  const auto src = SourceModel::iid({0.5, 0.5});
  std::vector<DataBlock> data;
  for (std::uint64_t i = 0; i < 40; ++i) {
    DataBlock b{sample_source(src, 12, i), std::nullopt};
    if (labeled) b.label = static_cast<std::uint16_t>(i % 3);
    data.push_back(b);
  }
  return data;
}

TEST(Preprocess, ContainerDecodesToReconstructions) {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = build_noise({0.9, 0.1});
  for (bool labeled : {false, true}) {
    const auto data = toy_dataset(labeled);
    const auto res = lcon_preprocess(data, src, noise, {}, 77);
    const auto bytes = write_container(res.container);
    const auto back = read_container(bytes);
    EXPECT_EQ(decode_dataset(back), res.reconstructions);
    EXPECT_EQ(res.classes.size(), labeled ? 3u : 1u);
    EXPECT_DOUBLE_EQ(res.rate, double(back.bits_per_block) / 12.0);
    EXPECT_EQ(back.num_classes(), labeled ? 3 : 0);
    PreprocessOptions threaded;
    threaded.threads = 4;
    EXPECT_EQ(write_container(lcon_preprocess(data, src, noise, threaded, 77).container), bytes);
  }
}

TEST(Preprocess, RejectsRaggedInput) {
  const auto src = SourceModel::iid({0.5, 0.5});
  const auto noise = build_noise({0.9, 0.1});
  auto data = toy_dataset(false);
  data[3].symbols.pop_back();
  EXPECT_THROW(lcon_preprocess(data, src, noise, {}, 1), Error);
  data = toy_dataset(true);
  data[2].label.reset();
  EXPECT_THROW(lcon_preprocess(data, src, noise, {}, 1), Error);
  EXPECT_THROW(lcon_preprocess({}, src, noise, {}, 1), Error);
}

}  // namespace
