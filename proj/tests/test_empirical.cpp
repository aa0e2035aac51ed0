#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lcon/empirical.hpp"
#include "lcon/model.hpp"

namespace {

using namespace lcon;

TEST(EmpDist, SmallExamples) {
  const Sequence x{0, 1, 0, 1};
  const auto d1 = emp_dist(x, 1, 2);
  EXPECT_DOUBLE_EQ(d1.table[0], 0.5);
  EXPECT_DOUBLE_EQ(d1.table[1], 0.5);
  const auto d2 = emp_dist(x, 2, 2);
  EXPECT_DOUBLE_EQ(d2.table[0b01], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(d2.table[0b10], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(d2.table[0b00] + d2.table[0b11], 0.0);
  const auto d4 = emp_dist(x, 4, 2);
  EXPECT_DOUBLE_EQ(d4.table[0b0101], 1.0);
  EXPECT_THROW(emp_dist(x, 5, 2), Error);
  EXPECT_THROW(emp_dist(Sequence{0, 3}, 1, 3), Error);
}

TEST(EmpDist, JointLayoutIsZMajor) {
  const Sequence z{2, 2, 0};
  const Sequence xh{1, 1, 1};
  const auto j = joint_emp_dist(z, xh, 1, 3);
  EXPECT_DOUBLE_EQ(j.table[2 * 3 + 1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(j.table[0 * 3 + 1], 1.0 / 3.0);
  EXPECT_THROW(joint_emp_dist(z, Sequence{1, 1}, 1, 3), Error);
}

TEST(EmpDist, PrefixMarginalOfLongSequence) {
  // Windows of order k marginalize to order k-1 up to one boundary window.
  const auto src = SourceModel::markov({{0.6, 0.4}, {0.3, 0.7}});
  const auto x = sample_source(src, 5000, 3);
  const auto d3 = emp_dist(x, 3, 2);
  const auto d2 = emp_dist(x, 2, 2);
  const auto m = prefix_marginal(d3, 2);
  double tv = 0.0;
  for (std::size_t i = 0; i < 4; ++i) tv += 0.5 * std::abs(m.table[i] - d2.table[i]);
  EXPECT_LE(tv, 1.0 / 4998.0 + 1e-12);
}

TEST(Counter, MergeEqualsConcatenatedCounts) {
  TupleCounter a(3, 2, false), b(3, 2, false), all(3, 2, false);
  const Sequence s1{0, 1, 2, 2, 1}, s2{2, 0, 0};
  a.add(s1);
  b.add(s2);
  all.add(s1);
  all.add(s2);
  a.merge(b);
  EXPECT_EQ(a.counts(), all.counts());
  EXPECT_EQ(a.windows(), 6u);
  EXPECT_THROW(a.merge(TupleCounter(3, 1, false)), Error);
}

// Independent symbols with a position-dependent bias: Q^ave has a simple
// closed form, the window-average of product laws.
TEST(AveDist, MatchesExactWindowAverage) {
  const std::size_t n = 12;
  std::vector<double> bias(n);
  for (std::size_t i = 0; i < n; ++i) bias[i] = 0.1 + 0.8 * double(i) / double(n - 1);
  SequenceSampler sampler = [&](std::uint64_t seed) {
    Rng rng(seed);
    Sequence x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rng.uniform() < bias[i] ? 1 : 0;
    return x;
  };
  for (int k = 1; k <= 3; ++k) {
    const std::size_t m = std::size_t{1} << k;
    std::vector<double> exact(m, 0.0);
    for (std::size_t j = 0; j + std::size_t(k) <= n; ++j)
      for (std::size_t t = 0; t < m; ++t) {
        double p = 1.0;
        for (int l = 0; l < k; ++l) {
          const int bit = (t >> (k - 1 - l)) & 1;
          p *= bit ? bias[j + std::size_t(l)] : 1 - bias[j + std::size_t(l)];
        }
        exact[t] += p / double(n - std::size_t(k) + 1);
      }
    const auto mc = ave_dist(sampler, k, 2, 20000, 99);
    EXPECT_EQ(mc.kind, DistKind::averaged);
    double tv = 0.0;
    for (std::size_t t = 0; t < m; ++t) tv += 0.5 * std::abs(mc.table[t] - exact[t]);
    EXPECT_LT(tv, 0.01) << "k=" << k;
  }
}

TEST(AveDist, DeterministicInSeed) {
  const auto src = SourceModel::iid({0.3, 0.7});
  SequenceSampler s = [&](std::uint64_t seed) { return sample_source(src, 16, seed); };
  EXPECT_EQ(ave_dist(s, 2, 2, 50, 1).table, ave_dist(s, 2, 2, 50, 1).table);
  EXPECT_NE(ave_dist(s, 2, 2, 50, 1).table, ave_dist(s, 2, 2, 50, 2).table);
}

TEST(Tv, BasicProperties) {
  auto p = make_table(2, 1, false);
  auto q = make_table(2, 1, false);
  p.table = {1.0, 0.0};
  q.table = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(tv_distance(p, q), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(p, p), 0.0);
  EXPECT_THROW(tv_distance(p, make_table(2, 2, false)), Error);
}

}  // namespace
