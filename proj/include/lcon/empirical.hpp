// Sliding-window empirical k-tuple laws, their ensemble averages, and the
// total-variation distance between tables.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lcon/alphabet.hpp"
#include "lcon/error.hpp"
#include "lcon/ktuple.hpp"
#include "lcon/random.hpp"

namespace lcon {

/// Integer window counts, mergeable by summation. Windows never straddle two
/// added sequences.
class TupleCounter {
 public:
  TupleCounter(int q, int k, bool joint)
      : q_(q), k_(k), joint_(joint), counts_(checked_power(q, joint ? 2 * k : k), 0) {
    if (k < 1) throw Error(Errc::invalid_argument, "k must be at least 1");
  }

  void add(std::span<const Symbol> x) {
    if (joint_) throw Error(Errc::shape_mismatch, "counter expects pairs of sequences");
    const auto k = static_cast<std::size_t>(k_);
    if (k > x.size()) throw Error(Errc::k_too_large, "k exceeds the sequence length");
    check_symbols(x, q_);
    const std::size_t span = counts_.size();
    std::size_t idx = tuple_index(x.first(k), q_);
    ++counts_[idx];
    for (std::size_t i = k; i < x.size(); ++i) {
      idx = (idx * static_cast<std::size_t>(q_) + x[i]) % span;
      ++counts_[idx];
    }
    windows_ += x.size() - k + 1;
  }

  void add(std::span<const Symbol> z, std::span<const Symbol> xhat) {
    if (!joint_) throw Error(Errc::shape_mismatch, "counter expects a single sequence");
    if (z.size() != xhat.size()) throw Error(Errc::length_mismatch, "sequence lengths differ");
    const auto k = static_cast<std::size_t>(k_);
    if (k > z.size()) throw Error(Errc::k_too_large, "k exceeds the sequence length");
    check_symbols(z, q_);
    check_symbols(xhat, q_);
    const std::size_t m = checked_power(q_, k_);
    std::size_t zi = tuple_index(z.first(k), q_);
    std::size_t xi = tuple_index(xhat.first(k), q_);
    ++counts_[zi * m + xi];
    for (std::size_t i = k; i < z.size(); ++i) {
      zi = (zi * static_cast<std::size_t>(q_) + z[i]) % m;
      xi = (xi * static_cast<std::size_t>(q_) + xhat[i]) % m;
      ++counts_[zi * m + xi];
    }
    windows_ += z.size() - k + 1;
  }

  void merge(const TupleCounter& other) {
    if (other.q_ != q_ || other.k_ != k_ || other.joint_ != joint_)
      throw Error(Errc::shape_mismatch, "cannot merge counters of different shapes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    windows_ += other.windows_;
  }

  std::uint64_t windows() const noexcept { return windows_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  KTupleDist distribution(DistKind kind = DistKind::empirical) const {
    KTupleDist d = make_table(q_, k_, joint_, kind);
    d.samples = windows_;
    if (windows_ == 0) return d;
    const double inv = 1.0 / static_cast<double>(windows_);
    for (std::size_t i = 0; i < counts_.size(); ++i)
      d.table[i] = static_cast<double>(counts_[i]) * inv;
    return d;
  }

 private:
  int q_;
  int k_;
  bool joint_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t windows_ = 0;
};

/// Q^emp of order k over the n-k+1 overlapping windows of x.
inline KTupleDist emp_dist(std::span<const Symbol> x, int k, int q) {
  if (k < 1 || static_cast<std::size_t>(k) > x.size())
    throw Error(Errc::k_too_large, "k must lie in [1, n]");
  TupleCounter c(q, k, false);
  c.add(x);
  KTupleDist d = c.distribution();
  d.samples = x.size();
  return d;
}

/// Joint Q^emp of aligned k-windows of (z, xhat), z-major layout.
inline KTupleDist joint_emp_dist(std::span<const Symbol> z, std::span<const Symbol> xhat, int k,
                                 int q) {
  if (z.size() != xhat.size()) throw Error(Errc::length_mismatch, "sequence lengths differ");
  if (k < 1 || static_cast<std::size_t>(k) > z.size())
    throw Error(Errc::k_too_large, "k must lie in [1, n]");
  TupleCounter c(q, k, true);
  c.add(z, xhat);
  KTupleDist d = c.distribution();
  d.samples = z.size();
  return d;
}

/// Draws one realization of a random sequence from a seed.
using SequenceSampler = std::function<Sequence(std::uint64_t seed)>;

/// Monte Carlo estimate of Q^ave: the mean of emp_dist over `trials`
/// independent realizations.
inline KTupleDist ave_dist(const SequenceSampler& sampler, int k, int q, std::uint64_t trials,
                           std::uint64_t seed) {
  if (trials < 1) throw Error(Errc::invalid_argument, "trials must be at least 1");
  KTupleDist acc = make_table(q, k, false, DistKind::averaged);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const Sequence x = sampler(derive_seed(seed, Stream::trial, t));
    const KTupleDist e = emp_dist(x, k, q);
    for (std::size_t i = 0; i < acc.table.size(); ++i) acc.table[i] += e.table[i];
  }
  const double inv = 1.0 / static_cast<double>(trials);
  for (double& v : acc.table) v *= inv;
  acc.samples = trials;
  return acc;
}

/// (1/2) sum |p - q|.
inline double tv_distance(const KTupleDist& p, const KTupleDist& q) {
  if (p.q != q.q || p.k != q.k || p.joint != q.joint || p.table.size() != q.table.size())
    throw Error(Errc::shape_mismatch, "tables have different shapes");
  double s = 0.0;
  for (std::size_t i = 0; i < p.table.size(); ++i) s += std::abs(p.table[i] - q.table[i]);
  return 0.5 * s;
}

}  // namespace lcon
