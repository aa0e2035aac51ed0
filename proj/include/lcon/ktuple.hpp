// Dense probability tables over k-tuples (and pairs of k-tuples).
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lcon/alphabet.hpp"
#include "lcon/error.hpp"

namespace lcon {

enum class DistKind { exact, empirical, averaged };

/// Probability table over Z_q^k, indexed by `tuple_index`. A joint table over
/// pairs of k-tuples has q^(2k) entries laid out as
/// (first-tuple index) * q^k + (second-tuple index).
struct KTupleDist {
  int q = 2;
  int k = 1;
  bool joint = false;
  DistKind kind = DistKind::exact;
  /// Sample length n for empirical tables, number of trials for averaged ones.
  std::uint64_t samples = 0;
  std::vector<double> table;

  std::size_t tuple_count() const { return checked_power(q, k); }

  double at(std::span<const Symbol> tuple) const { return table[tuple_index(tuple, q)]; }

  double at(std::span<const Symbol> first, std::span<const Symbol> second) const {
    return table[tuple_index(first, q) * tuple_count() + tuple_index(second, q)];
  }

  double total() const {
    double s = 0.0;
    for (double p : table) s += p;
    return s;
  }
};

/// Empty table of the right shape.
inline KTupleDist make_table(int q, int k, bool joint, DistKind kind = DistKind::exact) {
  KTupleDist d;
  d.q = q;
  d.k = k;
  d.joint = joint;
  d.kind = kind;
  d.table.assign(checked_power(q, joint ? 2 * k : k), 0.0);
  return d;
}

/// Shannon entropy in bits of a non-negative vector; 0 log 0 = 0.
inline double entropy_bits(std::span<const double> p) noexcept {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

inline double entropy_bits(const KTupleDist& d) noexcept { return entropy_bits(d.table); }

/// Law of the first tuple of a joint table.
inline KTupleDist first_marginal(const KTupleDist& joint) {
  if (!joint.joint) throw Error(Errc::shape_mismatch, "table is not a joint pair law");
  KTupleDist out = make_table(joint.q, joint.k, false, joint.kind);
  out.samples = joint.samples;
  const std::size_t m = out.table.size();
  for (std::size_t a = 0; a < m; ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < m; ++b) s += joint.table[a * m + b];
    out.table[a] = s;
  }
  return out;
}

/// Law of the second tuple of a joint table.
inline KTupleDist second_marginal(const KTupleDist& joint) {
  if (!joint.joint) throw Error(Errc::shape_mismatch, "table is not a joint pair law");
  KTupleDist out = make_table(joint.q, joint.k, false, joint.kind);
  out.samples = joint.samples;
  const std::size_t m = out.table.size();
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) out.table[b] += joint.table[a * m + b];
  return out;
}

/// Marginal over the first `k_new` symbols of a (non-joint) k-tuple table.
inline KTupleDist prefix_marginal(const KTupleDist& d, int k_new) {
  if (d.joint || k_new < 0 || k_new > d.k)
    throw Error(Errc::shape_mismatch, "invalid prefix marginal request");
  KTupleDist out = make_table(d.q, k_new, false, d.kind);
  out.samples = d.samples;
  const std::size_t tail = checked_power(d.q, d.k - k_new);
  for (std::size_t i = 0; i < d.table.size(); ++i) out.table[i / tail] += d.table[i];
  return out;
}

/// I(A;B) in bits for a joint pair table.
inline double mutual_information(const KTupleDist& joint) {
  return entropy_bits(first_marginal(joint)) + entropy_bits(second_marginal(joint)) -
         entropy_bits(joint);
}

}  // namespace lcon
