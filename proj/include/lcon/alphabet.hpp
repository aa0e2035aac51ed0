// Symbols, sequences and base-q tuple indexing.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcon/error.hpp"

namespace lcon {

using Symbol = std::uint8_t;
using Sequence = std::vector<Symbol>;

/// Largest dense probability table we are willing to allocate (entries).
inline constexpr std::size_t kTableLimit = std::size_t{1} << 20;

/// Symbols are stored in a byte, which bounds the alphabet size.
inline constexpr int kMaxAlphabet = 256;

/// Finite alphabet {0, ..., q-1}.
struct Alphabet {
  int q = 2;

  explicit Alphabet(int size) : q(size) {
    if (size < 2 || size > kMaxAlphabet)
      throw Error(Errc::invalid_argument,
                  "alphabet size must lie in [2, 256], got " + std::to_string(size));
  }

  bool contains(std::size_t symbol) const noexcept {
    return symbol < static_cast<std::size_t>(q);
  }
};

/// q^k, or TableTooLarge when it exceeds `limit`.
inline std::size_t checked_power(int q, int k, std::size_t limit = kTableLimit) {
  if (k < 0) throw Error(Errc::invalid_argument, "negative tuple order");
  std::size_t size = 1;
  for (int i = 0; i < k; ++i) {
    size *= static_cast<std::size_t>(q);
    if (size > limit)
      throw Error(Errc::table_too_large, std::to_string(q) + "^" + std::to_string(k) +
                                             " exceeds the table limit");
  }
  return size;
}

/// Base-q index of a tuple; the first symbol is the most significant digit.
inline std::size_t tuple_index(std::span<const Symbol> tuple, int q) noexcept {
  std::size_t idx = 0;
  for (Symbol s : tuple) idx = idx * static_cast<std::size_t>(q) + s;
  return idx;
}

inline void tuple_from_index(std::size_t idx, int q, std::span<Symbol> out) noexcept {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<Symbol>(idx % static_cast<std::size_t>(q));
    idx /= static_cast<std::size_t>(q);
  }
}

inline void check_symbols(std::span<const Symbol> seq, int q) {
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (seq[i] >= q)
      throw Error(Errc::symbol_out_of_range, "symbol " + std::to_string(seq[i]) +
                                                 " at position " + std::to_string(i) +
                                                 " is not below q=" + std::to_string(q));
}

}  // namespace lcon
