// The persisted LCoN dataset: header, packed codeword indices, CRC-32.
//
// Layout (all integers little-endian):
//
//   "LCON"                      4 bytes
//   version                     u8   (= 1)
//   q                           u16
//   n                           u32
//   k                           u16
//   bits_per_block              u16
//   num_blocks                  u64
//   codebook_seed               u64
//   distortion_level            f64 (IEEE-754 bits)
//   noise pmf                   u16 count, then count x f64
//   generator marginal          u16 count, then count x f64
//   label section               u16 num_classes (0 = unlabeled),
//                               then num_blocks x u16 class id when > 0
//   payload                     indices, bits_per_block each, MSB-first,
//                               zero-padded to a byte boundary
//   crc32                       u32 over every preceding byte
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <boost/crc.hpp>

#include "lcon/codec.hpp"
#include "lcon/error.hpp"
#include "lcon/random.hpp"

namespace lcon {

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::array<std::uint8_t, 4> kContainerMagic{'L', 'C', 'O', 'N'};

struct EncodedDataset {
  int q = 2;
  std::uint32_t n = 0;
  std::uint16_t k = 1;
  int bits_per_block = 0;
  std::uint64_t codebook_seed = 0;
  double distortion_level = 0.0;
  std::vector<double> noise_pmf;
  std::vector<double> generator_marginal;
  /// Per-block class ids; empty for an unlabeled dataset.
  std::vector<std::uint16_t> labels;
  std::vector<std::uint32_t> indices;

  std::uint64_t num_blocks() const noexcept { return indices.size(); }
  bool labeled() const noexcept { return !labels.empty(); }
  std::uint64_t payload_bits() const noexcept {
    return num_blocks() * static_cast<std::uint64_t>(bits_per_block);
  }

  std::uint16_t num_classes() const {
    return static_cast<std::uint16_t>(std::set<std::uint16_t>(labels.begin(), labels.end()).size());
  }
};

/// Codebook seed for one label class; unlabeled data use the root seed.
inline std::uint64_t class_codebook_seed(std::uint64_t root, std::optional<std::uint16_t> label) {
  return label ? derive_seed(root, Stream::label, *label) : root;
}

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bytes_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
  }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::span<const std::uint8_t> take(std::size_t count) {
    need(count);
    auto s = bytes_.subspan(pos_, count);
    pos_ += count;
    return s;
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) throw Error(Errc::corrupt_container, "truncated container");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Packs values of `width` bits MSB-first, zero-padding the last byte.
inline std::vector<std::uint8_t> pack_indices(std::span<const std::uint32_t> values, int width) {
  std::vector<std::uint8_t> out((values.size() * static_cast<std::size_t>(width) + 7) / 8, 0);
  std::size_t bit = 0;
  for (std::uint32_t v : values)
    for (int b = width - 1; b >= 0; --b, ++bit)
      if ((v >> b) & 1u) out[bit / 8] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
  return out;
}

inline std::vector<std::uint32_t> unpack_indices(std::span<const std::uint8_t> bytes,
                                                 std::size_t count, int width) {
  std::vector<std::uint32_t> out(count, 0);
  std::size_t bit = 0;
  for (auto& v : out)
    for (int b = 0; b < width; ++b, ++bit)
      v = (v << 1) | ((bytes[bit / 8] >> (7 - bit % 8)) & 1u);
  return out;
}

inline std::vector<std::uint8_t> write_container(const EncodedDataset& ds) {
  if (ds.bits_per_block < 0 || ds.bits_per_block > kMaxCodebookBits)
    throw Error(Errc::invalid_argument, "bits per block out of range");
  if (ds.labeled() && ds.labels.size() != ds.indices.size())
    throw Error(Errc::length_mismatch, "one label per block is required");
  const std::uint32_t limit = 1u << ds.bits_per_block;
  for (std::uint32_t idx : ds.indices)
    if (idx >= limit) throw Error(Errc::index_out_of_range, "index does not fit in the block width");

  detail::ByteWriter w;
  w.put_bytes(kContainerMagic);
  w.put(kContainerVersion);
  w.put(static_cast<std::uint16_t>(ds.q));
  w.put(ds.n);
  w.put(ds.k);
  w.put(static_cast<std::uint16_t>(ds.bits_per_block));
  w.put(ds.num_blocks());
  w.put(ds.codebook_seed);
  w.put_f64(ds.distortion_level);
  w.put(static_cast<std::uint16_t>(ds.noise_pmf.size()));
  for (double p : ds.noise_pmf) w.put_f64(p);
  w.put(static_cast<std::uint16_t>(ds.generator_marginal.size()));
  for (double p : ds.generator_marginal) w.put_f64(p);
  if (ds.labeled()) {
    w.put(ds.num_classes());
    for (std::uint16_t l : ds.labels) w.put(l);
  } else {
    w.put(std::uint16_t{0});
  }
  w.put_bytes(pack_indices(ds.indices, ds.bits_per_block));
  w.put(crc32(w.bytes()));
  return std::move(w.bytes());
}

inline EncodedDataset read_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 4) throw Error(Errc::corrupt_container, "container too short");
  const auto body = bytes.first(bytes.size() - 4);
  detail::ByteReader tail(bytes.last(4));
  if (crc32(body) != tail.get<std::uint32_t>())
    throw Error(Errc::corrupt_container, "CRC-32 mismatch");

  detail::ByteReader r(body);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kContainerMagic.begin()))
    throw Error(Errc::corrupt_container, "bad magic");
  if (r.get<std::uint8_t>() != kContainerVersion)
    throw Error(Errc::corrupt_container, "unsupported version");
  EncodedDataset ds;
  ds.q = r.get<std::uint16_t>();
  ds.n = r.get<std::uint32_t>();
  ds.k = r.get<std::uint16_t>();
  ds.bits_per_block = r.get<std::uint16_t>();
  if (ds.bits_per_block > kMaxCodebookBits)
    throw Error(Errc::corrupt_container, "bits per block out of range");
  const auto num_blocks = r.get<std::uint64_t>();
  ds.codebook_seed = r.get<std::uint64_t>();
  ds.distortion_level = r.get_f64();
  ds.noise_pmf.resize(r.get<std::uint16_t>());
  for (double& p : ds.noise_pmf) p = r.get_f64();
  ds.generator_marginal.resize(r.get<std::uint16_t>());
  for (double& p : ds.generator_marginal) p = r.get_f64();
  const auto num_classes = r.get<std::uint16_t>();
  if (num_classes > 0) {
    if (num_blocks > r.remaining() / 2) throw Error(Errc::corrupt_container, "truncated labels");
    ds.labels.resize(num_blocks);
    for (auto& l : ds.labels) l = r.get<std::uint16_t>();
    if (ds.num_classes() != num_classes)
      throw Error(Errc::corrupt_container, "class count does not match the labels");
  }
  const std::uint64_t payload_bits = num_blocks * static_cast<std::uint64_t>(ds.bits_per_block);
  const std::size_t payload_bytes = static_cast<std::size_t>((payload_bits + 7) / 8);
  if (r.remaining() != payload_bytes)
    throw Error(Errc::corrupt_container, "payload size does not match the header");
  ds.indices = unpack_indices(r.take(payload_bytes), num_blocks, ds.bits_per_block);
  return ds;
}

inline void write_container_file(const std::string& path, const EncodedDataset& ds) {
  const auto bytes = write_container(ds);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::invalid_argument, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline EncodedDataset read_container_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::invalid_argument, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return read_container(bytes);
}

/// Rebuilds the codebook of one class from header fields alone.
inline Codebook rebuild_codebook(const EncodedDataset& ds,
                                 std::optional<std::uint16_t> label = std::nullopt) {
  return Codebook(ds.q, ds.n, ds.bits_per_block, ds.generator_marginal,
                  class_codebook_seed(ds.codebook_seed, label));
}

/// Reconstructions of every block, in order.
inline std::vector<Sequence> decode_dataset(const EncodedDataset& ds) {
  std::vector<Sequence> out;
  out.reserve(ds.indices.size());
  if (!ds.labeled()) {
    const Codebook book = rebuild_codebook(ds);
    for (std::uint32_t idx : ds.indices) out.push_back(decode(idx, book));
    return out;
  }
  std::map<std::uint16_t, Codebook> books;
  for (std::size_t i = 0; i < ds.indices.size(); ++i) {
    const auto label = ds.labels[i];
    auto it = books.find(label);
    if (it == books.end()) it = books.emplace(label, rebuild_codebook(ds, label)).first;
    out.push_back(decode(ds.indices[i], it->second));
  }
  return out;
}

}  // namespace lcon
