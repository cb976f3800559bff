#pragma once

// Versioned binary container for rANS payloads.
//
// Layout (all integers little-endian):
//   "IVCZ" | version u8 | precision_bits u8 | n_models u32
//   per model:   n_entries u32, per entry { value_len u32, value bytes, freq u32 }
//   n_symbols u32 | n_escapes u32 | per escape { len u32, bytes }
//   payload_len u32 | payload bytes
// An entry with value_len 0 is the escape symbol; symbol i of the payload is
// coded with model i % n_models.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ivc/coding/model.hpp"
#include "ivc/error.hpp"

namespace ivc {

inline constexpr std::array<std::uint8_t, 4> kCodeStreamMagic{'I', 'V', 'C', 'Z'};
inline constexpr std::uint8_t kCodeStreamVersion = 1;

struct CodeStream {
  std::uint8_t version = kCodeStreamVersion;
  std::uint32_t precision_bits = kDefaultPrecisionBits;
  std::vector<FrequencyModel> models;
  std::uint32_t n_symbols = 0;
  std::vector<InvariantValue> escapes;
  std::vector<std::uint8_t> payload;

  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  [[nodiscard]] static CodeStream parse(std::span<const std::uint8_t> bytes);
};

namespace detail {

inline void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline void put_blob(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> blob) {
  if (blob.size() > 0xFFFFFFFFu) throw EncodingError("blob too large for codestream");
  put_u32_le(out, static_cast<std::uint32_t>(blob.size()));
  out.insert(out.end(), blob.begin(), blob.end());
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{bytes_[pos_++]} << (8 * k);
    return v;
  }
  std::vector<std::uint8_t> take(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  std::vector<std::uint8_t> blob() { return take(u32()); }
  [[nodiscard]] bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DecodeError("codestream truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> CodeStream::serialize() const {
  std::vector<std::uint8_t> out(kCodeStreamMagic.begin(), kCodeStreamMagic.end());
  out.push_back(version);
  out.push_back(static_cast<std::uint8_t>(precision_bits));
  detail::put_u32_le(out, static_cast<std::uint32_t>(models.size()));
  for (const auto& m : models) {
    if (m.precision_bits() != precision_bits) throw EncodingError("model precision differs from stream precision");
    detail::put_u32_le(out, static_cast<std::uint32_t>(m.size()));
    for (const auto& e : m.entries()) {
      detail::put_blob(out, e.value.bytes);
      detail::put_u32_le(out, e.freq);
    }
  }
  detail::put_u32_le(out, n_symbols);
  detail::put_u32_le(out, static_cast<std::uint32_t>(escapes.size()));
  for (const auto& e : escapes) detail::put_blob(out, e.bytes);
  detail::put_blob(out, payload);
  return out;
}

inline CodeStream CodeStream::parse(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  for (auto m : kCodeStreamMagic)
    if (in.u8() != m) throw DecodeError("bad codestream magic");
  CodeStream cs;
  cs.version = in.u8();
  if (cs.version != kCodeStreamVersion)
    throw DecodeError("unsupported codestream version " + std::to_string(cs.version));
  cs.precision_bits = in.u8();
  const std::uint32_t n_models = in.u32();
  for (std::uint32_t k = 0; k < n_models; ++k) {
    const std::uint32_t n = in.u32();
    std::vector<FrequencyModel::Entry> entries;
    entries.reserve(std::min<std::uint32_t>(n, 1u << 16));
    for (std::uint32_t i = 0; i < n; ++i) {
      FrequencyModel::Entry e;
      e.value.bytes = in.blob();
      e.freq = in.u32();
      entries.push_back(std::move(e));
    }
    try {
      cs.models.emplace_back(std::move(entries), cs.precision_bits);
    } catch (const ValidationError& err) {
      throw DecodeError(std::string("invalid model in codestream: ") + err.what());
    }
  }
  cs.n_symbols = in.u32();
  const std::uint32_t n_escapes = in.u32();
  for (std::uint32_t i = 0; i < n_escapes; ++i) cs.escapes.push_back(InvariantValue{in.blob()});
  cs.payload = in.blob();
  if (!in.at_end()) throw DecodeError("trailing bytes after codestream payload");
  return cs;
}

}  // namespace ivc
