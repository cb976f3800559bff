#pragma once

// Byte-oriented rANS with a 32-bit state.
//
// State lives in [kRansLow, 2^32). Symbols are encoded last-first; the encoder
// emits renormalization bytes in reverse and the finished buffer is flipped so
// the decoder reads forward: 4 state bytes (little-endian) followed by the
// renormalization bytes. Decoding must end in the initial state with every
// byte consumed, which is how truncated or mismatched streams are rejected.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "ivc/coding/model.hpp"
#include "ivc/error.hpp"

namespace ivc {

inline constexpr std::uint32_t kRansLow = std::uint32_t{1} << 23;

class RansEncoder {
 public:
  /// Pushes one symbol; call in reverse symbol order.
  void put(std::uint32_t cum, std::uint32_t freq, std::uint32_t precision_bits) {
    const std::uint32_t x_max = ((kRansLow >> precision_bits) << 8) * freq;
    while (state_ >= x_max) {
      reversed_.push_back(static_cast<std::uint8_t>(state_ & 0xff));
      state_ >>= 8;
    }
    state_ = ((state_ / freq) << precision_bits) + (state_ % freq) + cum;
  }

  [[nodiscard]] std::vector<std::uint8_t> finish() {
    for (int shift = 24; shift >= 0; shift -= 8) reversed_.push_back(static_cast<std::uint8_t>(state_ >> shift));
    std::vector<std::uint8_t> out(reversed_.rbegin(), reversed_.rend());
    reversed_.clear();
    state_ = kRansLow;
    return out;
  }

 private:
  std::uint32_t state_ = kRansLow;
  std::vector<std::uint8_t> reversed_;
};

class RansDecoder {
 public:
  explicit RansDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
    if (bytes_.size() < 4) throw DecodeError("rANS payload shorter than its state");
    state_ = std::uint32_t{bytes_[0]} | (std::uint32_t{bytes_[1]} << 8) | (std::uint32_t{bytes_[2]} << 16) |
             (std::uint32_t{bytes_[3]} << 24);
    pos_ = 4;
    if (state_ < kRansLow) throw DecodeError("invalid rANS state");
  }

  [[nodiscard]] std::uint32_t peek(std::uint32_t precision_bits) const {
    return state_ & ((std::uint32_t{1} << precision_bits) - 1);
  }

  void advance(std::uint32_t cum, std::uint32_t freq, std::uint32_t precision_bits) {
    const std::uint32_t mask = (std::uint32_t{1} << precision_bits) - 1;
    state_ = freq * (state_ >> precision_bits) + (state_ & mask) - cum;
    while (state_ < kRansLow) {
      if (pos_ >= bytes_.size()) throw DecodeError("rANS payload truncated");
      state_ = (state_ << 8) | bytes_[pos_++];
    }
  }

  /// True when the stream ended exactly where the encoder started.
  [[nodiscard]] bool finished() const noexcept { return state_ == kRansLow && pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t state_ = 0;
};

/// Encodes entry indices; symbol i uses models[i % models.size()].
[[nodiscard]] inline std::vector<std::uint8_t> rans_encode_indices(std::span<const std::uint32_t> indices,
                                                                   std::span<const FrequencyModel* const> models) {
  if (indices.empty()) return {};
  if (models.empty()) throw EncodingError("no frequency model");
  RansEncoder enc;
  for (std::size_t i = indices.size(); i-- > 0;) {
    const auto& m = *models[i % models.size()];
    if (indices[i] >= m.size()) throw EncodingError("symbol index outside model");
    const auto& e = m.entry(indices[i]);
    enc.put(e.cum, e.freq, m.precision_bits());
  }
  return enc.finish();
}

[[nodiscard]] inline std::vector<std::uint32_t> rans_decode_indices(std::span<const std::uint8_t> bytes,
                                                                    std::span<const FrequencyModel* const> models,
                                                                    std::size_t n) {
  if (n == 0) {
    if (!bytes.empty()) throw DecodeError("payload present for an empty stream");
    return {};
  }
  if (models.empty()) throw DecodeError("no frequency model");
  RansDecoder dec(bytes);
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = *models[i % models.size()];
    const std::uint32_t sym = m.symbol_for_slot(dec.peek(m.precision_bits()));
    const auto& e = m.entry(sym);
    dec.advance(e.cum, e.freq, m.precision_bits());
    out[i] = sym;
  }
  if (!dec.finished()) throw DecodeError("rANS stream did not end in the initial state");
  return out;
}

[[nodiscard]] inline std::vector<std::uint8_t> rans_encode(std::span<const InvariantValue> symbols,
                                                           const FrequencyModel& model) {
  std::vector<std::uint32_t> idx;
  idx.reserve(symbols.size());
  for (const auto& s : symbols) {
    const auto i = model.find(s);
    if (!i) throw EncodingError("symbol not in model: " + s.hex());
    idx.push_back(static_cast<std::uint32_t>(*i));
  }
  const FrequencyModel* models[] = {&model};
  return rans_encode_indices(idx, models);
}

[[nodiscard]] inline std::vector<InvariantValue> rans_decode(std::span<const std::uint8_t> bytes,
                                                             const FrequencyModel& model, std::size_t n) {
  const FrequencyModel* models[] = {&model};
  const auto idx = rans_decode_indices(bytes, models, n);
  std::vector<InvariantValue> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(model.entry(i).value);
  return out;
}

/// Sum of -log2(freq/total) over the sequence: the ideal code length under the model.
[[nodiscard]] inline double model_cross_entropy_bits(std::span<const InvariantValue> symbols,
                                                     const FrequencyModel& model) {
  double bits = 0.0;
  for (const auto& s : symbols) {
    const auto i = model.find(s);
    if (!i) throw EncodingError("symbol not in model: " + s.hex());
    bits += model.cost_bits(*i);
  }
  return bits;
}

}  // namespace ivc
