#pragma once

// X -> M(X) -> codestream: lossless coding of the maximal invariant only.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ivc/coding/codestream.hpp"
#include "ivc/coding/model.hpp"
#include "ivc/coding/rans.hpp"
#include "ivc/invariance.hpp"

namespace ivc {

struct CompressionStats {
  std::size_t n_symbols = 0;
  std::size_t escapes = 0;            ///< symbols coded through the escape entry
  double model_bits = 0.0;            ///< ideal code length under the coding model
  double payload_bits = 0.0;          ///< realized rANS payload length
  double stream_bits = 0.0;           ///< full serialized container, header included
  [[nodiscard]] double bits_per_symbol() const { return n_symbols ? payload_bits / double(n_symbols) : 0.0; }
};

struct CompressedInvariants {
  CodeStream stream;
  CompressionStats stats;
};

/// Codes a sequence of invariant values. Values missing from the model go
/// through an escape entry (added on demand) and are stored verbatim.
[[nodiscard]] inline CompressedInvariants compress_invariant_values(std::span<const InvariantValue> values,
                                                                    const FrequencyModel& model) {
  bool needs_escape = false;
  for (const auto& v : values)
    if (!model.find(v)) {
      needs_escape = true;
      break;
    }
  const FrequencyModel coding_model = needs_escape ? with_escape(model) : model;
  CompressedInvariants out;
  std::vector<std::uint32_t> idx;
  idx.reserve(values.size());
  for (const auto& v : values) {
    auto i = coding_model.find(v);
    if (!i || v.bytes.empty()) {
      i = coding_model.escape_index();
      out.stream.escapes.push_back(v);
    }
    idx.push_back(static_cast<std::uint32_t>(*i));
    out.stats.model_bits += coding_model.cost_bits(*i);
  }
  const FrequencyModel* models[] = {&coding_model};
  out.stream.payload = rans_encode_indices(idx, models);
  out.stream.precision_bits = coding_model.precision_bits();
  out.stream.n_symbols = static_cast<std::uint32_t>(values.size());
  out.stream.models = {coding_model};
  out.stats.n_symbols = values.size();
  out.stats.escapes = out.stream.escapes.size();
  out.stats.payload_bits = 8.0 * double(out.stream.payload.size());
  out.stats.stream_bits = 8.0 * double(out.stream.serialize().size());
  return out;
}

[[nodiscard]] inline CompressedInvariants invariant_compress(const SampleBatch& batch, const EquivalenceSpec& equiv,
                                                             const FrequencyModel& model) {
  const auto values = maximal_invariants(equiv, batch);
  return compress_invariant_values(values, model);
}

/// Decodes with the model stored in the stream header.
[[nodiscard]] inline std::vector<InvariantValue> decode_invariant_values(const CodeStream& stream) {
  if (stream.version != kCodeStreamVersion) throw DecodeError("unsupported codestream version");
  if (stream.models.size() != 1) throw DecodeError("invariant stream must carry exactly one model");
  const auto& model = stream.models.front();
  const FrequencyModel* models[] = {&model};
  const auto idx = rans_decode_indices(stream.payload, models, stream.n_symbols);
  std::vector<InvariantValue> out;
  out.reserve(idx.size());
  std::size_t next_escape = 0;
  for (auto i : idx) {
    if (model.escape_index() && i == *model.escape_index()) {
      if (next_escape >= stream.escapes.size()) throw DecodeError("escape symbol without literal");
      out.push_back(stream.escapes[next_escape++]);
    } else {
      out.push_back(model.entry(i).value);
    }
  }
  if (next_escape != stream.escapes.size()) throw DecodeError("unused escape literals in stream");
  return out;
}

struct DecompressedInvariants {
  std::vector<InvariantValue> values;
  /// One fixed canonical example per class present in the stream.
  std::map<InvariantValue, Representative> representatives;
};

/// Decodes and checks that the stream was produced with `model` (or its
/// escape-augmented copy); any other model is rejected rather than decoded.
[[nodiscard]] inline DecompressedInvariants invariant_decompress(const CodeStream& stream,
                                                                 const EquivalenceSpec& equiv,
                                                                 const FrequencyModel& model,
                                                                 const Alphabet& alphabet = {}) {
  if (stream.models.size() != 1) throw DecodeError("invariant stream must carry exactly one model");
  const auto& header = stream.models.front();
  const bool matches = header == model || (!model.escape_index() && header.escape_index() &&
                                           model.size() + 1 <= std::size_t{1} << model.precision_bits() &&
                                           header == with_escape(model));
  if (!matches) throw DecodeError("codestream was encoded with a different model");
  DecompressedInvariants out;
  out.values = decode_invariant_values(stream);
  for (const auto& v : out.values)
    if (!out.representatives.contains(v)) out.representatives.emplace(v, canonical_representative(equiv, v, alphabet));
  return out;
}

}  // namespace ivc
