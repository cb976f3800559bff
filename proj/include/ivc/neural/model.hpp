#pragma once

#include <optional>

#include "ivc/neural/bottleneck.hpp"
#include "ivc/neural/losses.hpp"
#include "ivc/neural/mlp.hpp"

namespace ivc::nn {

enum class Objective : std::uint8_t { VC, VIC, BINCE };

[[nodiscard]] inline const char* to_string(Objective o) {
  switch (o) {
    case Objective::VC: return "vc";
    case Objective::VIC: return "vic";
    case Objective::BINCE: return "bince";
  }
  return "?";
}

/// Encoder + bottleneck, plus a decoder for the reconstructing objectives.
struct CompressorModel {
  Objective objective = Objective::VIC;
  Mlp encoder;
  std::optional<Mlp> decoder;
  EntropyBottleneck eb;

  /// Latents of a batch (no augmentation), n x d.
  [[nodiscard]] Tensor encode(const SampleBatch& x) const { return encoder.apply(batch_to_tensor(x)); }

  [[nodiscard]] EntropyBottleneck::Quantized quantize(const SampleBatch& x) const { return eb.quantize(encode(x)); }

  [[nodiscard]] std::vector<Parameter*> parameters() {
    auto out = encoder.parameters();
    if (decoder)
      for (auto* p : decoder->parameters()) out.push_back(p);
    for (auto* p : eb.parameters()) out.push_back(p);
    return out;
  }
};

}  // namespace ivc::nn
