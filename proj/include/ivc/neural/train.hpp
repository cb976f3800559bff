#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "ivc/neural/adam.hpp"
#include "ivc/neural/evaluate.hpp"
#include "ivc/neural/losses.hpp"
#include "ivc/neural/model.hpp"

namespace ivc::nn {

struct TrainSpec {
  Objective objective = Objective::VIC;
  double lambda = 0.07;  ///< rate weight
  double lr_start = 1e-3;
  double lr_end = 1e-6;
  double bottleneck_lr_scale = 10.0;  ///< multiplier for scale, offset and prior logits
  std::size_t epochs = 100;
  std::size_t steps_per_epoch = 200;
  std::size_t batch_size = 64;
  std::size_t latent_dims = 2;
  std::vector<std::size_t> hidden = {256, 256};
  Activation activation = Activation::Softplus;
  std::uint32_t half_width = kDefaultHalfWidth;
  double tau = 0.1;                           ///< BINCE critic temperature
  std::vector<std::uint32_t> symbol_labels;   ///< per flat symbol, for LabelResample
  std::size_t eval_samples = 4096;
  ReadoutOptions readout;
  std::uint64_t seed = 0;
};

inline void validate(const TrainSpec& s) {
  if (!(s.lambda > 0.0) || !std::isfinite(s.lambda)) throw ValidationError("lambda must be positive");
  if (!(s.lr_start > 0.0) || !(s.lr_end > 0.0)) throw ValidationError("learning rates must be positive");
  if (s.epochs == 0 || s.steps_per_epoch == 0) throw ValidationError("epochs and steps_per_epoch must be positive");
  if (s.batch_size == 0) throw ValidationError("batch_size must be positive");
  if (s.objective == Objective::BINCE && s.batch_size < 2) throw ValidationError("BINCE needs batch_size >= 2");
  if (s.latent_dims == 0) throw ValidationError("latent_dims must be positive");
  if (s.hidden.empty()) throw ValidationError("at least one hidden layer is required");
  if (!(s.tau > 0.0)) throw ValidationError("tau must be positive");
  if (!(s.bottleneck_lr_scale > 0.0)) throw ValidationError("bottleneck_lr_scale must be positive");
}

struct EpochMetrics {
  double rate_bits = 0.0;
  double distortion = 0.0;
  double loss = 0.0;
  double lr = 0.0;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  double eval_rate_bits = 0.0;
  double eval_distortion = 0.0;
  bool eval_log_loss = false;
};

struct TrainResult {
  CompressorModel model;
  RunMetrics metrics;
};

/// Freshly initialized networks sized for `source`.
[[nodiscard]] inline CompressorModel init_model(const TrainSpec& spec, const SourceSpec& source) {
  const std::size_t in = input_width(sample_source(source, 1, 0));
  std::vector<std::size_t> enc{in};
  enc.insert(enc.end(), spec.hidden.begin(), spec.hidden.end());
  enc.push_back(spec.latent_dims);
  CompressorModel m;
  m.objective = spec.objective;
  m.encoder = Mlp({enc, spec.activation}, mix64(spec.seed ^ 0xE4C), "encoder");
  if (spec.objective != Objective::BINCE) {
    std::vector<std::size_t> dec{spec.latent_dims};
    dec.insert(dec.end(), spec.hidden.rbegin(), spec.hidden.rend());
    dec.push_back(in);
    m.decoder = Mlp({dec, spec.activation}, mix64(spec.seed ^ 0xDEC), "decoder");
  }
  m.eb = EntropyBottleneck(spec.latent_dims, spec.half_width);
  return m;
}

/// One training loss on a batch; VC ignores the augmentation.
inline LossTerms objective_loss(Graph& g, CompressorModel& m, const TrainSpec& spec, const SampleBatch& x,
                                const AugmentationSpec& aug, std::uint64_t seed) {
  const AugmentationSpec bound = bind_labels(aug, x, spec.symbol_labels);
  switch (spec.objective) {
    case Objective::VC:
      return vic_loss(g, x, Identity{}, m.encoder, *m.decoder, m.eb, spec.lambda, seed);
    case Objective::VIC:
      return vic_loss(g, x, bound, m.encoder, *m.decoder, m.eb, spec.lambda, seed);
    case Objective::BINCE:
      return bince_loss(g, x, bound, m.encoder, m.eb, DotCritic{spec.tau}, spec.lambda, seed);
  }
  throw ValidationError("unknown objective");
}

/// Adam with per-epoch exponential learning-rate decay and fresh source
/// samples every step. Deterministic given spec.seed. When `equiv` is given
/// the final model is scored with evaluate_ri_point.
[[nodiscard]] inline TrainResult train(const TrainSpec& spec, const SourceSpec& source, const AugmentationSpec& aug,
                                       const std::optional<EquivalenceSpec>& equiv = std::nullopt) {
  validate(spec);
  validate(source);
  validate(aug);
  TrainResult r{init_model(spec, source), {}};
  Adam adam(r.model.parameters());
  for (auto* p : r.model.eb.parameters()) adam.set_lr_scale(p, spec.bottleneck_lr_scale);
  std::size_t step = 0;
  for (std::size_t e = 0; e < spec.epochs; ++e) {
    EpochMetrics em;
    em.lr = exponential_lr(spec.lr_start, spec.lr_end, e, spec.epochs);
    for (std::size_t k = 0; k < spec.steps_per_epoch; ++k, ++step) {
      const std::uint64_t step_seed = mix64(spec.seed * 0x9E3779B97F4A7C15ULL + step + 1);
      const SampleBatch x = sample_source(source, spec.batch_size, step_seed);
      Graph g;
      const LossTerms t = objective_loss(g, r.model, spec, x, aug, step_seed);
      const double loss = g.item(t.loss);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << e << ", step " << step << " (lambda "
            << spec.lambda << ", lr " << em.lr << ")";
        throw NumericError(msg.str());
      }
      g.backward(t.loss);
      adam.step(em.lr);
      em.rate_bits += t.rate_bits;
      em.distortion += t.distortion;
      em.loss += loss;
    }
    const double n = double(spec.steps_per_epoch);
    em.rate_bits /= n;
    em.distortion /= n;
    em.loss /= n;
    r.metrics.epochs.push_back(em);
  }
  if (equiv) {
    const auto ev = evaluate_ri_point(r.model, source, *equiv, spec.eval_samples, spec.seed, spec.readout);
    r.metrics.eval_rate_bits = ev.rate_bits;
    r.metrics.eval_distortion = ev.distortion;
    r.metrics.eval_log_loss = ev.log_loss;
  }
  return r;
}

}  // namespace ivc::nn
