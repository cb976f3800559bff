#pragma once

#include <optional>
#include <sstream>

#include "ivc/neural/feature_compressor.hpp"
#include "ivc/neural/train.hpp"

namespace ivc::nn {

/// Contrastive encoder without a bottleneck, trained with the schedule,
/// architecture and per-step seeding of `train`. Only spec.lambda is unused.
[[nodiscard]] inline Mlp train_contrastive_encoder(const TrainSpec& spec, const SourceSpec& source,
                                                   const AugmentationSpec& aug) {
  validate(spec);
  validate(source);
  validate(aug);
  TrainSpec s = spec;
  s.objective = Objective::BINCE;
  Mlp encoder = init_model(s, source).encoder;
  Adam adam(encoder.parameters());
  std::size_t step = 0;
  for (std::size_t e = 0; e < s.epochs; ++e) {
    const double lr = exponential_lr(s.lr_start, s.lr_end, e, s.epochs);
    for (std::size_t k = 0; k < s.steps_per_epoch; ++k, ++step) {
      const std::uint64_t step_seed = mix64(s.seed * 0x9E3779B97F4A7C15ULL + step + 1);
      const SampleBatch x = sample_source(source, s.batch_size, step_seed);
      Graph g;
      const LossTerms t =
          contrastive_loss(g, x, bind_labels(aug, x, s.symbol_labels), encoder, DotCritic{s.tau}, step_seed);
      if (!std::isfinite(t.distortion)) {
        std::ostringstream msg;
        msg << "contrastive training diverged at epoch " << e << ", step " << step;
        throw NumericError(msg.str());
      }
      g.backward(t.loss);
      adam.step(lr);
    }
  }
  return encoder;
}

/// Second stage: fit an array compressor to the frozen encoder's features
/// on one sample, then score rate and readout risk on a fresh one, the same
/// way evaluate_ri_point scores an end-to-end model.
[[nodiscard]] inline RIPointEval evaluate_staggered(const Mlp& encoder, const SourceSpec& source,
                                                    const EquivalenceSpec& equiv, double feature_lambda,
                                                    std::size_t n_eval, std::uint64_t seed,
                                                    const ReadoutOptions& readout = {},
                                                    FeatureCompressorOptions opts = {}) {
  const SampleBatch fit = sample_source(source, n_eval, mix64(seed ^ 0x57A6));
  opts.seed = mix64(seed ^ 0xFC);
  const auto eb = fit_feature_compressor(encoder.apply(batch_to_tensor(fit)), feature_lambda, opts);
  const SampleBatch x = sample_source(source, n_eval, mix64(seed ^ 0xE7A1));
  const auto code = compress_features(encoder.apply(batch_to_tensor(x)), eb);
  RIPointEval r;
  r.rate_bits = code.theoretical_bits / double(n_eval);
  r.clamped = code.clamped;
  const auto target = invariant_target(equiv, x);
  r.log_loss = target.discrete();
  r.distortion = fit_readout(code.reconstruction, target, mix64(seed ^ 0x4EAD), readout);
  return r;
}

}  // namespace ivc::nn
