#pragma once

#include <numbers>
#include <span>
#include <vector>

#include "ivc/neural/bottleneck.hpp"
#include "ivc/neural/mlp.hpp"
#include "ivc/sources.hpp"

namespace ivc::nn {

/// Network input for a batch: the raw matrix for continuous batches, a
/// concatenated one-hot encoding (cols x alphabet) for discrete ones.
[[nodiscard]] inline Tensor batch_to_tensor(const SampleBatch& b) {
  const auto n = static_cast<Eigen::Index>(b.rows);
  if (!b.is_discrete()) {
    Tensor t(n, static_cast<Eigen::Index>(b.cols));
    for (Eigen::Index i = 0; i < n; ++i)
      for (std::size_t j = 0; j < b.cols; ++j) t(i, static_cast<Eigen::Index>(j)) = b.real[i * b.cols + j];
    return t;
  }
  Tensor t = Tensor::Zero(n, static_cast<Eigen::Index>(b.cols * b.alphabet));
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < b.cols; ++j)
      t(i, static_cast<Eigen::Index>(j * b.alphabet + b.symbols[i * b.cols + j])) = 1.0;
  return t;
}

[[nodiscard]] inline std::size_t input_width(const SampleBatch& b) {
  return b.is_discrete() ? b.cols * b.alphabet : b.cols;
}

/// Flat alphabet index of a discrete example (first position most significant).
[[nodiscard]] inline std::size_t flat_index(const SampleBatch& b, std::size_t row) {
  std::size_t idx = 0;
  for (auto s : b.symbol_row(row)) idx = idx * b.alphabet + s;
  return idx;
}

/// Fills every LabelResample with an empty label list using per-symbol labels.
[[nodiscard]] inline AugmentationSpec bind_labels(const AugmentationSpec& aug, const SampleBatch& batch,
                                                  std::span<const std::uint32_t> symbol_labels) {
  if (const auto* lr = std::get_if<LabelResample>(&aug)) {
    if (!lr->labels.empty()) return aug;
    if (!batch.is_discrete()) throw TypeError("LabelResample requires a discrete batch");
    if (symbol_labels.empty()) throw ValidationError("LabelResample needs labels for the training source");
    LabelResample bound;
    bound.labels.reserve(batch.rows);
    for (std::size_t i = 0; i < batch.rows; ++i) {
      const auto k = flat_index(batch, i);
      if (k >= symbol_labels.size()) throw ValidationError("symbol outside the label table");
      bound.labels.push_back(symbol_labels[k]);
    }
    return bound;
  }
  if (const auto* c = std::get_if<Compose>(&aug)) {
    Compose out;
    for (const auto& inner : c->list) out.list.push_back(bind_labels(inner, batch, symbol_labels));
    return out;
  }
  return aug;
}

struct LossTerms {
  Var loss;
  double rate_bits = 0.0;   ///< mean per code
  double distortion = 0.0;  ///< mean per example, in the loss's own units
  std::size_t clamped = 0;
};

/// lambda * rate (nats) + |x - decoder(z_hat)|^2 / 2, summed over the batch:
/// the augmented input A(x) is encoded and the unaugmented x reconstructed.
inline LossTerms vic_loss(Graph& g, const SampleBatch& x, const AugmentationSpec& aug, Mlp& encoder, Mlp& decoder,
                          EntropyBottleneck& eb, double lambda, std::uint64_t seed) {
  if (x.is_discrete()) throw TypeError("vic_loss requires a continuous source");
  if (decoder.output_dim() != x.cols || encoder.input_dim() != x.cols)
    throw ValidationError("vic_loss: network widths do not match the data");
  const SampleBatch ax = apply_augmentation(aug, x, mix64(seed ^ 0xA11));
  const Var z = encoder.forward(g, g.constant(batch_to_tensor(ax)));
  const auto bn = bottleneck_apply(g, z, eb, BottleneckMode::Train, CounterRng(seed, 0x7015E));
  const Var rec = decoder.forward(g, bn.z_hat);
  const Var err = g.sub(rec, g.constant(batch_to_tensor(x)));
  const Var dist = g.scale(g.sum(g.square(err)), 0.5);
  const Var rate = g.sum(bn.rate_bits);
  LossTerms t;
  t.loss = g.add(g.scale(rate, lambda * std::numbers::ln2), dist);
  t.rate_bits = g.item(rate) / double(x.rows);
  t.distortion = g.item(dist) / double(x.rows);
  t.clamped = bn.clamped;
  return t;
}

/// Scaled dot-product critic f(a, b) = a.b / tau.
struct DotCritic {
  double tau = 0.1;
};

/// Mean InfoNCE over 2b stacked codes (rows i and i + b are sibling views):
/// each anchor must pick its sibling out of the other 2b - 1 candidates.
inline Var info_nce(Graph& g, Var codes, std::size_t b, DotCritic critic) {
  const auto n = static_cast<Eigen::Index>(2 * b);
  const Var scores = g.scale(g.matmul_nt(codes, codes), 1.0 / critic.tau);
  Tensor mask = Tensor::Zero(n, n);
  mask.diagonal().setConstant(-1e30);
  const Var masked = g.add(scores, g.constant(std::move(mask)));
  std::vector<std::size_t> sibling(2 * b);
  for (std::size_t i = 0; i < 2 * b; ++i) sibling[i] = (i + b) % (2 * b);
  return g.mean(g.sub(g.logsumexp(masked, 1), g.pick(masked, std::move(sibling))));
}

namespace detail {

inline void check_contrastive(const SampleBatch& x, DotCritic critic) {
  if (x.rows < 2) throw ValidationError("BINCE needs a batch of at least 2 examples");
  if (!(critic.tau > 0.0)) throw ValidationError("critic temperature must be positive");
}

}  // namespace detail

/// Bottlenecked InfoNCE over two augmented views per example, scored on the
/// quantized codes. lambda * rate (nats) + distortion, averaged.
inline LossTerms bince_loss(Graph& g, const SampleBatch& x, const AugmentationSpec& aug, Mlp& encoder,
                            EntropyBottleneck& eb, DotCritic critic, double lambda, std::uint64_t seed) {
  detail::check_contrastive(x, critic);
  const SampleBatch v1 = apply_augmentation(aug, x, mix64(seed ^ 0xB1));
  const SampleBatch v2 = apply_augmentation(aug, x, mix64(seed ^ 0xB2));
  const Var z1 = encoder.forward(g, g.constant(batch_to_tensor(v1)));
  const Var z2 = encoder.forward(g, g.constant(batch_to_tensor(v2)));
  const auto bn = bottleneck_apply(g, g.concat_rows(z1, z2), eb, BottleneckMode::Train, CounterRng(seed, 0x7015E));
  const Var dist = info_nce(g, bn.z_hat, x.rows, critic);
  const Var rate = g.mean(bn.rate_bits);
  LossTerms t;
  t.loss = g.add(g.scale(rate, lambda * std::numbers::ln2), dist);
  t.rate_bits = g.item(rate);
  t.distortion = g.item(dist);
  t.clamped = bn.clamped;
  return t;
}

/// The same InfoNCE on unquantized codes: the first stage of a staggered
/// pipeline that compresses a frozen encoder's features afterwards.
inline LossTerms contrastive_loss(Graph& g, const SampleBatch& x, const AugmentationSpec& aug, Mlp& encoder,
                                  DotCritic critic, std::uint64_t seed) {
  detail::check_contrastive(x, critic);
  const SampleBatch v1 = apply_augmentation(aug, x, mix64(seed ^ 0xB1));
  const SampleBatch v2 = apply_augmentation(aug, x, mix64(seed ^ 0xB2));
  const Var z1 = encoder.forward(g, g.constant(batch_to_tensor(v1)));
  const Var z2 = encoder.forward(g, g.constant(batch_to_tensor(v2)));
  LossTerms t;
  t.loss = info_nce(g, g.concat_rows(z1, z2), x.rows, critic);
  t.distortion = g.item(t.loss);
  return t;
}

}  // namespace ivc::nn
