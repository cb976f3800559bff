#pragma once

// Array compressor: learns only a per-dimension quantization interval
// (scale), offset and discrete prior for a fixed feature matrix, then entropy
// codes the quantized features with one frequency model per dimension.

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "ivc/coding/codestream.hpp"
#include "ivc/coding/rans.hpp"
#include "ivc/neural/adam.hpp"
#include "ivc/neural/bottleneck.hpp"

namespace ivc::nn {

struct FeatureCompressorOptions {
  std::size_t steps = 1500;
  std::size_t batch = 256;
  double lr_start = 1e-2;
  double lr_end = 1e-4;
  std::uint32_t half_width = kDefaultHalfWidth;
  double min_scale = 1e-3;
  /// After training, replace the prior by the smoothed histogram of the
  /// eval-mode bins of `features` (additive smoothing of this many counts).
  std::optional<double> calibrate_prior = 0.5;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxFeatureDims = 4096;

/// Fits scale, offset and prior by minimizing
///   lambda * |z - z_hat|^2 + rate_bits(z_hat)
/// per example under the uniform-noise relaxation. Offsets start at the
/// column means, scales at half the column standard deviation (floored at
/// twice the minimum scale, which is what zero-variance columns get), and
/// the prior at a discretized Gaussian two bins wide.
[[nodiscard]] inline EntropyBottleneck fit_feature_compressor(const Tensor& features, double lambda,
                                                              const FeatureCompressorOptions& opts = {}) {
  if (features.rows() < 1 || features.cols() < 1) throw ValidationError("feature matrix is empty");
  if (static_cast<std::size_t>(features.cols()) > kMaxFeatureDims) throw CapacityError("more than 4096 feature dimensions");
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (!features.allFinite()) throw NumericError("non-finite feature values");
  const auto d = features.cols();
  EntropyBottleneck eb(static_cast<std::size_t>(d), opts.half_width, opts.min_scale);

  const Tensor mean = features.colwise().mean();
  Tensor sd = ((features.rowwise() - mean.row(0)).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < d; ++j) sd(0, j) = std::max(0.5 * sd(0, j), 2.0 * opts.min_scale);
  eb.set_offset(mean);
  eb.set_scale(sd);
  Tensor prior(d, eb.bins());
  for (Eigen::Index k = 0; k < eb.bins(); ++k) {
    const double b = double(k) - double(opts.half_width);
    prior.col(k).setConstant(std::exp(-b * b / 8.0) + 1e-12);
  }
  eb.set_prior(prior);

  Adam adam(eb.parameters());
  CounterRng rng(opts.seed, 0xFEA7);
  const auto n = static_cast<std::size_t>(features.rows());
  const std::size_t bsz = std::min(opts.batch, n);
  for (std::size_t step = 0; step < opts.steps; ++step) {
    Tensor x(static_cast<Eigen::Index>(bsz), d);
    for (std::size_t i = 0; i < bsz; ++i) x.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rng.below(n)));
    Graph g;
    const Var z = g.constant(x);
    const auto bn = bottleneck_apply(g, z, eb, BottleneckMode::Train, rng.split(step));
    const Var mse = g.sum_axis(g.square(g.sub(bn.z_hat, z)), 1);
    const Var loss = g.mean(g.add(g.scale(mse, lambda), bn.rate_bits));
    if (!std::isfinite(g.item(loss))) throw NumericError("feature compressor diverged at step " + std::to_string(step));
    g.backward(loss);
    adam.step(exponential_lr(opts.lr_start, opts.lr_end, step, opts.steps));
  }
  if (opts.calibrate_prior) {
    if (!(*opts.calibrate_prior > 0.0)) throw ValidationError("prior smoothing must be positive");
    const auto q = eb.quantize(features);
    Tensor counts = Tensor::Constant(d, eb.bins(), *opts.calibrate_prior);
    for (std::size_t i = 0; i < q.bins.size(); ++i)
      counts(static_cast<Eigen::Index>(i % static_cast<std::size_t>(d)), q.bins[i] + static_cast<std::int32_t>(opts.half_width)) += 1.0;
    eb.set_prior(counts);
  }
  return eb;
}

[[nodiscard]] inline InvariantValue bin_symbol(std::int32_t bin, std::uint32_t half_width) {
  InvariantValue v;
  ivc::detail::put_u32_be(v.bytes, static_cast<std::uint32_t>(bin + static_cast<std::int32_t>(half_width)));
  return v;
}

/// One frequency model per latent dimension, quantized from the learned prior.
[[nodiscard]] inline std::vector<FrequencyModel> feature_models(const EntropyBottleneck& eb, std::uint32_t precision_bits) {
  const Tensor prior = eb.prior();
  std::vector<FrequencyModel> models;
  models.reserve(eb.dims());
  const auto B = static_cast<std::int32_t>(eb.half_width());
  for (Eigen::Index j = 0; j < prior.rows(); ++j) {
    std::map<InvariantValue, double> pmf;
    for (std::int32_t b = -B; b <= B; ++b) pmf.emplace(bin_symbol(b, eb.half_width()), prior(j, b + B));
    models.push_back(build_model_from_pmf(pmf, precision_bits));
  }
  return models;
}

struct FeatureCode {
  CodeStream stream;
  Tensor reconstruction;
  double theoretical_bits = 0.0;  ///< sum of -log2 q(z_hat) under the learned prior
  double realized_bits = 0.0;     ///< rANS payload length
  double mse = 0.0;               ///< mean per-example squared error
  std::size_t clamped = 0;
};

/// Quantizes and codes a feature matrix; symbol i uses the model of dimension i % d.
[[nodiscard]] inline FeatureCode compress_features(const Tensor& features, const EntropyBottleneck& eb,
                                                   std::uint32_t precision_bits = 16) {
  const auto q = eb.quantize(features);
  FeatureCode out;
  out.stream.precision_bits = precision_bits;
  out.stream.models = feature_models(eb, precision_bits);
  std::vector<const FrequencyModel*> ptrs;
  for (const auto& m : out.stream.models) ptrs.push_back(&m);
  std::vector<std::uint32_t> idx(q.bins.size());
  const auto B = static_cast<std::int32_t>(eb.half_width());
  for (std::size_t i = 0; i < q.bins.size(); ++i) idx[i] = static_cast<std::uint32_t>(q.bins[i] + B);
  out.stream.payload = rans_encode_indices(idx, ptrs);
  out.stream.n_symbols = static_cast<std::uint32_t>(idx.size());
  for (double r : q.rate_bits) out.theoretical_bits += r;
  out.realized_bits = 8.0 * double(out.stream.payload.size());
  out.reconstruction = q.z_hat;
  out.mse = (q.z_hat - features).array().square().sum() / double(features.rows());
  out.clamped = q.clamped;
  return out;
}

/// Inverse of compress_features given the same bottleneck.
[[nodiscard]] inline Tensor decompress_features(const CodeStream& stream, const EntropyBottleneck& eb) {
  const std::size_t d = eb.dims();
  if (stream.models.size() != d) throw DecodeError("feature stream model count differs from the bottleneck");
  if (stream.n_symbols % d != 0) throw DecodeError("feature stream length is not a multiple of the dimension");
  std::vector<const FrequencyModel*> ptrs;
  for (const auto& m : stream.models) ptrs.push_back(&m);
  const auto idx = rans_decode_indices(stream.payload, ptrs, stream.n_symbols);
  const Tensor s = eb.scale();
  const auto n = static_cast<Eigen::Index>(stream.n_symbols / d);
  Tensor out(n, static_cast<Eigen::Index>(d));
  const auto B = static_cast<std::int32_t>(eb.half_width());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
      const auto k = static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j);
      out(i, j) = double(static_cast<std::int32_t>(idx[k]) - B) * s(0, j) + eb.offset()(0, j);
    }
  return out;
}

/// n x d matrix of independent standard normal features.
[[nodiscard]] inline Tensor gaussian_features(std::size_t n, std::size_t d, std::uint64_t seed) {
  CounterRng rng(seed, 0x6A55);
  Tensor f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
  return f;
}

/// Lambda sweep of the array compressor on synthetic Gaussian features.
struct FeatureCompressConfig {
  std::size_t dims = 512;
  std::size_t samples = 2048;
  std::vector<double> lambdas{1.0, 10.0, 100.0};
  std::size_t steps = 1500;
  std::uint32_t precision_bits = 16;
  std::uint64_t seed = 0;
};

struct FeatureSweepRow {
  double lambda = 0.0;
  double theoretical_bits = 0.0;  ///< per example
  double realized_bits = 0.0;     ///< rANS payload, per example
  double stream_bits = 0.0;       ///< whole container incl. frequency tables, per example
  double mse_per_dim = 0.0;
  std::size_t clamped = 0;
  bool roundtrip = false;  ///< serialized stream decodes to the reconstruction exactly
};

[[nodiscard]] inline std::vector<FeatureSweepRow> run_feature_sweep(const FeatureCompressConfig& cfg) {
  const Tensor f = gaussian_features(cfg.samples, cfg.dims, cfg.seed);
  std::vector<FeatureSweepRow> rows;
  for (double lambda : cfg.lambdas) {
    FeatureCompressorOptions opts;
    opts.steps = cfg.steps;
    opts.seed = cfg.seed;
    const auto eb = fit_feature_compressor(f, lambda, opts);
    const auto code = compress_features(f, eb, cfg.precision_bits);
    const auto bytes = code.stream.serialize();
    const Tensor back = decompress_features(CodeStream::parse(bytes), eb);
    const double n = double(cfg.samples);
    rows.push_back({lambda, code.theoretical_bits / n, code.realized_bits / n, 8.0 * double(bytes.size()) / n,
                    code.mse / double(cfg.dims), code.clamped, back == code.reconstruction});
  }
  return rows;
}

}  // namespace ivc::nn
