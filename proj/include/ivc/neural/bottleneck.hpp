#pragma once

// Factorized entropy bottleneck: per-dimension scale/offset, uniform-noise
// relaxation during training, rounding at evaluation, and a learned discrete
// prior over the integer bins [-B, B] of every latent dimension.

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "ivc/autodiff.hpp"
#include "ivc/error.hpp"
#include "ivc/rng.hpp"

namespace ivc::nn {

using ad::Graph;
using ad::Parameter;
using ad::Tensor;
using ad::Var;

inline constexpr std::uint32_t kDefaultHalfWidth = 30;

/// Training-mode surcharge, in bits per bin, for latents beyond the edge bins.
inline constexpr double kOutOfRangeBitsPerBin = 8.0;

enum class BottleneckMode : std::uint8_t { Train, Eval };

namespace detail {
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
inline double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
}  // namespace detail

class EntropyBottleneck {
 public:
  EntropyBottleneck() = default;

  /// Unit scale, zero offset, uniform prior.
  explicit EntropyBottleneck(std::size_t dims, std::uint32_t half_width = kDefaultHalfWidth, double min_scale = 1e-3)
      : half_width_(half_width), min_scale_(min_scale) {
    if (dims == 0) throw ValidationError("entropy bottleneck needs at least one dimension");
    if (half_width == 0) throw ValidationError("bin half-width must be positive");
    const auto d = static_cast<Eigen::Index>(dims);
    raw_scale_ = Parameter("eb.raw_scale", Tensor::Constant(1, d, detail::softplus_inverse(1.0 - min_scale)));
    offset_ = Parameter("eb.offset", Tensor::Zero(1, d));
    logits_ = Parameter("eb.logits", Tensor::Zero(d, bins()));
  }

  [[nodiscard]] std::size_t dims() const { return static_cast<std::size_t>(offset_.value.cols()); }
  [[nodiscard]] std::uint32_t half_width() const noexcept { return half_width_; }
  [[nodiscard]] Eigen::Index bins() const noexcept { return 2 * Eigen::Index{half_width_} + 1; }
  [[nodiscard]] double min_scale() const noexcept { return min_scale_; }

  /// softplus(raw) + min_scale, one entry per dimension.
  [[nodiscard]] Tensor scale() const {
    Tensor s = raw_scale_.value;
    for (Eigen::Index j = 0; j < s.cols(); ++j) s(0, j) = detail::softplus(s(0, j)) + min_scale_;
    return s;
  }
  [[nodiscard]] const Tensor& offset() const noexcept { return offset_.value; }

  /// d x (2B+1) row-stochastic prior.
  [[nodiscard]] Tensor prior() const {
    const Tensor& l = logits_.value;
    Tensor p = (l.colwise() - l.rowwise().maxCoeff()).array().exp().matrix();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
  }

  void set_scale(const Tensor& s) {
    require_row(s, "scale");
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (!(s(0, j) > min_scale_)) throw ValidationError("scale must exceed the minimum scale");
      raw_scale_.value(0, j) = detail::softplus_inverse(s(0, j) - min_scale_);
    }
  }
  void set_offset(const Tensor& o) {
    require_row(o, "offset");
    offset_.value = o;
  }
  /// Rows must be positive; they are normalized.
  void set_prior(const Tensor& p) {
    if (p.rows() != offset_.value.cols() || p.cols() != bins()) throw ValidationError("prior shape mismatch");
    if ((p.array() <= 0.0).any()) throw ValidationError("prior entries must be positive");
    logits_.value = p.array().log().matrix();
  }

  [[nodiscard]] std::vector<Parameter*> parameters() { return {&raw_scale_, &offset_, &logits_}; }
  Parameter& raw_scale_param() noexcept { return raw_scale_; }
  Parameter& offset_param() noexcept { return offset_; }
  Parameter& logits_param() noexcept { return logits_; }

  struct Quantized {
    std::vector<std::int32_t> bins;  ///< n x d row-major, in [-B, B]
    Tensor z_hat;                    ///< dequantized: bin * s + o
    std::vector<double> rate_bits;   ///< per example
    std::size_t clamped = 0;
  };

  /// Evaluation-mode quantization without a graph.
  [[nodiscard]] Quantized quantize(const Tensor& z) const {
    if (z.cols() != offset_.value.cols()) throw ValidationError("latent dimension does not match the bottleneck");
    if (!z.allFinite()) throw NumericError("non-finite latent entering the bottleneck");
    const Tensor s = scale();
    const Tensor logq = prior().array().log().matrix();
    Quantized out;
    out.bins.resize(static_cast<std::size_t>(z.size()));
    out.z_hat.resize(z.rows(), z.cols());
    out.rate_bits.assign(static_cast<std::size_t>(z.rows()), 0.0);
    const double B = half_width_;
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        double u = std::round((z(i, j) - offset_.value(0, j)) / s(0, j));
        if (u < -B || u > B) {
          u = std::clamp(u, -B, B);
          ++out.clamped;
        }
        const auto b = static_cast<std::int32_t>(u);
        out.bins[static_cast<std::size_t>(i * z.cols() + j)] = b;
        out.z_hat(i, j) = u * s(0, j) + offset_.value(0, j);
        out.rate_bits[static_cast<std::size_t>(i)] -= logq(j, b + half_width_) / std::numbers::ln2;
      }
    return out;
  }

 private:
  void require_row(const Tensor& t, const char* what) const {
    if (t.rows() != 1 || t.cols() != offset_.value.cols())
      throw ValidationError(std::string(what) + " must be a 1 x dims row");
  }

  std::uint32_t half_width_ = kDefaultHalfWidth;
  double min_scale_ = 1e-3;
  Parameter raw_scale_, offset_, logits_;
};

struct BottleneckOutput {
  Var z_hat;      ///< n x d, back in latent units
  Var rate_bits;  ///< n x 1
  std::size_t clamped = 0;
};

/// Train mode adds U(-1/2, 1/2) noise (a constant input, drawn from `noise`)
/// and prices it with the piecewise-linear relaxation of the prior; eval mode
/// rounds and prices the bin exactly. Both map back with * s + o.
///
/// Latents past the edge bins are clamped to them (and counted). In training
/// the clamped excess is also charged kOutOfRangeBitsPerBin per bin, so the
/// encoder cannot park information outside the coded range.
inline BottleneckOutput bottleneck_apply(Graph& g, Var z, EntropyBottleneck& eb, BottleneckMode mode,
                                         CounterRng noise = CounterRng(0)) {
  const Tensor& zv = g.value(z);
  if (zv.cols() != static_cast<Eigen::Index>(eb.dims())) throw ValidationError("latent dimension does not match the bottleneck");
  if (!zv.allFinite()) throw NumericError("non-finite latent entering the bottleneck");
  const double B = eb.half_width();

  const Var s = g.add(g.softplus(g.param(eb.raw_scale_param())),
                      g.constant(Tensor::Constant(1, static_cast<Eigen::Index>(eb.dims()), eb.min_scale())));
  const Var o = g.param(eb.offset_param());
  const Var u = g.mul_row(g.add_row(z, g.scale(o, -1.0)), g.reciprocal(s));

  Var v;
  std::optional<Var> excess;
  std::size_t eval_clamped = 0;
  if (mode == BottleneckMode::Train) {
    Tensor n(zv.rows(), zv.cols());
    for (Eigen::Index i = 0; i < n.size(); ++i) n.data()[i] = noise.uniform() - 0.5;
    const Var noisy = g.add(u, g.constant(std::move(n)));
    v = g.clamp(noisy, -B - 0.5, B + 0.5);
    excess = g.sum_axis(g.abs(g.sub(noisy, v)), 1);
  } else {
    Tensor r = g.value(u).array().round().matrix();
    eval_clamped = static_cast<std::size_t>((r.array().abs() > B).count());
    r = r.array().max(-B).min(B).matrix();
    v = g.constant(std::move(r));
  }

  const Var logits = g.param(eb.logits_param());
  const Var logq = g.add_col(logits, g.scale(g.logsumexp(logits, 1), -1.0));
  const Var q = g.exp(logq);
  const Var pos = g.add(v, g.constant(Tensor::Constant(zv.rows(), zv.cols(), B)));
  const Var p = g.interp_lookup(q, pos);
  BottleneckOutput out;
  out.clamped = g.clamped_count(p) + eval_clamped;
  out.rate_bits = g.scale(g.sum_axis(g.log(p), 1), -1.0 / std::numbers::ln2);
  if (excess) out.rate_bits = g.add(out.rate_bits, g.scale(*excess, kOutOfRangeBitsPerBin));
  out.z_hat = g.add_row(g.mul_row(v, s), o);
  return out;
}

}  // namespace ivc::nn
