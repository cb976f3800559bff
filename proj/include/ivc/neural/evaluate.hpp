#pragma once

// Rate-invariance points of trained compressors: eval-mode rate plus the risk
// of a freshly fitted readout predicting the maximal invariant from z_hat.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <vector>

#include "ivc/invariance.hpp"
#include "ivc/neural/adam.hpp"
#include "ivc/neural/model.hpp"

namespace ivc::nn {

struct ReadoutOptions {
  std::vector<std::size_t> hidden = {128, 128};
  std::size_t steps = 3000;
  std::size_t batch = 256;
  double lr_start = 1e-2;
  double lr_end = 1e-4;
  double train_fraction = 0.75;
};

/// Linear map plus a softplus MLP, summed.
class Readout {
 public:
  Readout(std::size_t in, std::size_t out, const std::vector<std::size_t>& hidden, std::uint64_t seed)
      : mlp_({widths(in, hidden, out), Activation::Softplus}, seed, "readout.mlp") {
    CounterRng rng(seed, 0x11AE);
    const double bound = std::sqrt(6.0 / double(in));
    Tensor w(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    w_ = Parameter("readout.w", std::move(w));
    b_ = Parameter("readout.b", Tensor::Zero(1, static_cast<Eigen::Index>(out)));
  }

  Var forward(Graph& g, Var x) { return g.add(g.affine(x, g.param(w_), g.param(b_)), mlp_.forward(g, x)); }

  [[nodiscard]] Tensor apply(const Tensor& x) const {
    Tensor y = x * w_.value;
    y.rowwise() += b_.value.row(0);
    return y + mlp_.apply(x);
  }

  [[nodiscard]] std::vector<Parameter*> parameters() {
    auto p = mlp_.parameters();
    p.push_back(&w_);
    p.push_back(&b_);
    return p;
  }

 private:
  static std::vector<std::size_t> widths(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::vector<std::size_t> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
  }

  Mlp mlp_;
  Parameter w_, b_;
};

/// Target of a readout: real vectors (scored by squared error) or class ids
/// (scored by log-loss in bits).
struct ReadoutTarget {
  Tensor real;                        ///< n x k when continuous
  std::vector<std::size_t> classes;   ///< n entries when discrete
  std::size_t num_classes = 0;
  [[nodiscard]] bool discrete() const noexcept { return num_classes > 0; }
};

namespace detail {

inline std::pair<Tensor, Tensor> column_stats(const Tensor& x) {
  const Tensor mean = x.colwise().mean();
  Tensor sd = ((x.rowwise() - mean.row(0)).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < sd.cols(); ++j)
    if (!(sd(0, j) > 1e-12)) sd(0, j) = 1.0;
  return {mean, sd};
}

inline Tensor standardize(const Tensor& x, const Tensor& mean, const Tensor& sd) {
  Tensor out = x.rowwise() - mean.row(0);
  out.array().rowwise() /= sd.row(0).array();
  return out;
}

inline Tensor take_rows(const Tensor& x, std::span<const std::size_t> rows) {
  Tensor out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace detail

/// Fits a readout on the first train_fraction of the rows and returns its
/// held-out risk: mean squared error (continuous) or log-loss in bits (discrete).
[[nodiscard]] inline double fit_readout(const Tensor& features, const ReadoutTarget& target, std::uint64_t seed,
                                        const ReadoutOptions& opts = {}) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (n < 2) throw ValidationError("readout needs at least two examples");
  const std::size_t n_train = std::clamp<std::size_t>(std::size_t(double(n) * opts.train_fraction), 1, n - 1);
  std::vector<std::size_t> train_rows(n_train), test_rows(n - n_train);
  std::iota(train_rows.begin(), train_rows.end(), 0);
  std::iota(test_rows.begin(), test_rows.end(), n_train);

  const auto [fmean, fsd] = detail::column_stats(detail::take_rows(features, train_rows));
  const Tensor x = detail::standardize(features, fmean, fsd);

  Tensor y;
  Tensor ymean, ysd;
  std::size_t out_dim = target.num_classes;
  if (!target.discrete()) {
    std::tie(ymean, ysd) = detail::column_stats(detail::take_rows(target.real, train_rows));
    y = detail::standardize(target.real, ymean, ysd);
    out_dim = static_cast<std::size_t>(y.cols());
  }

  Readout r(static_cast<std::size_t>(x.cols()), out_dim, opts.hidden, seed);
  Adam adam(r.parameters());
  CounterRng rng(seed, 0x5EAD);
  const std::size_t bsz = std::min(opts.batch, n_train);
  for (std::size_t step = 0; step < opts.steps; ++step) {
    std::vector<std::size_t> rows(bsz);
    for (auto& k : rows) k = train_rows[rng.below(n_train)];
    Graph g;
    const Var out = r.forward(g, g.constant(detail::take_rows(x, rows)));
    Var loss;
    if (target.discrete()) {
      std::vector<std::size_t> cls(bsz);
      for (std::size_t i = 0; i < bsz; ++i) cls[i] = target.classes[rows[i]];
      loss = g.mean(g.sub(g.logsumexp(out, 1), g.pick(out, std::move(cls))));
    } else {
      loss = g.scale(g.sum(g.square(g.sub(out, g.constant(detail::take_rows(y, rows))))), 1.0 / double(bsz));
    }
    g.backward(loss);
    adam.step(exponential_lr(opts.lr_start, opts.lr_end, step, opts.steps));
  }

  const Tensor pred = r.apply(detail::take_rows(x, test_rows));
  double risk = 0.0;
  if (target.discrete()) {
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double m = pred.row(i).maxCoeff();
      const double lse = m + std::log((pred.row(i).array() - m).exp().sum());
      risk += (lse - pred(i, static_cast<Eigen::Index>(target.classes[test_rows[static_cast<std::size_t>(i)]]))) / std::numbers::ln2;
    }
  } else {
    Tensor back = pred.array().rowwise() * ysd.row(0).array();
    back.rowwise() += ymean.row(0);
    risk = (back - detail::take_rows(target.real, test_rows)).array().square().sum();
  }
  return risk / double(test_rows.size());
}

/// Readout target for the maximal invariant of a batch: invariant features
/// (continuous sources) or dense class ids in sorted-value order (discrete).
[[nodiscard]] inline ReadoutTarget invariant_target(const EquivalenceSpec& equiv, const SampleBatch& x) {
  ReadoutTarget t;
  if (!x.is_discrete()) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto f = invariant_features(equiv, x.real_row(i));
      if (i == 0) t.real.resize(static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(f.size()));
      for (std::size_t j = 0; j < f.size(); ++j) t.real(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
    }
    return t;
  }
  const auto values = maximal_invariants(equiv, x);
  std::map<InvariantValue, std::size_t> ids;
  for (const auto& v : values) ids.emplace(v, 0);
  std::size_t k = 0;
  for (auto& [v, id] : ids) id = k++;
  t.num_classes = ids.size();
  for (const auto& v : values) t.classes.push_back(ids.at(v));
  return t;
}

struct RIPointEval {
  double rate_bits = 0.0;
  double distortion = 0.0;
  bool log_loss = false;  ///< distortion in bits (discrete invariant) rather than MSE
  std::size_t clamped = 0;
};

/// Eval-mode rate of fresh source samples and the held-out readout risk.
[[nodiscard]] inline RIPointEval evaluate_ri_point(const CompressorModel& model, const SourceSpec& source,
                                                   const EquivalenceSpec& equiv, std::size_t n_eval, std::uint64_t seed,
                                                   const ReadoutOptions& opts = {}) {
  const SampleBatch x = sample_source(source, n_eval, mix64(seed ^ 0xE7A1));
  const auto q = model.quantize(x);
  RIPointEval r;
  r.rate_bits = std::accumulate(q.rate_bits.begin(), q.rate_bits.end(), 0.0) / double(n_eval);
  r.clamped = q.clamped;
  const auto target = invariant_target(equiv, x);
  r.log_loss = target.discrete();
  r.distortion = fit_readout(q.z_hat, target, mix64(seed ^ 0x4EAD), opts);
  return r;
}

// ---------------------------------------------------------------------------
// Area under the rate-distortion curve
// ---------------------------------------------------------------------------

struct RDPoint {
  double distortion = 0.0;
  double rate = 0.0;
};

/// Trapezoidal area under rate as a function of distortion (points sorted by distortion).
[[nodiscard]] inline double aurd(std::vector<RDPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const RDPoint& a, const RDPoint& b) {
    return a.distortion < b.distortion || (a.distortion == b.distortion && a.rate > b.rate);
  });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += 0.5 * (pts[i].rate + pts[i - 1].rate) * (pts[i].distortion - pts[i - 1].distortion);
  return area;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error (sample standard deviation / sqrt(n)).
[[nodiscard]] inline MeanSe mean_se(std::span<const double> v) {
  MeanSe r;
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / double(v.size() - 1)) / std::sqrt(double(v.size()));
  }
  return r;
}

}  // namespace ivc::nn
