#pragma once

// Rate-Invariance function, invariance distortion H(M(X)|Z), the erasure
// achievability construction and a brute-force channel optimizer for tiny
// alphabets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ivc/error.hpp"
#include "ivc/invariance.hpp"
#include "ivc/rng.hpp"

namespace ivc {

/// Row-stochastic conditional p(z|x), stored row-major (|X| rows, |Z| cols).
class Channel {
 public:
  Channel() = default;
  Channel(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), p_(rows * cols, fill) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t x, std::size_t z) { return p_[x * cols_ + z]; }
  double operator()(std::size_t x, std::size_t z) const { return p_[x * cols_ + z]; }

  [[nodiscard]] std::span<double> row(std::size_t x) { return {p_.data() + x * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t x) const { return {p_.data() + x * cols_, cols_}; }

  /// Throws ValidationError unless every row is nonnegative and sums to 1 within tol.
  void validate(double tol = 1e-10) const {
    for (std::size_t x = 0; x < rows_; ++x) {
      double s = 0.0;
      for (double v : row(x)) {
        if (!(v >= 0.0)) throw ValidationError("channel entry is negative or NaN");
        s += v;
      }
      if (std::abs(s - 1.0) > tol) throw ValidationError("channel row does not sum to 1");
    }
  }

  /// Composition p(z'|x) = sum_z p(z|x) p(z'|z).
  [[nodiscard]] Channel then(const Channel& next) const {
    if (next.rows_ != cols_) throw ValidationError("channel composition dimension mismatch");
    Channel out(rows_, next.cols_);
    for (std::size_t x = 0; x < rows_; ++x)
      for (std::size_t z = 0; z < cols_; ++z) {
        const double w = (*this)(x, z);
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < next.cols_; ++k) out(x, k) += w * next(z, k);
      }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> p_;
};

/// Rate(delta) = max(0, H_M - delta), in bits.
[[nodiscard]] inline double ri_function(double H_M, double delta) {
  if (!(H_M >= 0.0) || !(delta >= 0.0)) throw ValidationError("ri_function requires H_M >= 0 and delta >= 0");
  return std::max(0.0, H_M - delta);
}

namespace detail {

inline void check_dims(std::span<const double> pmf, const Channel& ch) {
  if (pmf.size() != ch.rows()) throw ValidationError("source pmf and channel dimensions differ");
}

inline std::vector<double> output_marginal(std::span<const double> pmf, const Channel& ch) {
  std::vector<double> q(ch.cols(), 0.0);
  for (std::size_t x = 0; x < ch.rows(); ++x)
    for (std::size_t z = 0; z < ch.cols(); ++z) q[z] += pmf[x] * ch(x, z);
  return q;
}

}  // namespace detail

/// I(X;Z) in bits.
[[nodiscard]] inline double mutual_information(std::span<const double> pmf, const Channel& ch) {
  detail::check_dims(pmf, ch);
  const auto q = detail::output_marginal(pmf, ch);
  double mi = 0.0;
  for (std::size_t x = 0; x < ch.rows(); ++x) {
    if (pmf[x] <= 0.0) continue;
    for (std::size_t z = 0; z < ch.cols(); ++z) {
      const double w = ch(x, z);
      if (w > 0.0) mi += pmf[x] * w * std::log2(w / q[z]);
    }
  }
  return std::max(mi, 0.0);
}

/// H(M(X)|Z) in bits, with M given as a class index per source symbol.
[[nodiscard]] inline double invariance_distortion(std::span<const double> pmf, const Channel& ch,
                                                  std::span<const std::size_t> class_of, std::size_t n_classes) {
  detail::check_dims(pmf, ch);
  if (class_of.size() != pmf.size()) throw ValidationError("class map and pmf dimensions differ");
  std::vector<double> joint(n_classes * ch.cols(), 0.0);
  std::vector<double> q(ch.cols(), 0.0);
  for (std::size_t x = 0; x < ch.rows(); ++x)
    for (std::size_t z = 0; z < ch.cols(); ++z) {
      const double pxz = pmf[x] * ch(x, z);
      joint[class_of[x] * ch.cols() + z] += pxz;
      q[z] += pxz;
    }
  double h = 0.0;
  for (std::size_t m = 0; m < n_classes; ++m)
    for (std::size_t z = 0; z < ch.cols(); ++z) {
      const double pmz = joint[m * ch.cols() + z];
      if (pmz > 0.0) h -= pmz * std::log2(pmz / q[z]);
    }
  return std::max(h, 0.0);
}

[[nodiscard]] inline double invariance_distortion(std::span<const double> pmf, const Channel& ch,
                                                  const EquivalenceSpec& equiv,
                                                  std::optional<Alphabet> alphabet = std::nullopt) {
  detail::check_dims(pmf, ch);
  const auto part = partition_alphabet(pmf, equiv, alphabet);
  return invariance_distortion(pmf, ch, part.class_of, part.classes.size());
}

/// Deterministic channel x -> class(x).
[[nodiscard]] inline Channel class_channel(const ClassPartition& part) {
  Channel ch(part.class_of.size(), part.classes.size());
  for (std::size_t x = 0; x < part.class_of.size(); ++x) ch(x, part.class_of[x]) = 1.0;
  return ch;
}

struct ErasureResult {
  Channel channel;
  double alpha = 0.0;
  double rate = 0.0;        ///< I(X;Z), bits
  double distortion = 0.0;  ///< H(M(X)|Z), bits
  bool trivial = false;     ///< delta > H_M: constant channel used instead
};

/// Z = class(X) with probability 1 - alpha, an erasure symbol (last column)
/// otherwise, alpha = delta / H_M. Achieves (H_M - delta, delta).
[[nodiscard]] inline ErasureResult erasure_channel(std::span<const double> pmf, const EquivalenceSpec& equiv,
                                                   double delta, std::optional<Alphabet> alphabet = std::nullopt) {
  if (!(delta >= 0.0)) throw ValidationError("erasure_channel requires delta >= 0");
  const auto part = partition_alphabet(pmf, equiv, alphabet);
  const double H_M = entropy_bits(part.probs);
  if (!(H_M > 0.0)) throw ValidationError("erasure_channel requires H_M > 0");
  const std::size_t k = part.classes.size();
  ErasureResult out;
  out.trivial = delta > H_M;
  out.alpha = out.trivial ? 1.0 : delta / H_M;
  out.channel = Channel(pmf.size(), k + 1);
  for (std::size_t x = 0; x < pmf.size(); ++x) {
    out.channel(x, part.class_of[x]) = 1.0 - out.alpha;
    out.channel(x, k) += out.alpha;
  }
  out.rate = mutual_information(pmf, out.channel);
  out.distortion = invariance_distortion(pmf, out.channel, part.class_of, k);
  return out;
}

// ---------------------------------------------------------------------------
// Channel optimization oracle
// ---------------------------------------------------------------------------

/// Euclidean projection onto the probability simplex (sort-based).
inline void project_to_simplex(std::span<double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / double(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

struct ChannelOptimizerOptions {
  double step = 0.05;
  std::size_t iterations = 5000;
  double min_step = 1e-12;  ///< a restart stops once backtracking shrinks the step below this
};

struct OptimizedChannel {
  Channel channel;
  double rate = 0.0;
  double distortion = 0.0;
  double objective = 0.0;  ///< rate + beta * distortion
};

namespace detail {

struct LagrangianEval {
  double rate = 0.0;
  double distortion = 0.0;
};

/// Objective terms and (row-preconditioned) gradient of
/// I(X;Z) + beta H(M|Z) with respect to p(z|x).
inline LagrangianEval lagrangian_gradient(std::span<const double> pmf, const Channel& ch,
                                          std::span<const std::size_t> class_of, std::size_t n_classes, double beta,
                                          Channel* grad) {
  constexpr double kFloor = 1e-12;
  const std::size_t nz = ch.cols();
  std::vector<double> q(nz, 0.0), joint(n_classes * nz, 0.0);
  for (std::size_t x = 0; x < ch.rows(); ++x)
    for (std::size_t z = 0; z < nz; ++z) {
      const double pxz = pmf[x] * ch(x, z);
      q[z] += pxz;
      joint[class_of[x] * nz + z] += pxz;
    }
  LagrangianEval ev;
  for (std::size_t x = 0; x < ch.rows(); ++x) {
    for (std::size_t z = 0; z < nz; ++z) {
      const double w = ch(x, z);
      if (pmf[x] > 0.0 && w > 0.0) ev.rate += pmf[x] * w * std::log2(w / q[z]);
      if (grad) {
        // d/dp(z|x) divided by p(x): log2(p(z|x)/p(z)) - beta log2 p(m(x)|z).
        const double log_ratio = std::log2(std::max(w, kFloor) / std::max(q[z], kFloor));
        const double log_post = std::log2(std::max(joint[class_of[x] * nz + z], kFloor) / std::max(q[z], kFloor));
        (*grad)(x, z) = log_ratio - beta * log_post;
      }
    }
  }
  for (std::size_t m = 0; m < n_classes; ++m)
    for (std::size_t z = 0; z < nz; ++z) {
      const double pmz = joint[m * nz + z];
      if (pmz > 0.0) ev.distortion -= pmz * std::log2(pmz / q[z]);
    }
  ev.rate = std::max(ev.rate, 0.0);
  ev.distortion = std::max(ev.distortion, 0.0);
  return ev;
}

}  // namespace detail

/// Locally minimizes I(X;Z) + beta H(M(X)|Z) over channels with z_size
/// outputs: projected gradient descent on each row (gradient scaled by
/// 1/p(x)) with backtracking on the step, from `restarts` random starts.
/// Returns the restart with the lowest objective.
[[nodiscard]] inline OptimizedChannel optimize_channel(std::span<const double> pmf, const EquivalenceSpec& equiv,
                                                       double beta, std::size_t z_size, std::size_t restarts,
                                                       std::uint64_t seed, ChannelOptimizerOptions opts = {},
                                                       std::optional<Alphabet> alphabet = std::nullopt) {
  if (pmf.size() > 64 || z_size > 64) throw CapacityError("optimize_channel supports |X|, |Z| <= 64");
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  if (z_size < 1 || restarts < 1) throw ValidationError("z_size and restarts must be >= 1");
  const auto part = partition_alphabet(pmf, equiv, alphabet);
  const std::size_t k = part.classes.size();
  const CounterRng root(seed, 0xC4A7);

  OptimizedChannel best;
  best.objective = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    auto rng = root.split(r);
    Channel ch(pmf.size(), z_size);
    for (std::size_t x = 0; x < pmf.size(); ++x) {
      // Dirichlet(1) row.
      double s = 0.0;
      for (auto& v : ch.row(x)) s += (v = -std::log(1.0 - rng.uniform()));
      for (auto& v : ch.row(x)) v /= s;
    }
    Channel grad(pmf.size(), z_size);
    auto ev = detail::lagrangian_gradient(pmf, ch, part.class_of, k, beta, &grad);
    double obj = ev.rate + beta * ev.distortion;
    double step = opts.step;
    for (std::size_t it = 0; it < opts.iterations && step > opts.min_step; ++it) {
      // Projected step with backtracking: accept only if the objective decreases.
      Channel trial = ch;
      for (std::size_t x = 0; x < pmf.size(); ++x) {
        if (pmf[x] <= 0.0) continue;
        auto row = trial.row(x);
        for (std::size_t z = 0; z < z_size; ++z) row[z] -= step * grad(x, z);
        project_to_simplex(row);
      }
      const auto trial_ev = detail::lagrangian_gradient(pmf, trial, part.class_of, k, beta, nullptr);
      const double trial_obj = trial_ev.rate + beta * trial_ev.distortion;
      if (trial_obj < obj) {
        ch = std::move(trial);
        ev = detail::lagrangian_gradient(pmf, ch, part.class_of, k, beta, &grad);
        obj = ev.rate + beta * ev.distortion;
        step = std::min(opts.step, step * 2.0);
      } else {
        step *= 0.5;
      }
    }
    if (obj < best.objective) {
      best.objective = obj;
      best.rate = ev.rate;
      best.distortion = ev.distortion;
      best.channel = ch;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

struct RIPoint {
  double delta = 0.0;
  double rate = 0.0;
};

struct RICurve {
  std::vector<RIPoint> points;
  double H_M = 0.0;
};

/// Analytic curve on an evenly spaced delta grid over [0, max_delta].
[[nodiscard]] inline RICurve analytic_ri_curve(double H_M, std::size_t grid, double max_delta) {
  RICurve c;
  c.H_M = H_M;
  for (std::size_t i = 0; i < grid; ++i) {
    const double d = grid == 1 ? 0.0 : max_delta * double(i) / double(grid - 1);
    c.points.push_back({d, ri_function(H_M, d)});
  }
  return c;
}

/// One row of the ri-curve report.
struct RICurveRow {
  double delta_bits = 0.0;
  double rate_theory = 0.0;
  double rate_erasure = 0.0;
  double rate_oracle = 0.0;
  double distortion_oracle = 0.0;
};

/// Cheapest oracle point with distortion <= delta (+ tol); NaN when none qualifies.
[[nodiscard]] inline std::pair<double, double> oracle_envelope(std::span<const OptimizedChannel> oracle,
                                                               double delta, double tol = 1e-9) {
  double rate = std::numeric_limits<double>::quiet_NaN(), dist = rate;
  for (const auto& o : oracle)
    if (o.distortion <= delta + tol && !(o.rate >= rate)) {
      rate = o.rate;
      dist = o.distortion;
    }
  return {rate, dist};
}

[[nodiscard]] inline std::vector<RICurveRow> ri_curve_table(std::span<const double> pmf, const EquivalenceSpec& equiv,
                                                            std::span<const OptimizedChannel> oracle,
                                                            std::size_t grid,
                                                            std::optional<Alphabet> alphabet = std::nullopt) {
  const auto part = partition_alphabet(pmf, equiv, alphabet);
  const double H_M = entropy_bits(part.probs);
  std::vector<RICurveRow> rows;
  for (const auto& p : analytic_ri_curve(H_M, grid, H_M).points) {
    RICurveRow row;
    row.delta_bits = p.delta;
    row.rate_theory = p.rate;
    row.rate_erasure = erasure_channel(pmf, equiv, std::min(p.delta, H_M), alphabet).rate;
    std::tie(row.rate_oracle, row.distortion_oracle) = oracle_envelope(oracle, p.delta);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ivc
