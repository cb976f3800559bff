#pragma once

#include <cmath>
#include <vector>

#include "ivc/autodiff.hpp"

namespace ivc::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(std::vector<ad::Parameter*> params, AdamOptions opts = {}) : params_(std::move(params)), opts_(opts) {
    lr_scale_.assign(params_.size(), 1.0);
    for (auto* p : params_) {
      m_.push_back(ad::Tensor::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(ad::Tensor::Zero(p->value.rows(), p->value.cols()));
    }
  }

  /// Per-parameter learning-rate multiplier.
  void set_lr_scale(const ad::Parameter* p, double scale) {
    for (std::size_t k = 0; k < params_.size(); ++k)
      if (params_[k] == p) lr_scale_[k] = scale;
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(opts_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, double(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto m = m_[k].array();
      auto v = v_[k].array();
      const auto g = p.grad.array();
      m = opts_.beta1 * m + (1.0 - opts_.beta1) * g;
      v = opts_.beta2 * v + (1.0 - opts_.beta2) * g.square();
      p.value.array() -= (lr * lr_scale_[k] / c1) * m / ((v * (1.0 / c2)).sqrt() + opts_.eps);
    }
  }

  [[nodiscard]] std::size_t steps() const noexcept { return t_; }

 private:
  std::vector<ad::Parameter*> params_;
  AdamOptions opts_;
  std::vector<ad::Tensor> m_, v_;
  std::vector<double> lr_scale_;
  std::size_t t_ = 0;
};

/// Exponential decay from `start` at epoch 0 to `end` at the last epoch.
[[nodiscard]] inline double exponential_lr(double start, double end, std::size_t epoch, std::size_t epochs) {
  if (epochs <= 1) return start;
  const double frac = double(epoch) / double(epochs - 1);
  return start * std::pow(end / start, frac);
}

}  // namespace ivc::nn
