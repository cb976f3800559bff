#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ivc/autodiff.hpp"
#include "ivc/rng.hpp"

namespace ivc::nn {

using ad::Graph;
using ad::Parameter;
using ad::Tensor;
using ad::Var;

enum class Activation : std::uint8_t { Softplus, Relu };

/// widths = {input, hidden..., output}; at least one hidden layer.
struct MlpSpec {
  std::vector<std::size_t> widths;
  Activation activation = Activation::Softplus;
};

inline void validate(const MlpSpec& spec) {
  if (spec.widths.size() < 3) throw ValidationError("MLP needs an input, at least one hidden layer and an output");
  for (auto w : spec.widths)
    if (w == 0) throw ValidationError("MLP layer width must be positive");
}

/// Fully connected network; the output layer is linear.
class Mlp {
 public:
  Mlp() = default;

  /// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  Mlp(MlpSpec spec, std::uint64_t seed, const std::string& name = "mlp") : spec_(std::move(spec)) {
    validate(spec_);
    CounterRng rng(seed, 0x3170);
    for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
      const auto fan_in = static_cast<Eigen::Index>(spec_.widths[l]);
      const auto fan_out = static_cast<Eigen::Index>(spec_.widths[l + 1]);
      const double bound = std::sqrt(6.0 / double(fan_in));
      Tensor w(fan_in, fan_out);
      auto layer_rng = rng.split(l);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = layer_rng.uniform(-bound, bound);
      weights_.emplace_back(name + ".w" + std::to_string(l), std::move(w));
      biases_.emplace_back(name + ".b" + std::to_string(l), Tensor::Zero(1, fan_out));
    }
  }

  // Parameters are referenced by address from graphs; keep them in place.
  Mlp(const Mlp&) = default;
  Mlp& operator=(const Mlp&) = default;
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  [[nodiscard]] const MlpSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::size_t input_dim() const { return spec_.widths.front(); }
  [[nodiscard]] std::size_t output_dim() const { return spec_.widths.back(); }

  Var forward(Graph& g, Var x) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      x = g.affine(x, g.param(weights_[l]), g.param(biases_[l]));
      if (l + 1 < weights_.size()) x = spec_.activation == Activation::Softplus ? g.softplus(x) : g.relu(x);
    }
    return x;
  }

  /// Graph-free forward pass for inference.
  [[nodiscard]] Tensor apply(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Tensor next = h * weights_[l].value;
      next.rowwise() += biases_[l].value.row(0);
      if (l + 1 < weights_.size()) {
        if (spec_.activation == Activation::Softplus)
          next = (next.array().max(0.0) + (1.0 + (-next.array().abs()).exp()).log()).matrix();
        else
          next = next.cwiseMax(0.0);
      }
      h = std::move(next);
    }
    return h;
  }

  [[nodiscard]] std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.push_back(&weights_[l]);
      out.push_back(&biases_[l]);
    }
    return out;
  }

  [[nodiscard]] const std::vector<Parameter>& weights() const noexcept { return weights_; }
  [[nodiscard]] const std::vector<Parameter>& biases() const noexcept { return biases_; }

 private:
  MlpSpec spec_;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
};

}  // namespace ivc::nn
