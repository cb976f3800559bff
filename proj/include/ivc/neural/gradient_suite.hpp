#pragma once

// Finite-difference checks of every differentiable op and every training
// loss, on small random instances with fixed seeds.

#include <functional>
#include <string>
#include <vector>

#include "ivc/neural/evaluate.hpp"
#include "ivc/neural/losses.hpp"

namespace ivc::nn {

struct GradCase {
  std::string name;
  ad::GradCheckResult result;
};

namespace detail {

inline Tensor random_tensor(CounterRng& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
  Tensor t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

/// Entries of magnitude in [lo, hi] with random sign (kept off kinks at 0).
inline Tensor signed_tensor(CounterRng& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
  Tensor t = random_tensor(rng, r, c, lo, hi);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (rng.uniform() < 0.5) t.data()[i] = -t.data()[i];
  return t;
}

/// Contracts a tensor-valued expression with fixed random weights so every
/// output entry contributes a distinct gradient.
inline Var contract(Graph& g, Var y, std::uint64_t seed) {
  CounterRng rng(seed, 0xC0A7);
  const Tensor& v = g.value(y);
  return g.sum(g.mul(y, g.constant(random_tensor(rng, v.rows(), v.cols(), -1.0, 1.0))));
}

/// Scales the output layer so the network starts near zero output; keeps the
/// loss value O(1), where central differences keep ~10 significant digits.
inline void shrink_output(Mlp& mlp, double factor) {
  auto params = mlp.parameters();
  params[params.size() - 2]->value *= factor;
}

}  // namespace detail

/// Runs the whole suite; every case should report max_rel_error < 1e-5.
[[nodiscard]] inline std::vector<GradCase> gradient_suite(std::uint64_t seed = 0) {
  using detail::contract;
  using detail::random_tensor;
  using detail::signed_tensor;
  std::vector<GradCase> out;
  CounterRng rng(seed, 0x6CA5E);
  auto check = [&out](std::string name, const ad::GraphBuilder& f, std::vector<Parameter*> params) {
    out.push_back({std::move(name), ad::grad_check(f, params)});
  };

  Parameter a("a", random_tensor(rng, 3, 4, -1.0, 1.0));
  Parameter b("b", random_tensor(rng, 3, 4, -1.0, 1.0));
  Parameter pos("pos", random_tensor(rng, 3, 4, 0.5, 2.0));
  Parameter off0("off0", signed_tensor(rng, 3, 4, 0.1, 1.0));
  Parameter m("m", random_tensor(rng, 4, 5, -1.0, 1.0));
  Parameter mt("mt", random_tensor(rng, 5, 4, -1.0, 1.0));
  Parameter row("row", random_tensor(rng, 1, 4, 0.5, 1.5));
  Parameter col("col", random_tensor(rng, 3, 1, -1.0, 1.0));
  Parameter bias("bias", random_tensor(rng, 1, 5, -1.0, 1.0));

  check("add", [&](Graph& g) { return contract(g, g.add(g.param(a), g.param(b)), 1); }, {&a, &b});
  check("sub", [&](Graph& g) { return contract(g, g.sub(g.param(a), g.param(b)), 2); }, {&a, &b});
  check("mul", [&](Graph& g) { return contract(g, g.mul(g.param(a), g.param(b)), 3); }, {&a, &b});
  check("scale", [&](Graph& g) { return contract(g, g.scale(g.param(a), -2.5), 4); }, {&a});
  check("matmul", [&](Graph& g) { return contract(g, g.matmul(g.param(a), g.param(m)), 5); }, {&a, &m});
  check("matmul_nt", [&](Graph& g) { return contract(g, g.matmul_nt(g.param(a), g.param(mt)), 6); }, {&a, &mt});
  check("affine", [&](Graph& g) { return contract(g, g.affine(g.param(a), g.param(m), g.param(bias)), 7); },
        {&a, &m, &bias});
  check("add_row", [&](Graph& g) { return contract(g, g.add_row(g.param(a), g.param(row)), 8); }, {&a, &row});
  check("mul_row", [&](Graph& g) { return contract(g, g.mul_row(g.param(a), g.param(row)), 9); }, {&a, &row});
  check("add_col", [&](Graph& g) { return contract(g, g.add_col(g.param(a), g.param(col)), 10); }, {&a, &col});
  check("relu", [&](Graph& g) { return contract(g, g.relu(g.param(off0)), 11); }, {&off0});
  check("softplus", [&](Graph& g) { return contract(g, g.softplus(g.scale(g.param(a), 4.0)), 12); }, {&a});
  check("exp", [&](Graph& g) { return contract(g, g.exp(g.param(a)), 13); }, {&a});
  check("log", [&](Graph& g) { return contract(g, g.log(g.param(pos)), 14); }, {&pos});
  check("square", [&](Graph& g) { return contract(g, g.square(g.param(a)), 15); }, {&a});
  check("reciprocal", [&](Graph& g) { return contract(g, g.reciprocal(g.param(pos)), 16); }, {&pos});
  check("abs", [&](Graph& g) { return contract(g, g.abs(g.param(off0)), 17); }, {&off0});
  check("clamp", [&](Graph& g) { return contract(g, g.clamp(g.param(off0), -0.55, 0.55), 18); }, {&off0});
  check("sum", [&](Graph& g) { return g.sum(g.square(g.param(a))); }, {&a});
  check("mean", [&](Graph& g) { return g.mean(g.square(g.param(a))); }, {&a});
  check("sum_axis0", [&](Graph& g) { return contract(g, g.sum_axis(g.param(a), 0), 19); }, {&a});
  check("sum_axis1", [&](Graph& g) { return contract(g, g.sum_axis(g.param(a), 1), 20); }, {&a});
  check("logsumexp0", [&](Graph& g) { return contract(g, g.logsumexp(g.scale(g.param(a), 3.0), 0), 21); }, {&a});
  check("logsumexp1", [&](Graph& g) { return contract(g, g.logsumexp(g.scale(g.param(a), 3.0), 1), 22); }, {&a});
  check("concat_rows", [&](Graph& g) { return contract(g, g.concat_rows(g.param(a), g.param(b)), 23); }, {&a, &b});
  check("index_select", [&](Graph& g) { return contract(g, g.index_select(g.param(a), {2, 0, 2, 1}), 24); }, {&a});
  check("pick", [&](Graph& g) { return contract(g, g.pick(g.param(a), {3, 0, 1}), 25); }, {&a});
  {
    // Positions kept away from the integer knots where the slope jumps.
    Tensor p = random_tensor(rng, 3, 2, 0.0, 3.0);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = std::floor(p.data()[i]) + 0.1 + 0.8 * (p.data()[i] - std::floor(p.data()[i]));
    Parameter table("table", random_tensor(rng, 2, 5, 0.2, 1.0));
    Parameter ppos("ppos", p);
    check("interp_lookup", [&](Graph& g) { return contract(g, g.interp_lookup(g.param(table), g.param(ppos)), 26); },
          {&table, &ppos});
  }

  // Networks and losses on fixed data and fixed noise.
  Mlp mlp({{2, 8, 8, 2}, Activation::Softplus}, mix64(seed ^ 1), "mlp");
  const Tensor xin = random_tensor(rng, 6, 2, -2.0, 2.0);
  const Tensor target = random_tensor(rng, 6, 2, -1.0, 1.0);
  check("mlp_squared_loss", [&](Graph& g) {
    return g.mean(g.square(g.sub(mlp.forward(g, g.constant(xin)), g.constant(target))));
  }, mlp.parameters());

  Mlp relu_mlp({{2, 8, 2}, Activation::Relu}, mix64(seed ^ 2), "relu_mlp");
  check("relu_mlp_squared_loss", [&](Graph& g) {
    return g.mean(g.square(g.sub(relu_mlp.forward(g, g.constant(xin)), g.constant(target))));
  }, relu_mlp.parameters());

  EntropyBottleneck eb(2, 6);
  {
    Tensor prior(2, eb.bins());
    for (Eigen::Index i = 0; i < prior.size(); ++i) prior.data()[i] = rng.uniform(0.2, 1.0);
    eb.set_prior(prior);
    eb.set_scale(random_tensor(rng, 1, 2, 0.5, 1.5));
    eb.set_offset(random_tensor(rng, 1, 2, -0.3, 0.3));
  }
  Parameter zlat("z", random_tensor(rng, 5, 2, -3.0, 3.0));
  std::vector<Parameter*> eb_and_z = eb.parameters();
  eb_and_z.push_back(&zlat);
  check("bottleneck_train_rate", [&](Graph& g) {
    auto bn = bottleneck_apply(g, g.param(zlat), eb, BottleneckMode::Train, CounterRng(seed, 0xB07));
    return g.sum(bn.rate_bits);
  }, eb_and_z);
  check("bottleneck_train_z_hat", [&](Graph& g) {
    auto bn = bottleneck_apply(g, g.param(zlat), eb, BottleneckMode::Train, CounterRng(seed, 0xB07));
    return contract(g, bn.z_hat, 27);
  }, eb_and_z);
  check("bottleneck_eval_rate", [&](Graph& g) {
    auto bn = bottleneck_apply(g, g.param(zlat), eb, BottleneckMode::Eval);
    return g.sum(bn.rate_bits);
  }, eb.parameters());

  // Points of order one: raw source samples sit at radius ~14, where the
  // loss is in the thousands and central differences lose digits to rounding.
  auto small_batch = [&rng](std::size_t n) {
    SampleBatch b = SampleBatch::continuous(n, 2);
    for (auto& v : b.real) v = rng.uniform(-2.0, 2.0);
    return b;
  };
  const SampleBatch banana = small_batch(4);
  Mlp enc({{2, 12, 12, 2}, Activation::Softplus}, mix64(seed ^ 4), "encoder");
  Mlp dec({{2, 12, 12, 2}, Activation::Softplus}, mix64(seed ^ 5), "decoder");
  detail::shrink_output(enc, 0.3);
  detail::shrink_output(dec, 0.1);
  EntropyBottleneck ebv(2);
  std::vector<Parameter*> vic_params = enc.parameters();
  for (auto* p : dec.parameters()) vic_params.push_back(p);
  for (auto* p : ebv.parameters()) vic_params.push_back(p);
  check("vc_loss", [&](Graph& g) { return vic_loss(g, banana, Identity{}, enc, dec, ebv, 0.05, 11).loss; }, vic_params);
  check("vic_loss", [&](Graph& g) { return vic_loss(g, banana, Rotation{}, enc, dec, ebv, 0.05, 12).loss; }, vic_params);

  const SampleBatch four = small_batch(4);
  Mlp critic_enc({{2, 12, 12, 3}, Activation::Softplus}, mix64(seed ^ 7), "encoder");
  detail::shrink_output(critic_enc, 0.3);
  EntropyBottleneck ebb(3);
  std::vector<Parameter*> bince_params = critic_enc.parameters();
  for (auto* p : ebb.parameters()) bince_params.push_back(p);
  check("bince_loss", [&](Graph& g) {
    return bince_loss(g, four, Rotation{}, critic_enc, ebb, DotCritic{0.1}, 0.05, 13).loss;
  }, bince_params);
  check("contrastive_loss", [&](Graph& g) {
    return contrastive_loss(g, four, Rotation{}, critic_enc, DotCritic{0.1}, 13).loss;
  }, critic_enc.parameters());

  {
    Categorical cat{std::vector<double>(12, 1.0 / 12.0)};
    std::vector<std::uint32_t> labels(12);
    for (std::uint32_t i = 0; i < 12; ++i) labels[i] = i % 3;
    const SampleBatch xs = sample_source(cat, 6, mix64(seed ^ 8));
    Mlp onehot_enc({{12, 8, 2}, Activation::Softplus}, mix64(seed ^ 9), "encoder");
    detail::shrink_output(onehot_enc, 0.3);
    EntropyBottleneck ebl(2);
    std::vector<Parameter*> params = onehot_enc.parameters();
    for (auto* p : ebl.parameters()) params.push_back(p);
    const AugmentationSpec aug = bind_labels(LabelResample{}, xs, labels);
    check("bince_label_resample_loss", [&](Graph& g) {
      return bince_loss(g, xs, aug, onehot_enc, ebl, DotCritic{0.1}, 0.1, 14).loss;
    }, params);
  }

  {
    Readout readout(2, 3, {6, 6}, mix64(seed ^ 10));
    std::vector<std::size_t> cls{0, 2, 1, 1, 0, 2};
    check("readout_log_loss", [&](Graph& g) {
      const Var o = readout.forward(g, g.constant(xin));
      return g.mean(g.sub(g.logsumexp(o, 1), g.pick(o, cls)));
    }, readout.parameters());
    Readout reg(2, 2, {6, 6}, mix64(seed ^ 11));
    check("readout_squared_loss", [&](Graph& g) {
      return g.mean(g.square(g.sub(reg.forward(g, g.constant(xin)), g.constant(target))));
    }, reg.parameters());
  }

  {
    EntropyBottleneck ebf(3, 8);
    ebf.set_scale(Tensor::Constant(1, 3, 0.7));
    const Tensor feats = random_tensor(rng, 6, 3, -2.0, 2.0);
    check("feature_compressor_loss", [&](Graph& g) {
      const Var z = g.constant(feats);
      auto bn = bottleneck_apply(g, z, ebf, BottleneckMode::Train, CounterRng(seed, 0xFEA));
      const Var mse = g.sum_axis(g.square(g.sub(bn.z_hat, z)), 1);
      return g.mean(g.add(g.scale(mse, 4.0), bn.rate_bits));
    }, ebf.parameters());
  }
  return out;
}

}  // namespace ivc::nn
