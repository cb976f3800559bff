// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ivc.hpp"
#include "random_corpora.hpp"

namespace {

using namespace ivc;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> check;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double plain_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// 1. Erasure construction on the line; channel oracle never below it and
//    reaching both vertices.
Verdict ri_certification() {
  const auto cfg = cli::default_ri_curve_config();
  const auto pmf = source_pmf(cfg.source);
  const auto& pre = std::get<Preimage>(cfg.equivalence);
  std::vector<double> class_mass(3, 0.0);
  for (std::size_t x = 0; x < pmf.size(); ++x) class_mass[pre.class_of[x]] += pmf[x];
  const double H_M = plain_entropy(class_mass);

  double erasure_err = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double delta = H_M * i / 10.0;
    const auto e = erasure_channel(pmf, cfg.equivalence, delta);
    erasure_err = std::max({erasure_err, std::abs(e.rate - std::max(0.0, H_M - delta)),
                            std::abs(mutual_information(pmf, e.channel) - std::max(0.0, H_M - delta))});
  }

  double worst_gap = 0.0, to_full = 1e9, to_zero = 1e9;
  for (double beta : {0.25, 0.5, 2.0, 4.0}) {
    const auto o = optimize_channel(pmf, cfg.equivalence, beta, 3, 8, cfg.seed);
    worst_gap = std::max(worst_gap, std::max(0.0, H_M - o.distortion) - o.rate);
    to_full = std::min(to_full, std::max(std::abs(o.rate - H_M), std::abs(o.distortion)));
    to_zero = std::min(to_zero, std::max(std::abs(o.rate), std::abs(o.distortion - H_M)));
  }
  const bool pass = erasure_err <= 1e-9 && worst_gap <= 1e-2 && to_full <= 1e-2 && to_zero <= 1e-2;
  return {pass, fmt("H_M=%.6f erasure_err=%.2e below_line=%.2e vertex_gap=(%.2e, %.2e)", H_M, erasure_err,
                    worst_gap, to_full, to_zero)};
}

// 2. Number of heads of 100 fair coins, 10^4 sequences.
Verdict coin_gain() {
  const SourceSpec src = IidSequence{{0.5, 0.5}, 100};
  const auto s = cli::code_invariants(src, Counts{}, 10000, 7);
  double h_binom = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double p = std::exp(std::lgamma(101.0) - std::lgamma(k + 1.0) - std::lgamma(101.0 - k) - 100.0 * std::log(2.0));
    h_binom -= p * std::log2(p);
  }
  const double gain = 100.0 / s.invariant_bits;
  const bool pass = s.roundtrip && s.invariant_bits <= 4.6 && gain >= 20.0;
  return {pass, fmt("bits/seq=%.4f binomial_entropy=%.4f lossless=100 gain=%.2fx roundtrip=%d", s.invariant_bits,
                    h_binom, gain, int(s.roundtrip))};
}

// 3. rANS roundtrip and length on 1000 randomized corpora.
Verdict rans_contract() {
  CounterRng rng(1234);
  std::size_t roundtrips = 0, large = 0, within = 0;
  double worst_excess = -1e9;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const auto c = test::random_corpus(rng, t);
    const auto values = maximal_invariants(c.equiv, c.batch);
    const auto coded = invariant_compress(c.batch, c.equiv, c.model);
    const auto decoded = invariant_decompress(CodeStream::parse(coded.stream.serialize()), c.equiv, c.model, c.alphabet);
    roundtrips += decoded.values == values;
    if (values.size() >= 1000) {
      ++large;
      const double excess = coded.stats.payload_bits - (1.02 * coded.stats.model_bits + 64.0);
      within += excess <= 0.0;
      worst_excess = std::max(worst_excess, excess);
    }
  }
  const bool pass = roundtrips == 1000 && within == large;
  return {pass, fmt("roundtrip=%zu/1000 length_ok=%zu/%zu worst_margin=%.1f bits", roundtrips, within, large,
                    -worst_excess)};
}

// 4. Graphs on 4 nodes: class count and structural entropy against an
//    independent orbit enumeration.
Verdict graph_invariance() {
  const std::uint32_t nodes = 4;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) pairs.emplace_back(i, j);
  auto edge_index = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    return int(std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) - pairs.begin());
  };
  std::vector<int> orbit_min(64);
  for (int g = 0; g < 64; ++g) {
    std::array<int, 4> perm{0, 1, 2, 3};
    int best = 64;
    do {
      int h = 0;
      for (int e = 0; e < 6; ++e)
        if (g >> e & 1) h |= 1 << edge_index(perm[pairs[e].first], perm[pairs[e].second]);
      best = std::min(best, h);
    } while (std::next_permutation(perm.begin(), perm.end()));
    orbit_min[g] = best;
  }
  std::map<int, int> orbit_size;
  for (int m : orbit_min) ++orbit_size[m];
  std::vector<double> class_pmf;
  for (const auto& [m, k] : orbit_size) class_pmf.push_back(k / 64.0);
  const double oracle = plain_entropy(class_pmf);

  std::set<InvariantValue> classes;
  for (std::uint32_t g = 0; g < 64; ++g) {
    std::vector<std::uint32_t> edges(6);
    for (int e = 0; e < 6; ++e) edges[e] = g >> e & 1;
    classes.insert(maximal_invariant(GraphCanonical{nodes}, DiscreteExample{edges, 2}));
  }
  const double H_M = invariant_entropies(IidSequence{{0.5, 0.5}, 6}, GraphCanonical{nodes}).H_M;
  const bool pass = classes.size() == 11 && orbit_size.size() == 11 && std::abs(H_M - oracle) <= 1e-9;
  return {pass, fmt("classes=%zu (orbits %zu) structural_entropy=%.10f oracle=%.10f", classes.size(), orbit_size.size(),
                    H_M, oracle)};
}

// 5. Banana sweep: VIC beats VC in AURD by at least 15%.
Verdict banana_aurd() {
  nn::BananaConfig cfg;
  cfg.partition_lambda.reset();
  const auto r = nn::run_sweep(cfg, 1, [](const nn::SweepRun& run) {
    std::printf("      %-3s lambda=%-5g seed=%llu rate=%.3f distortion=%.4f\n", nn::to_string(run.objective), run.lambda,
                static_cast<unsigned long long>(run.seed), run.metrics.eval_rate_bits, run.metrics.eval_distortion);
    std::fflush(stdout);
  });
  const auto vc = r.aurd_summary(nn::Objective::VC), vic = r.aurd_summary(nn::Objective::VIC);
  const double reduction = 1.0 - vic.mean / vc.mean;
  return {reduction >= 0.15, fmt("AURD vc=%.4f+-%.4f vic=%.4f+-%.4f reduction=%.1f%%", vc.mean, vc.se, vic.mean, vic.se,
                                 100.0 * reduction)};
}

// 6. Rotation-trained VIC at lambda 0.07: radial partition of [-5, 5]^2.
Verdict disk_partition() {
  nn::BananaConfig cfg;
  nn::TrainSpec spec = cfg.train;
  spec.objective = nn::Objective::VIC;
  spec.lambda = 0.07;
  spec.seed = cfg.seeds.front();
  const auto tr = nn::train(spec, cfg.source, cfg.augmentation, cfg.equivalence);
  const auto map = nn::quantization_partition(tr.model.encoder, tr.model.eb, nn::GridSpec{-5.0, 5.0, 500});
  const double rc = nn::radial_consistency(map);

  // Same check restricted to the annulus holding the data (radius 12 to
  // 15.5), reported for context only.
  const auto wide = nn::quantization_partition(tr.model.encoder, tr.model.eb, nn::GridSpec{-16.0, 16.0, 500});
  std::map<int, std::map<std::uint32_t, int>> votes;
  int inside = 0;
  for (std::size_t i = 0; i < wide.class_id.size(); ++i) {
    const double rad = std::hypot(wide.x(i), wide.y(i));
    if (rad < 12.0 || rad > 15.5) continue;
    ++votes[std::min(199, int((rad - 12.0) / 3.5 * 200))][wide.class_id[i]];
    ++inside;
  }
  int agree = 0;
  for (const auto& [bin, v] : votes) {
    int best = 0;
    for (const auto& [c, k] : v) best = std::max(best, k);
    agree += best;
  }
  return {rc >= 0.95, fmt("radial_consistency=%.4f classes=%zu regions=%zu (data annulus: %.4f) rate=%.3f", rc,
                          map.num_classes(), nn::count_regions(map), double(agree) / inside, tr.metrics.eval_rate_bits)};
}

// 7. BINCE with label resampling on a 10-class toy source.
Verdict bince_near_optimal() {
  const std::size_t k = 200;
  std::vector<std::uint32_t> labels(k);
  for (std::size_t i = 0; i < k; ++i) labels[i] = static_cast<std::uint32_t>(i % 10);
  const SourceSpec src = Categorical{std::vector<double>(k, 1.0 / double(k))};
  nn::TrainSpec spec;
  spec.objective = nn::Objective::BINCE;
  spec.lambda = 0.08;
  spec.epochs = 200;
  spec.steps_per_epoch = 100;
  spec.batch_size = 64;
  spec.hidden = {128, 128};
  spec.symbol_labels = labels;
  spec.seed = 1;
  const auto tr = nn::train(spec, src, LabelResample{}, Preimage{labels});
  const double h_y = std::log2(10.0);
  return {tr.metrics.eval_rate_bits <= h_y + 2.0,
          fmt("rate=%.3f bound=%.3f (H(Y)=%.3f) label_log_loss=%.3f", tr.metrics.eval_rate_bits, h_y + 2.0, h_y,
              tr.metrics.eval_distortion)};
}

// 8. Finite-difference check of every op and loss.
Verdict gradient_suite() {
  double worst = 0.0;
  std::string worst_name;
  const auto cases = nn::gradient_suite(0);
  for (const auto& c : cases)
    if (c.result.max_rel_error >= worst) {
      worst = c.result.max_rel_error;
      worst_name = c.name;
    }
  return {worst < 1e-5, fmt("cases=%zu max_rel_error=%.2e (%s)", cases.size(), worst, worst_name.c_str())};
}

// 9. Array compressor on 512-dim Gaussian features.
Verdict feature_frontier() {
  const nn::FeatureCompressConfig cfg;
  const auto rows = nn::run_feature_sweep(cfg);
  bool monotone = true, realizable = true, roundtrip = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double n = double(cfg.samples);
    const double theo = rows[i].theoretical_bits * n, real = rows[i].realized_bits * n;
    realizable = realizable && std::abs(real - theo) <= 0.02 * theo + 64.0;
    roundtrip = roundtrip && rows[i].roundtrip;
    if (i > 0)
      monotone = monotone && rows[i].theoretical_bits > rows[i - 1].theoretical_bits &&
                 rows[i].mse_per_dim < rows[i - 1].mse_per_dim;
    os << fmt("lambda=%g bits=%.1f real=%.1f mse=%.4f; ", rows[i].lambda, rows[i].theoretical_bits,
              rows[i].realized_bits, rows[i].mse_per_dim);
  }
  return {monotone && realizable && roundtrip, os.str() + fmt("monotone=%d realizable=%d", monotone, realizable)};
}

}  // namespace

int main(int argc, char** argv) {
  ivc::tune_allocator();
  const std::vector<Criterion> all{
      {1, "rate-invariance certification", 60, ri_certification},
      {2, "coin-flip rate gain", 10, coin_gain},
      {3, "rANS contract", 30, rans_contract},
      {4, "graph invariance", 5, graph_invariance},
      {5, "banana VIC vs VC AURD", 1800, banana_aurd},
      {6, "disk-shaped partition", 1800, disk_partition},
      {7, "BINCE near-optimality", 300, bince_near_optimal},
      {8, "gradient suite", 60, gradient_suite},
      {9, "feature compressor frontier", 300, feature_frontier},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  double banana_seconds = 0.0;  // 5 and 6 share one 30-minute budget
  for (const auto& c : all) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.id == 5) banana_seconds = dt;
    const double budget = c.id == 6 ? c.budget_s - banana_seconds : c.budget_s;
    const bool in_time = dt < budget;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("%s [%d] %s: %s | %.1fs (budget %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), dt,
                budget, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
