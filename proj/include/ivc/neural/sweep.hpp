#pragma once

// Lambda sweeps over objectives and seeds, run-level parallel, plus the
// partition export of one rotation-trained model.

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "ivc/neural/partition.hpp"
#include "ivc/neural/train.hpp"

namespace ivc::nn {

/// Lambda sweep of neural compressors on a 2-D source.
struct BananaConfig {
  SourceSpec source = Banana{};
  std::vector<Objective> objectives{Objective::VC, Objective::VIC};
  AugmentationSpec augmentation = Rotation{};
  EquivalenceSpec equivalence = Norm{};
  std::vector<double> lambdas{0.01, 0.03, 0.1, 0.3, 1.0, 3.0};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  TrainSpec train = default_train();
  /// VIC model trained at this lambda (first seed) is exported as a partition.
  std::optional<double> partition_lambda = 0.07;
  GridSpec partition;

  [[nodiscard]] static TrainSpec default_train() {
    TrainSpec s;
    s.batch_size = 32;
    return s;
  }
};

struct SweepRun {
  Objective objective = Objective::VIC;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  RunMetrics metrics;
};

struct PartitionExport {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  RunMetrics metrics;
  PartitionMap map;
  double radial_consistency = 0.0;
  std::size_t regions = 0;
};

struct SweepResult {
  std::vector<SweepRun> runs;  ///< objective-major, then lambda, then seed
  /// AURD of every seed (in config order) per objective.
  std::map<Objective, std::vector<double>> aurd;
  std::optional<PartitionExport> partition;

  [[nodiscard]] MeanSe aurd_summary(Objective o) const { return mean_se(aurd.at(o)); }
};

/// Trains every (objective, lambda, seed) and the optional partition model,
/// `jobs` runs at a time. Results are independent of `jobs`. `on_done` is
/// called (serialized) after each run.
[[nodiscard]] inline SweepResult run_sweep(const BananaConfig& cfg, std::size_t jobs = 1,
                                           const std::function<void(const SweepRun&)>& on_done = {}) {
  struct Task {
    Objective objective;
    double lambda;
    std::uint64_t seed;
    bool partition;
  };
  std::vector<Task> tasks;
  for (auto o : cfg.objectives)
    for (double l : cfg.lambdas)
      for (auto s : cfg.seeds) tasks.push_back({o, l, s, false});
  if (cfg.partition_lambda) tasks.push_back({Objective::VIC, *cfg.partition_lambda, cfg.seeds.front(), true});

  SweepResult result;
  result.runs.resize(cfg.objectives.size() * cfg.lambdas.size() * cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const Task& t = tasks[k];
      try {
        TrainSpec spec = cfg.train;
        spec.objective = t.objective;
        spec.lambda = t.lambda;
        spec.seed = t.seed;
        TrainResult tr = train(spec, cfg.source, cfg.augmentation, cfg.equivalence);
        if (t.partition) {
          PartitionExport p{t.lambda, t.seed, tr.metrics, {}, 0.0, 0};
          p.map = quantization_partition(tr.model.encoder, tr.model.eb, cfg.partition,
                                         tr.model.decoder ? &*tr.model.decoder : nullptr);
          p.radial_consistency = radial_consistency(p.map);
          p.regions = count_regions(p.map);
          std::lock_guard lock(mu);
          result.partition = std::move(p);
        } else {
          SweepRun run{t.objective, t.lambda, t.seed, std::move(tr.metrics)};
          std::lock_guard lock(mu);
          result.runs[k] = run;
          if (on_done) on_done(result.runs[k]);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto o : cfg.objectives) {
    auto& areas = result.aurd[o];
    for (auto s : cfg.seeds) {
      std::vector<RDPoint> pts;
      for (const auto& r : result.runs)
        if (r.objective == o && r.seed == s) pts.push_back({r.metrics.eval_distortion, r.metrics.eval_rate_bits});
      areas.push_back(aurd(pts));
    }
  }
  return result;
}

}  // namespace ivc::nn
