#pragma once

// JSON (de)serialization of specs and experiment configs. Every object is
// read strictly: missing required keys, wrong types and unknown keys raise
// ConfigError naming the JSON path of the offending value.

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ivc/invariance.hpp"
#include "ivc/neural/feature_compressor.hpp"
#include "ivc/neural/sweep.hpp"
#include "ivc/sources.hpp"

namespace ivc {

using Json = nlohmann::json;

/// Schema violation at `path` (e.g. "$.train.hidden[1]").
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string path, const std::string& what)
      : ValidationError(path + ": " + what), path_(std::move(path)) {}
  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

namespace config {

inline std::string child(const std::string& path, const std::string& key) { return path + "." + key; }
inline std::string child(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

template <class T>
T as(const Json& j, const std::string& path);

template <>
inline double as<double>(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

template <>
inline std::uint64_t as<std::uint64_t>(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ConfigError(path, "expected a non-negative integer");
  return static_cast<std::uint64_t>(j.get<std::int64_t>());
}

template <>
inline std::uint32_t as<std::uint32_t>(const Json& j, const std::string& path) {
  const auto v = as<std::uint64_t>(j, path);
  if (v > 0xFFFFFFFFULL) throw ConfigError(path, "integer out of 32-bit range");
  return static_cast<std::uint32_t>(v);
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t is read as a 64-bit unsigned integer");

template <>
inline bool as<bool>(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected a boolean");
  return j.get<bool>();
}

template <>
inline std::string as<std::string>(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

template <class T>
std::vector<T> as_vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  std::vector<T> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as<T>(j[i], child(path, i)));
  return out;
}

template <class T, std::size_t N>
std::array<T, N> as_array(const Json& j, const std::string& path) {
  const auto v = as_vector<T>(j, path);
  if (v.size() != N) throw ConfigError(path, "expected an array of length " + std::to_string(N));
  std::array<T, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

/// Strict view of a JSON object: every key must be consumed before finish().
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
  [[nodiscard]] const std::string& path() const noexcept { return path_; }

  const Json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(child(path_, key), "required key is missing");
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T required(const std::string& key) {
    return as<T>(raw(key), child(path_, key));
  }

  template <class T>
  T optional(const std::string& key, T fallback) {
    return has(key) ? required<T>(key) : fallback;
  }

  template <class T>
  std::vector<T> vector(const std::string& key) {
    return as_vector<T>(raw(key), child(path_, key));
  }

  template <class T>
  void read(const std::string& key, T& target) {
    if (has(key)) target = required<T>(key);
  }

  template <class T>
  void read_vector(const std::string& key, std::vector<T>& target) {
    if (has(key)) target = vector<T>(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.contains(key)) throw ConfigError(child(path_, key), "unknown key");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

/// Runs `validate(spec)` and rethrows its message against `path`.
template <class Spec>
void validate_at(const Spec& spec, const std::string& path) {
  try {
    validate(spec);
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace config

// ---------------------------------------------------------------------------
// SourceSpec
// ---------------------------------------------------------------------------

[[nodiscard]] inline SourceSpec source_from_json(const Json& j, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  const auto variant = r.required<std::string>("variant");
  SourceSpec spec;
  if (variant == "Banana") {
    Banana b;
    if (r.has("cov_diag")) b.cov_diag = config::as_array<double, 2>(r.raw("cov_diag"), config::child(path, "cov_diag"));
    r.read("bend", b.bend);
    r.read("rot_deg", b.rot_deg);
    if (r.has("shift")) b.shift = config::as_array<double, 2>(r.raw("shift"), config::child(path, "shift"));
    spec = b;
  } else if (variant == "Categorical") {
    spec = Categorical{r.vector<double>("pmf")};
  } else if (variant == "IidSequence") {
    spec = IidSequence{r.vector<double>("base_pmf"), r.required<std::size_t>("length")};
  } else {
    throw ConfigError(config::child(path, "variant"), "unknown source variant '" + variant + "'");
  }
  r.finish();
  config::validate_at(spec, path);
  return spec;
}

[[nodiscard]] inline Json to_json(const SourceSpec& spec) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Banana>)
          return {{"variant", "Banana"}, {"cov_diag", s.cov_diag}, {"bend", s.bend}, {"rot_deg", s.rot_deg}, {"shift", s.shift}};
        else if constexpr (std::is_same_v<T, Categorical>)
          return {{"variant", "Categorical"}, {"pmf", s.pmf}};
        else
          return {{"variant", "IidSequence"}, {"base_pmf", s.base_pmf}, {"length", s.length}};
      },
      spec);
}

// ---------------------------------------------------------------------------
// AugmentationSpec
// ---------------------------------------------------------------------------

[[nodiscard]] inline AugmentationSpec augmentation_from_json(const Json& j, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  const auto variant = r.required<std::string>("variant");
  AugmentationSpec spec;
  if (variant == "Identity") {
    spec = Identity{};
  } else if (variant == "Rotation") {
    Rotation a;
    r.read("min_deg", a.min_deg);
    r.read("max_deg", a.max_deg);
    spec = a;
  } else if (variant == "TranslateX") {
    spec = TranslateX{r.required<double>("min"), r.required<double>("max")};
  } else if (variant == "TranslateY") {
    spec = TranslateY{r.required<double>("min"), r.required<double>("max")};
  } else if (variant == "Permutation") {
    spec = Permutation{};
  } else if (variant == "LabelResample") {
    LabelResample a;
    r.read_vector("labels", a.labels);
    spec = a;
  } else if (variant == "Compose") {
    const Json& list = r.raw("list");
    const auto lpath = config::child(path, "list");
    if (!list.is_array()) throw ConfigError(lpath, "expected an array");
    Compose c;
    for (std::size_t i = 0; i < list.size(); ++i) c.list.push_back(augmentation_from_json(list[i], config::child(lpath, i)));
    spec = c;
  } else {
    throw ConfigError(config::child(path, "variant"), "unknown augmentation variant '" + variant + "'");
  }
  r.finish();
  config::validate_at(spec, path);
  return spec;
}

[[nodiscard]] inline Json to_json(const AugmentationSpec& spec) {
  return std::visit(
      [](const auto& a) -> Json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Identity>)
          return {{"variant", "Identity"}};
        else if constexpr (std::is_same_v<T, Rotation>)
          return {{"variant", "Rotation"}, {"min_deg", a.min_deg}, {"max_deg", a.max_deg}};
        else if constexpr (std::is_same_v<T, TranslateX>)
          return {{"variant", "TranslateX"}, {"min", a.min}, {"max", a.max}};
        else if constexpr (std::is_same_v<T, TranslateY>)
          return {{"variant", "TranslateY"}, {"min", a.min}, {"max", a.max}};
        else if constexpr (std::is_same_v<T, Permutation>)
          return {{"variant", "Permutation"}};
        else if constexpr (std::is_same_v<T, LabelResample>)
          return {{"variant", "LabelResample"}, {"labels", a.labels}};
        else {
          Json list = Json::array();
          for (const auto& inner : a.list) list.push_back(to_json(inner));
          return {{"variant", "Compose"}, {"list", list}};
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// EquivalenceSpec
// ---------------------------------------------------------------------------

[[nodiscard]] inline EquivalenceSpec equivalence_from_json(const Json& j, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  const auto variant = r.required<std::string>("variant");
  EquivalenceSpec spec;
  if (variant == "Norm") {
    Norm e;
    if (r.has("quant_bins")) e.quant_bins = r.required<std::uint32_t>("quant_bins");
    if (r.has("range")) e.range = config::as_array<double, 2>(r.raw("range"), config::child(path, "range"));
    spec = e;
  } else if (variant == "UnitVector") {
    UnitVector e;
    if (r.has("quant_bins")) e.quant_bins = r.required<std::uint32_t>("quant_bins");
    spec = e;
  } else if (variant == "Counts") {
    spec = Counts{};
  } else if (variant == "GraphCanonical") {
    spec = GraphCanonical{r.required<std::uint32_t>("num_nodes")};
  } else if (variant == "Preimage") {
    spec = Preimage{r.vector<std::uint32_t>("class_of")};
  } else if (variant == "Equality") {
    spec = Equality{};
  } else {
    throw ConfigError(config::child(path, "variant"), "unknown equivalence variant '" + variant + "'");
  }
  r.finish();
  config::validate_at(spec, path);
  return spec;
}

[[nodiscard]] inline Json to_json(const EquivalenceSpec& spec) {
  return std::visit(
      [](const auto& e) -> Json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Norm>) {
          Json j{{"variant", "Norm"}};
          if (e.quant_bins) j["quant_bins"] = *e.quant_bins;
          if (e.range) j["range"] = *e.range;
          return j;
        } else if constexpr (std::is_same_v<T, UnitVector>) {
          Json j{{"variant", "UnitVector"}};
          if (e.quant_bins) j["quant_bins"] = *e.quant_bins;
          return j;
        } else if constexpr (std::is_same_v<T, Counts>) {
          return {{"variant", "Counts"}};
        } else if constexpr (std::is_same_v<T, GraphCanonical>) {
          return {{"variant", "GraphCanonical"}, {"num_nodes", e.num_nodes}};
        } else if constexpr (std::is_same_v<T, Preimage>) {
          return {{"variant", "Preimage"}, {"class_of", e.class_of}};
        } else {
          return {{"variant", "Equality"}};
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

[[nodiscard]] inline nn::Objective objective_from_string(const std::string& s, const std::string& path = "$") {
  if (s == "vc") return nn::Objective::VC;
  if (s == "vic") return nn::Objective::VIC;
  if (s == "bince") return nn::Objective::BINCE;
  throw ConfigError(path, "unknown objective '" + s + "' (expected vc, vic or bince)");
}

[[nodiscard]] inline nn::ReadoutOptions readout_from_json(const Json& j, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  nn::ReadoutOptions o;
  r.read_vector("hidden", o.hidden);
  r.read("steps", o.steps);
  r.read("batch", o.batch);
  r.read("lr_start", o.lr_start);
  r.read("lr_end", o.lr_end);
  r.read("train_fraction", o.train_fraction);
  r.finish();
  if (o.hidden.empty()) throw ConfigError(config::child(path, "hidden"), "at least one hidden layer is required");
  if (o.steps == 0 || o.batch == 0) throw ConfigError(path, "steps and batch must be positive");
  if (!(o.train_fraction > 0.0 && o.train_fraction < 1.0))
    throw ConfigError(config::child(path, "train_fraction"), "must lie strictly between 0 and 1");
  return o;
}

[[nodiscard]] inline Json to_json(const nn::ReadoutOptions& o) {
  return {{"hidden", o.hidden},       {"steps", o.steps},   {"batch", o.batch},
          {"lr_start", o.lr_start},   {"lr_end", o.lr_end}, {"train_fraction", o.train_fraction}};
}

/// Reads a TrainSpec; keys not present keep the defaults of `base`.
[[nodiscard]] inline nn::TrainSpec train_spec_from_json(const Json& j, const std::string& path = "$",
                                                        nn::TrainSpec base = {}) {
  config::ObjectReader r(j, path);
  nn::TrainSpec s = std::move(base);
  if (r.has("objective")) s.objective = objective_from_string(r.required<std::string>("objective"), config::child(path, "objective"));
  r.read("lambda", s.lambda);
  r.read("lr_start", s.lr_start);
  r.read("lr_end", s.lr_end);
  r.read("bottleneck_lr_scale", s.bottleneck_lr_scale);
  r.read("epochs", s.epochs);
  r.read("steps_per_epoch", s.steps_per_epoch);
  r.read("batch_size", s.batch_size);
  r.read("latent_dims", s.latent_dims);
  r.read_vector("hidden", s.hidden);
  if (r.has("activation")) {
    const auto a = r.required<std::string>("activation");
    if (a == "softplus") s.activation = nn::Activation::Softplus;
    else if (a == "relu") s.activation = nn::Activation::Relu;
    else throw ConfigError(config::child(path, "activation"), "expected softplus or relu");
  }
  r.read("half_width", s.half_width);
  r.read("tau", s.tau);
  r.read_vector("symbol_labels", s.symbol_labels);
  r.read("eval_samples", s.eval_samples);
  if (r.has("readout")) s.readout = readout_from_json(r.raw("readout"), config::child(path, "readout"));
  r.read("seed", s.seed);
  r.finish();
  config::validate_at(s, path);
  return s;
}

[[nodiscard]] inline Json to_json(const nn::TrainSpec& s) {
  return {{"objective", nn::to_string(s.objective)},
          {"lambda", s.lambda},
          {"lr_start", s.lr_start},
          {"lr_end", s.lr_end},
          {"bottleneck_lr_scale", s.bottleneck_lr_scale},
          {"epochs", s.epochs},
          {"steps_per_epoch", s.steps_per_epoch},
          {"batch_size", s.batch_size},
          {"latent_dims", s.latent_dims},
          {"hidden", s.hidden},
          {"activation", s.activation == nn::Activation::Relu ? "relu" : "softplus"},
          {"half_width", s.half_width},
          {"tau", s.tau},
          {"symbol_labels", s.symbol_labels},
          {"eval_samples", s.eval_samples},
          {"readout", to_json(s.readout)},
          {"seed", s.seed}};
}

// ---------------------------------------------------------------------------
// Experiment configs
// ---------------------------------------------------------------------------

/// Exact RI curve, erasure construction and channel oracle for a discrete source.
struct RiCurveConfig {
  SourceSpec source = Categorical{{1.0}};
  EquivalenceSpec equivalence = Equality{};
  std::size_t grid = 11;
  std::vector<double> betas{0.25, 0.5, 2.0, 4.0};
  std::optional<std::size_t> z_size;  ///< defaults to the number of classes
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
};

[[nodiscard]] inline RiCurveConfig ri_curve_config_from_json(const Json& j, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  RiCurveConfig c;
  c.source = source_from_json(r.raw("source"), config::child(path, "source"));
  c.equivalence = equivalence_from_json(r.raw("equivalence"), config::child(path, "equivalence"));
  r.read("grid", c.grid);
  r.read_vector("betas", c.betas);
  if (r.has("z_size")) c.z_size = r.required<std::size_t>("z_size");
  r.read("restarts", c.restarts);
  r.read("seed", c.seed);
  r.finish();
  if (!is_discrete(c.source)) throw ConfigError(config::child(path, "source"), "ri-curve needs a discrete source");
  if (c.grid < 2) throw ConfigError(config::child(path, "grid"), "grid needs at least two points");
  if (c.restarts == 0) throw ConfigError(config::child(path, "restarts"), "restarts must be positive");
  for (std::size_t i = 0; i < c.betas.size(); ++i)
    if (c.betas[i] < 0.0) throw ConfigError(config::child(config::child(path, "betas"), i), "beta must be non-negative");
  return c;
}

[[nodiscard]] inline Json to_json(const RiCurveConfig& c) {
  Json j{{"source", to_json(c.source)}, {"equivalence", to_json(c.equivalence)}, {"grid", c.grid},
         {"betas", c.betas},            {"restarts", c.restarts},                {"seed", c.seed}};
  if (c.z_size) j["z_size"] = *c.z_size;
  return j;
}

using nn::BananaConfig;

[[nodiscard]] inline BananaConfig banana_config_from_json(const Json& j, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  BananaConfig c;
  if (r.has("source")) c.source = source_from_json(r.raw("source"), config::child(path, "source"));
  if (r.has("objectives")) {
    const auto names = r.vector<std::string>("objectives");
    c.objectives.clear();
    for (std::size_t i = 0; i < names.size(); ++i)
      c.objectives.push_back(objective_from_string(names[i], config::child(config::child(path, "objectives"), i)));
  }
  if (r.has("augmentation")) c.augmentation = augmentation_from_json(r.raw("augmentation"), config::child(path, "augmentation"));
  if (r.has("equivalence")) c.equivalence = equivalence_from_json(r.raw("equivalence"), config::child(path, "equivalence"));
  r.read_vector("lambdas", c.lambdas);
  r.read_vector("seeds", c.seeds);
  if (r.has("train")) c.train = train_spec_from_json(r.raw("train"), config::child(path, "train"), c.train);
  if (r.has("partition_lambda")) {
    if (r.raw("partition_lambda").is_null()) c.partition_lambda.reset();
    else c.partition_lambda = r.required<double>("partition_lambda");
  }
  if (r.has("partition")) {
    const auto ppath = config::child(path, "partition");
    config::ObjectReader p(r.raw("partition"), ppath);
    p.read("lo", c.partition.lo);
    p.read("hi", c.partition.hi);
    p.read("resolution", c.partition.resolution);
    p.finish();
    if (!(c.partition.lo < c.partition.hi) || c.partition.resolution == 0)
      throw ConfigError(ppath, "needs lo < hi and a positive resolution");
  }
  r.finish();
  if (is_discrete(c.source)) throw ConfigError(config::child(path, "source"), "banana sweeps need a continuous source");
  if (c.objectives.empty()) throw ConfigError(config::child(path, "objectives"), "at least one objective is required");
  if (c.lambdas.empty()) throw ConfigError(config::child(path, "lambdas"), "at least one lambda is required");
  if (c.seeds.empty()) throw ConfigError(config::child(path, "seeds"), "at least one seed is required");
  for (std::size_t i = 0; i < c.lambdas.size(); ++i)
    if (!(c.lambdas[i] > 0.0)) throw ConfigError(config::child(config::child(path, "lambdas"), i), "lambda must be positive");
  for (auto o : c.objectives)
    if (o == nn::Objective::BINCE && c.train.batch_size < 2)
      throw ConfigError(config::child(path, "train"), "BINCE needs batch_size >= 2");
  return c;
}

[[nodiscard]] inline Json to_json(const BananaConfig& c) {
  Json objectives = Json::array();
  for (auto o : c.objectives) objectives.push_back(nn::to_string(o));
  Json j{{"source", to_json(c.source)},
         {"objectives", objectives},
         {"augmentation", to_json(c.augmentation)},
         {"equivalence", to_json(c.equivalence)},
         {"lambdas", c.lambdas},
         {"seeds", c.seeds},
         {"train", to_json(c.train)},
         {"partition", {{"lo", c.partition.lo}, {"hi", c.partition.hi}, {"resolution", c.partition.resolution}}}};
  j["partition_lambda"] = c.partition_lambda ? Json(*c.partition_lambda) : Json(nullptr);
  return j;
}

using nn::FeatureCompressConfig;

[[nodiscard]] inline FeatureCompressConfig feature_config_from_json(const Json& j, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  FeatureCompressConfig c;
  r.read("dims", c.dims);
  r.read("samples", c.samples);
  r.read_vector("lambdas", c.lambdas);
  r.read("steps", c.steps);
  r.read("precision_bits", c.precision_bits);
  r.read("seed", c.seed);
  r.finish();
  if (c.dims == 0 || c.dims > nn::kMaxFeatureDims) throw ConfigError(config::child(path, "dims"), "must be in [1, 4096]");
  if (c.samples < 1) throw ConfigError(config::child(path, "samples"), "must be positive");
  if (c.lambdas.empty()) throw ConfigError(config::child(path, "lambdas"), "at least one lambda is required");
  for (std::size_t i = 0; i < c.lambdas.size(); ++i)
    if (!(c.lambdas[i] > 0.0)) throw ConfigError(config::child(config::child(path, "lambdas"), i), "lambda must be positive");
  if (c.precision_bits < 8 || c.precision_bits > 16) throw ConfigError(config::child(path, "precision_bits"), "must be in [8, 16]");
  return c;
}

[[nodiscard]] inline Json to_json(const FeatureCompressConfig& c) {
  return {{"dims", c.dims},   {"samples", c.samples},  {"lambdas", c.lambdas},
          {"steps", c.steps}, {"precision_bits", c.precision_bits}, {"seed", c.seed}};
}

}  // namespace ivc
