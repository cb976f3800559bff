#pragma once

// The `ivc` command line: subcommand parsing, config loading, experiment
// orchestration and artifact output. run() never calls exit(); it returns
// 0 on success, 1 on runtime failure and 2 on bad flags or configs.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ivc/coding/invariant_codec.hpp"
#include "ivc/config.hpp"
#include "ivc/neural/feature_compressor.hpp"
#include "ivc/neural/gradient_suite.hpp"
#include "ivc/neural/sweep.hpp"
#include "ivc/report.hpp"
#include "ivc/ri_theory.hpp"

namespace ivc::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Usage or config problem (exit 2), as opposed to a runtime failure (exit 1).
class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

/// Output directory that refuses to replace existing files unless forced.
class OutputDir {
 public:
  OutputDir(fs::path dir, bool force) : dir_(std::move(dir)), force_(force) {}

  [[nodiscard]] const fs::path& path() const noexcept { return dir_; }

  /// Checks every name up front so a run never stops half-written.
  void claim(const std::vector<std::string>& names) const {
    for (const auto& n : names)
      if (fs::exists(dir_ / n) && !force_)
        throw Error((dir_ / n).string() + " exists; pass --force to overwrite");
  }

  fs::path write(const std::string& name, const std::string& content) const {
    const fs::path p = dir_ / name;
    if (fs::exists(p) && !force_) throw Error(p.string() + " exists; pass --force to overwrite");
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw Error("cannot write " + p.string());
    return p;
  }

  fs::path write_csv(const std::string& name, const report::CsvTable& t) const {
    std::ostringstream os;
    report::write_csv(os, t);
    return write(name, os.str());
  }

  fs::path write_json(const std::string& name, const Json& j) const { return write(name, j.dump(2) + "\n"); }

 private:
  fs::path dir_;
  bool force_;
};

/// Left-aligned text table for terminal summaries.
inline void print_table(std::ostream& os, const report::CsvTable& t) {
  std::vector<std::size_t> w(t.header.size());
  for (std::size_t c = 0; c < w.size(); ++c) {
    w[c] = t.header[c].size();
    for (const auto& r : t.rows) w[c] = std::max(w[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c)
      os << (c ? "  " : "") << std::left << std::setw(static_cast<int>(w[c])) << cells[c];
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

[[nodiscard]] inline Json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError("cannot open config " + p.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError(p.string() + ": invalid JSON: " + e.what());
  }
}

[[nodiscard]] inline std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[nodiscard]] inline std::string hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s += kDigits[b >> 4];
    s += kDigits[b & 15];
  }
  return s;
}

/// IVC_SEED, when set, overrides config and flag seeds.
[[nodiscard]] inline std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("IVC_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (errno != 0 || *end != '\0' || v[0] == '-') throw UsageError("IVC_SEED must be a non-negative integer");
  return s;
}

/// Alphabet used to enumerate a discrete source under an equivalence.
[[nodiscard]] inline std::optional<Alphabet> enumeration_alphabet(const SourceSpec& source, const EquivalenceSpec& equiv) {
  if (std::holds_alternative<GraphCanonical>(equiv)) return std::nullopt;
  return alphabet_of(source);
}

// ---------------------------------------------------------------------------
// ri-curve
// ---------------------------------------------------------------------------

/// Eight symbols in three classes with unequal masses.
[[nodiscard]] inline RiCurveConfig default_ri_curve_config() {
  RiCurveConfig c;
  c.source = Categorical{{0.25, 0.2, 0.15, 0.1, 0.1, 0.08, 0.07, 0.05}};
  c.equivalence = Preimage{{0, 0, 1, 1, 1, 2, 2, 2}};
  return c;
}

struct RiCurveReport {
  double H_M = 0.0;
  std::vector<RICurveRow> rows;
  std::vector<std::pair<double, OptimizedChannel>> oracle;  ///< (beta, result)
};

[[nodiscard]] inline RiCurveReport compute_ri_curve(const RiCurveConfig& c) {
  const auto pmf = source_pmf(c.source);
  const auto alpha = enumeration_alphabet(c.source, c.equivalence);
  const auto part = partition_alphabet(pmf, c.equivalence, alpha);
  RiCurveReport r;
  r.H_M = entropy_bits(part.probs);
  const std::size_t z = c.z_size.value_or(part.classes.size());
  std::vector<OptimizedChannel> found;
  for (std::size_t i = 0; i < c.betas.size(); ++i) {
    auto o = optimize_channel(pmf, c.equivalence, c.betas[i], z, c.restarts, mix64(c.seed + i), {}, alpha);
    found.push_back(o);
    r.oracle.emplace_back(c.betas[i], std::move(o));
  }
  r.rows = ri_curve_table(pmf, c.equivalence, found, c.grid, alpha);
  return r;
}

inline int cmd_ri_curve(const std::string& config_path, const OutputDir& out, std::ostream& os) {
  RiCurveConfig c = config_path.empty() ? default_ri_curve_config() : ri_curve_config_from_json(read_json_file(config_path));
  if (auto s = env_seed()) c.seed = *s;
  out.claim({"ri_curve.csv", "oracle.csv", "config.json"});
  const auto r = compute_ri_curve(c);
  report::CsvTable curve{{"delta_bits", "rate_theory", "rate_erasure", "rate_oracle", "distortion_oracle"}, {}};
  for (const auto& row : r.rows)
    curve.rows.push_back({report::num(row.delta_bits), report::num(row.rate_theory), report::num(row.rate_erasure),
                          report::num(row.rate_oracle), report::num(row.distortion_oracle)});
  report::CsvTable oracle{{"beta", "rate_bits", "distortion_bits", "objective"}, {}};
  for (const auto& [beta, o] : r.oracle)
    oracle.rows.push_back({report::num(beta), report::num(o.rate), report::num(o.distortion), report::num(o.objective)});
  out.write_csv("ri_curve.csv", curve);
  out.write_csv("oracle.csv", oracle);
  out.write_json("config.json", to_json(c));
  os << "H(M(X)) = " << report::num(r.H_M) << " bits\n";
  print_table(os, curve);
  os << '\n';
  print_table(os, oracle);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// coins / multiset / graphs
// ---------------------------------------------------------------------------

struct CodecSummary {
  double lossless_bits = 0.0;   ///< H(X) per example
  double entropy_bits = 0.0;    ///< H(M(X)) per example
  double model_bits = 0.0;      ///< ideal code length per example under the model
  double invariant_bits = 0.0;  ///< realized payload per example
  double stream_bits = 0.0;     ///< container incl. header, per example
  std::size_t escapes = 0;
  bool roundtrip = false;
  CodeStream stream;
};

/// Samples, codes M(x) with the model matched to the source and checks the
/// decoded invariants.
[[nodiscard]] inline CodecSummary code_invariants(const SourceSpec& source, const EquivalenceSpec& equiv,
                                                  std::size_t samples, std::uint64_t seed,
                                                  std::uint32_t precision = kDefaultPrecisionBits) {
  const auto ent = invariant_entropies(source, equiv);
  const auto model = build_model_from_pmf(source_invariant_pmf(source, equiv), precision);
  const SampleBatch batch = sample_source(source, samples, seed);
  const auto values = maximal_invariants(equiv, batch);
  auto coded = compress_invariant_values(values, model);
  const auto decoded = invariant_decompress(CodeStream::parse(coded.stream.serialize()), equiv, model, alphabet_of(source));
  CodecSummary s;
  const double n = double(samples);
  s.lossless_bits = ent.H_X;
  s.entropy_bits = ent.H_M;
  s.model_bits = coded.stats.model_bits / n;
  s.invariant_bits = coded.stats.payload_bits / n;
  s.stream_bits = coded.stats.stream_bits / n;
  s.escapes = coded.stats.escapes;
  s.roundtrip = decoded.values == values;
  s.stream = std::move(coded.stream);
  return s;
}

inline int cmd_coins(std::size_t n, std::size_t samples, double p, std::uint64_t seed, const OutputDir& out,
                     std::ostream& os) {
  if (n < 1 || samples < 1) throw UsageError("--n and --samples must be positive");
  if (!(p > 0.0 && p < 1.0)) throw UsageError("--p must lie in (0, 1)");
  if (auto s = env_seed()) seed = *s;
  out.claim({"coins.csv", "coins.ivcz"});
  const auto s = code_invariants(IidSequence{{1.0 - p, p}, n}, Counts{}, samples, seed);
  report::CsvTable t{{"n", "samples", "p_heads", "lossless_bits", "entropy_bits", "model_bits", "invariant_bits",
                      "stream_bits", "gain_factor", "roundtrip"},
                     {}};
  t.rows.push_back({std::to_string(n), std::to_string(samples), report::num(p), report::num(s.lossless_bits),
                    report::num(s.entropy_bits), report::num(s.model_bits), report::num(s.invariant_bits),
                    report::num(s.stream_bits), report::num(s.lossless_bits / s.invariant_bits),
                    s.roundtrip ? "1" : "0"});
  out.write_csv("coins.csv", t);
  const auto bytes = s.stream.serialize();
  out.write("coins.ivcz", std::string(bytes.begin(), bytes.end()));
  print_table(os, t);
  return s.roundtrip ? kExitOk : kExitRuntime;
}

inline int cmd_multiset(std::uint32_t alphabet, std::size_t length, std::size_t samples, std::vector<double> base,
                        std::uint64_t seed, const OutputDir& out, std::ostream& os) {
  if (base.empty()) base.assign(alphabet, 1.0 / double(alphabet));
  if (base.size() != alphabet) throw UsageError("--base-pmf must have --alphabet entries");
  validate_pmf(base, "--base-pmf");
  if (length < 1 || samples < 1) throw UsageError("--length and --samples must be positive");
  if (auto s = env_seed()) seed = *s;
  out.claim({"multiset.csv"});
  const SourceSpec source = IidSequence{base, length};
  const auto inv = code_invariants(source, Counts{}, samples, seed);
  // Lossless baseline: every position coded with the matched base model.
  std::map<InvariantValue, double> base_pmf;
  for (std::uint32_t a = 0; a < alphabet; ++a) {
    const std::uint32_t sym[] = {a};
    base_pmf.emplace(maximal_invariant(Equality{}, DiscreteExample{sym, alphabet}), base[a]);
  }
  const auto base_model = build_model_from_pmf(base_pmf, 16);
  const SampleBatch batch = sample_source(source, samples, seed);
  std::vector<InvariantValue> symbols;
  for (auto s : batch.symbols) {
    const std::uint32_t sym[] = {s};
    symbols.push_back(maximal_invariant(Equality{}, DiscreteExample{sym, alphabet}));
  }
  const auto lossless = compress_invariant_values(symbols, base_model);
  const double lossless_bits = lossless.stats.payload_bits / double(samples);
  const double h_cond = inv.lossless_bits - inv.entropy_bits;
  report::CsvTable t{{"alphabet", "length", "samples", "H_X", "H_M", "H_X_given_M", "lossless_bits", "invariant_bits",
                      "gain_bits", "roundtrip"},
                     {}};
  t.rows.push_back({std::to_string(alphabet), std::to_string(length), std::to_string(samples),
                    report::num(inv.lossless_bits), report::num(inv.entropy_bits), report::num(h_cond),
                    report::num(lossless_bits), report::num(inv.invariant_bits),
                    report::num(lossless_bits - inv.invariant_bits), inv.roundtrip ? "1" : "0"});
  out.write_csv("multiset.csv", t);
  print_table(os, t);
  return inv.roundtrip ? kExitOk : kExitRuntime;
}

struct GraphClassRow {
  std::uint32_t canonical_code = 0;
  std::size_t edges = 0;
  std::size_t class_size = 0;
  double probability = 0.0;
};

struct GraphCensus {
  std::size_t labeled_graphs = 0;
  std::vector<GraphClassRow> classes;  ///< ordered by canonical code
  double H_X = 0.0;
  double H_M = 0.0;  ///< structural entropy
};

/// Enumerates every labeled graph on `nodes` vertices with i.i.d. edges.
[[nodiscard]] inline GraphCensus graph_census(std::uint32_t nodes, double edge_prob) {
  if (nodes < 1 || nodes > 5) throw UsageError("--nodes must be in [1, 5]");
  const std::size_t m = std::size_t{nodes} * (nodes - 1) / 2;
  const SourceSpec source = IidSequence{{1.0 - edge_prob, edge_prob}, m};
  const auto pmf = source_pmf(source);
  std::map<std::uint32_t, GraphClassRow> rows;
  std::vector<std::uint32_t> edges(m);
  const Alphabet alpha{2, m};
  for (std::size_t x = 0; x < pmf.size(); ++x) {
    alpha.decode(x, edges);
    const auto code = canonical_graph_code(edges, nodes);
    auto& row = rows[code];
    row.canonical_code = code;
    row.edges = static_cast<std::size_t>(std::count(edges.begin(), edges.end(), 1u));
    ++row.class_size;
    row.probability += pmf[x];
  }
  GraphCensus c;
  c.labeled_graphs = pmf.size();
  std::vector<double> probs;
  for (auto& [code, row] : rows) {
    c.classes.push_back(row);
    probs.push_back(row.probability);
  }
  c.H_X = entropy_bits(pmf);
  c.H_M = entropy_bits(probs);
  return c;
}

inline int cmd_graphs(std::uint32_t nodes, double edge_prob, std::size_t samples, std::uint64_t seed,
                      const OutputDir& out, std::ostream& os) {
  if (!(edge_prob > 0.0 && edge_prob < 1.0)) throw UsageError("--edge-prob must lie in (0, 1)");
  if (auto s = env_seed()) seed = *s;
  out.claim({"graphs.csv", "graph_classes.csv"});
  const auto census = graph_census(nodes, edge_prob);
  const std::size_t m = std::size_t{nodes} * (nodes - 1) / 2;
  double invariant_bits = 0.0;
  bool roundtrip = true;
  if (m > 0) {
    const auto coded = code_invariants(IidSequence{{1.0 - edge_prob, edge_prob}, m}, GraphCanonical{nodes}, samples, seed);
    invariant_bits = coded.invariant_bits;
    roundtrip = coded.roundtrip;
  }
  report::CsvTable summary{{"nodes", "labeled_graphs", "classes", "H_X", "H_M", "H_X_given_M", "invariant_bits", "roundtrip"}, {}};
  summary.rows.push_back({std::to_string(nodes), std::to_string(census.labeled_graphs), std::to_string(census.classes.size()),
                          report::num(census.H_X), report::num(census.H_M), report::num(census.H_X - census.H_M),
                          report::num(invariant_bits), roundtrip ? "1" : "0"});
  report::CsvTable classes{{"canonical_code", "edges", "class_size", "probability"}, {}};
  for (const auto& r : census.classes)
    classes.rows.push_back({std::to_string(r.canonical_code), std::to_string(r.edges), std::to_string(r.class_size),
                            report::num(r.probability)});
  out.write_csv("graphs.csv", summary);
  out.write_csv("graph_classes.csv", classes);
  print_table(os, summary);
  return roundtrip ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------
// codec
// ---------------------------------------------------------------------------

/// Model file: {"source": SourceSpec, "precision_bits": 8..16}. The coding
/// model is the exact distribution of M(X) under that source.
struct CodecModel {
  SourceSpec source;
  std::uint32_t precision_bits = kDefaultPrecisionBits;
};

[[nodiscard]] inline CodecModel codec_model_from_json(const Json& j, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  CodecModel m;
  m.source = source_from_json(r.raw("source"), config::child(path, "source"));
  r.read("precision_bits", m.precision_bits);
  r.finish();
  if (!is_discrete(m.source)) throw ConfigError(config::child(path, "source"), "codec needs a discrete source");
  if (m.precision_bits < 8 || m.precision_bits > 16) throw ConfigError(config::child(path, "precision_bits"), "must be in [8, 16]");
  return m;
}

/// Examples file: {"examples": [[s, s, ...], ...]} (one symbol sequence per
/// example; for a categorical source, bare symbols are accepted too).
[[nodiscard]] inline SampleBatch examples_from_json(const Json& j, const SourceSpec& source, const std::string& path = "$") {
  config::ObjectReader r(j, path);
  const Json& ex = r.raw("examples");
  r.finish();
  const auto epath = config::child(path, "examples");
  if (!ex.is_array()) throw ConfigError(epath, "expected an array");
  const Alphabet alpha = alphabet_of(source);
  SampleBatch b = SampleBatch::discrete(ex.size(), alpha.length, alpha.base);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const auto ipath = config::child(epath, i);
    std::vector<std::uint32_t> seq;
    if (ex[i].is_array()) seq = config::as_vector<std::uint32_t>(ex[i], ipath);
    else seq = {config::as<std::uint32_t>(ex[i], ipath)};
    if (seq.size() != alpha.length) throw ConfigError(ipath, "expected " + std::to_string(alpha.length) + " symbols");
    for (std::size_t k = 0; k < seq.size(); ++k) {
      if (seq[k] >= alpha.base) throw ConfigError(config::child(ipath, k), "symbol outside the alphabet");
      b.symbol_row(i)[k] = seq[k];
    }
  }
  return b;
}

inline int cmd_codec_encode(const fs::path& equiv_path, const fs::path& model_path, const fs::path& input,
                            const fs::path& output, bool force, std::ostream& os) {
  const auto equiv = equivalence_from_json(read_json_file(equiv_path));
  const auto cm = codec_model_from_json(read_json_file(model_path));
  const auto batch = examples_from_json(read_json_file(input), cm.source);
  if (fs::exists(output) && !force) throw Error(output.string() + " exists; pass --force to overwrite");
  const auto model = build_model_from_pmf(source_invariant_pmf(cm.source, equiv), cm.precision_bits);
  const auto coded = invariant_compress(batch, equiv, model);
  const auto bytes = coded.stream.serialize();
  OutputDir(output.parent_path().empty() ? fs::path(".") : output.parent_path(), true)
      .write(output.filename().string(), std::string(bytes.begin(), bytes.end()));
  report::CsvTable t{{"examples", "escapes", "model_bits", "payload_bits", "stream_bits"}, {}};
  t.rows.push_back({std::to_string(batch.rows), std::to_string(coded.stats.escapes), report::num(coded.stats.model_bits),
                    report::num(coded.stats.payload_bits), report::num(coded.stats.stream_bits)});
  print_table(os, t);
  return kExitOk;
}

inline int cmd_codec_decode(const fs::path& equiv_path, const fs::path& model_path, const fs::path& input,
                            const fs::path& output, bool force, std::ostream& os) {
  const auto equiv = equivalence_from_json(read_json_file(equiv_path));
  const auto cm = codec_model_from_json(read_json_file(model_path));
  if (fs::exists(output) && !force) throw Error(output.string() + " exists; pass --force to overwrite");
  const auto model = build_model_from_pmf(source_invariant_pmf(cm.source, equiv), cm.precision_bits);
  const auto bytes = read_bytes(input);
  const auto decoded = invariant_decompress(CodeStream::parse(bytes), equiv, model, alphabet_of(cm.source));
  Json values = Json::array();
  for (const auto& v : decoded.values) values.push_back(hex(v.bytes));
  Json reps = Json::object();
  for (const auto& [v, rep] : decoded.representatives) {
    if (!rep.symbols.empty()) reps[hex(v.bytes)] = rep.symbols;
    else reps[hex(v.bytes)] = rep.real;
  }
  const Json doc{{"invariants", values}, {"representatives", reps}};
  OutputDir(output.parent_path().empty() ? fs::path(".") : output.parent_path(), true)
      .write(output.filename().string(), doc.dump(2) + "\n");
  os << "decoded " << decoded.values.size() << " invariants, " << decoded.representatives.size() << " classes\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// banana
// ---------------------------------------------------------------------------

/// Rotations are the symmetry of interest; identity gives the plain compressor.
[[nodiscard]] inline AugmentationSpec augmentation_from_flag(const std::string& name) {
  if (name == "identity") return Identity{};
  if (name == "rotation") return Rotation{};
  throw UsageError("--aug must be identity or rotation (other augmentations via --config)");
}

[[nodiscard]] inline std::string run_name(nn::Objective o, double lambda, std::uint64_t seed) {
  return std::string(nn::to_string(o)) + "_lam" + report::num(lambda) + "_seed" + std::to_string(seed);
}

[[nodiscard]] inline Json metrics_json(const nn::RunMetrics& m) {
  Json epochs = Json::array();
  for (const auto& e : m.epochs)
    epochs.push_back({{"rate_bits", e.rate_bits}, {"distortion", e.distortion}, {"loss", e.loss}, {"lr", e.lr}});
  return {{"epochs", epochs},
          {"eval", {{"rate_bits", m.eval_rate_bits}, {"distortion", m.eval_distortion},
                    {"distortion_kind", m.eval_log_loss ? "log_loss_bits" : "mse"}}}};
}

struct BananaFlags {
  std::string config;
  std::vector<std::string> objectives;
  std::string aug;
  std::vector<double> lambdas;
  std::vector<std::uint64_t> seeds;
  std::size_t epochs = 0;
  std::size_t steps = 0;
  std::size_t batch = 0;
  bool no_partition = false;
};

[[nodiscard]] inline nn::BananaConfig resolve_banana_config(const BananaFlags& f) {
  nn::BananaConfig c = f.config.empty() ? nn::BananaConfig{} : banana_config_from_json(read_json_file(f.config));
  if (!f.objectives.empty()) {
    c.objectives.clear();
    for (const auto& o : f.objectives) c.objectives.push_back(objective_from_string(o, "--objective"));
  }
  if (!f.aug.empty()) c.augmentation = augmentation_from_flag(f.aug);
  if (!f.lambdas.empty()) c.lambdas = f.lambdas;
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (f.epochs) c.train.epochs = f.epochs;
  if (f.steps) c.train.steps_per_epoch = f.steps;
  if (f.batch) c.train.batch_size = f.batch;
  if (f.no_partition) c.partition_lambda.reset();
  if (auto s = env_seed()) c.seeds = {*s};
  for (double l : c.lambdas)
    if (!(l > 0.0)) throw UsageError("lambdas must be positive");
  if (c.seeds.empty() || c.lambdas.empty() || c.objectives.empty()) throw UsageError("empty sweep");
  try {
    nn::validate(c.train);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  return c;
}

inline int cmd_banana(const BananaFlags& flags, std::size_t jobs, const OutputDir& out, std::ostream& os) {
  const auto cfg = resolve_banana_config(flags);
  std::vector<std::string> files{"config.json", "sweep.csv", "aurd.csv", "ri_curves.svg"};
  for (auto o : cfg.objectives)
    for (double l : cfg.lambdas)
      for (auto s : cfg.seeds) files.push_back("runs/" + run_name(o, l, s) + "/metrics.json");
  if (cfg.partition_lambda) {
    files.push_back("partition.csv");
    files.push_back("partition.svg");
    files.push_back("partition_metrics.json");
  }
  out.claim(files);
  out.write_json("config.json", to_json(cfg));

  std::mutex io;
  const auto result = nn::run_sweep(cfg, std::max<std::size_t>(1, jobs), [&](const nn::SweepRun& r) {
    std::lock_guard lock(io);
    os << "  " << nn::to_string(r.objective) << " lambda=" << report::num(r.lambda) << " seed=" << r.seed
       << "  rate=" << report::num(r.metrics.eval_rate_bits) << " distortion=" << report::num(r.metrics.eval_distortion)
       << std::endl;
  });

  report::CsvTable sweep{{"objective", "lambda", "seed", "rate_bits", "distortion", "train_rate_bits", "train_distortion"}, {}};
  for (const auto& r : result.runs) {
    const auto& last = r.metrics.epochs.back();
    sweep.rows.push_back({nn::to_string(r.objective), report::num(r.lambda), std::to_string(r.seed),
                          report::num(r.metrics.eval_rate_bits), report::num(r.metrics.eval_distortion),
                          report::num(last.rate_bits), report::num(last.distortion)});
    Json j = metrics_json(r.metrics);
    j["objective"] = nn::to_string(r.objective);
    j["lambda"] = r.lambda;
    j["seed"] = r.seed;
    out.write_json("runs/" + run_name(r.objective, r.lambda, r.seed) + "/metrics.json", j);
  }
  out.write_csv("sweep.csv", sweep);

  report::CsvTable aurd{{"objective", "seed", "aurd"}, {}};
  report::CsvTable summary{{"objective", "aurd_mean", "aurd_se"}, {}};
  for (auto o : cfg.objectives) {
    const auto& areas = result.aurd.at(o);
    for (std::size_t i = 0; i < areas.size(); ++i)
      aurd.rows.push_back({nn::to_string(o), std::to_string(cfg.seeds[i]), report::num(areas[i])});
    const auto ms = result.aurd_summary(o);
    summary.rows.push_back({nn::to_string(o), report::num(ms.mean), report::num(ms.se)});
  }
  out.write_csv("aurd.csv", aurd);
  out.write("ri_curves.svg", report::ri_curve_svg(report::series_from_sweep(sweep)));
  if (result.partition) {
    const auto& p = *result.partition;
    out.write_csv("partition.csv", report::partition_table(p.map));
    out.write("partition.svg", report::partition_svg(p.map));
    Json pm{{"lambda", p.lambda},
            {"seed", p.seed},
            {"classes", p.map.num_classes()},
            {"regions", p.regions},
            {"radial_consistency", p.radial_consistency},
            {"grid", {{"lo", p.map.grid.lo}, {"hi", p.map.grid.hi}, {"resolution", p.map.grid.resolution}}},
            {"metrics", metrics_json(p.metrics)}};
    out.write_json("partition_metrics.json", pm);
    os << "partition (VIC, lambda=" << report::num(p.lambda) << "): " << p.map.num_classes() << " codes, " << p.regions
       << " regions, radial consistency " << report::num(p.radial_consistency) << '\n';
  }
  print_table(os, summary);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck / feature-compress / report
// ---------------------------------------------------------------------------

inline constexpr double kGradTolerance = 1e-5;

inline int cmd_gradcheck(std::uint64_t seed, const std::optional<OutputDir>& out, std::ostream& os) {
  if (auto s = env_seed()) seed = *s;
  if (out) out->claim({"gradcheck.csv"});
  const auto cases = nn::gradient_suite(seed);
  report::CsvTable t{{"case", "max_rel_error", "max_abs_error", "entries", "pass"}, {}};
  bool ok = true;
  for (const auto& c : cases) {
    const bool pass = c.result.max_rel_error < kGradTolerance;
    ok = ok && pass;
    t.rows.push_back({c.name, report::num(c.result.max_rel_error), report::num(c.result.max_abs_error),
                      std::to_string(c.result.entries), pass ? "1" : "0"});
  }
  if (out) out->write_csv("gradcheck.csv", t);
  print_table(os, t);
  return ok ? kExitOk : kExitRuntime;
}

inline int cmd_feature_compress(const std::string& config_path, const std::optional<std::size_t>& dims,
                                const std::optional<std::size_t>& samples, const std::vector<double>& lambdas,
                                const std::optional<std::size_t>& steps, const OutputDir& out, std::ostream& os) {
  FeatureCompressConfig c = config_path.empty() ? FeatureCompressConfig{} : feature_config_from_json(read_json_file(config_path));
  if (dims) c.dims = *dims;
  if (samples) c.samples = *samples;
  if (!lambdas.empty()) c.lambdas = lambdas;
  if (steps) c.steps = *steps;
  if (auto s = env_seed()) c.seed = *s;
  try {
    (void)feature_config_from_json(to_json(c));
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  out.claim({"feature_sweep.csv", "config.json"});
  const auto rows = nn::run_feature_sweep(c);
  report::CsvTable t{{"lambda", "theoretical_bits", "realized_bits", "stream_bits", "mse_per_dim", "clamped", "roundtrip"}, {}};
  bool ok = true;
  for (const auto& r : rows) {
    ok = ok && r.roundtrip;
    t.rows.push_back({report::num(r.lambda), report::num(r.theoretical_bits), report::num(r.realized_bits),
                      report::num(r.stream_bits), report::num(r.mse_per_dim), std::to_string(r.clamped),
                      r.roundtrip ? "1" : "0"});
  }
  out.write_csv("feature_sweep.csv", t);
  out.write_json("config.json", to_json(c));
  print_table(os, t);
  return ok ? kExitOk : kExitRuntime;
}

inline int cmd_report(const fs::path& dir, std::ostream& os) {
  const auto written = report::render_report(dir);
  for (const auto& p : written) os << "wrote " << p.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline void print_error(std::ostream& err, const char* kind, const std::string& message, const std::string& path = {}) {
  Json j{{"error", kind}, {"message", message}};
  if (!path.empty()) j["path"] = path;
  err << j.dump() << '\n';
}

/// Parses argv and runs one subcommand.
inline int run(int argc, const char* const* argv, std::ostream& os = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Invariant compression: rate-invariance theory, entropy coding and neural invariant compressors", "ivc"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string out_dir;
  bool force = false;
  std::uint64_t seed = 0;
  std::string config;
  auto add_out = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("--out", out_dir, "Output directory");
    if (required) o->required();
    sub->add_flag("--force", force, "Overwrite existing outputs");
  };

  auto* ri = app.add_subcommand("ri-curve", "Exact RI curve, erasure construction and channel oracle");
  ri->add_option("--config", config, "JSON config (source, equivalence, grid, betas, restarts, seed)")->check(CLI::ExistingFile);
  add_out(ri, true);

  std::size_t coins_n = 100, samples = 10000;
  double p_heads = 0.5;
  auto* coins = app.add_subcommand("coins", "Code the number of heads of coin-flip sequences");
  coins->add_option("--n", coins_n, "Flips per sequence");
  coins->add_option("--samples", samples, "Number of sequences");
  coins->add_option("--p", p_heads, "Probability of heads");
  coins->add_option("--seed", seed, "Sampling seed");
  add_out(coins, true);

  std::uint32_t alphabet = 4;
  std::size_t length = 8;
  std::vector<double> base_pmf;
  auto* multiset = app.add_subcommand("multiset", "Code multisets (symbol counts) of i.i.d. sequences");
  multiset->add_option("--alphabet", alphabet, "Alphabet size");
  multiset->add_option("--length", length, "Sequence length");
  multiset->add_option("--samples", samples, "Number of sequences");
  multiset->add_option("--base-pmf", base_pmf, "Per-symbol probabilities (default uniform)")->delimiter(',');
  multiset->add_option("--seed", seed, "Sampling seed");
  add_out(multiset, true);

  std::uint32_t nodes = 4;
  double edge_prob = 0.5;
  auto* graphs = app.add_subcommand("graphs", "Isomorphism classes and structural entropy of small graphs");
  graphs->add_option("--nodes", nodes, "Number of vertices (1-5)");
  graphs->add_option("--edge-prob", edge_prob, "Independent edge probability");
  graphs->add_option("--samples", samples, "Graphs to code");
  graphs->add_option("--seed", seed, "Sampling seed");
  add_out(graphs, true);

  std::string equiv_file, model_file, input_file, output_file;
  auto* codec = app.add_subcommand("codec", "Invariant codestream encode/decode");
  codec->require_subcommand(1);
  auto add_codec = [&](CLI::App* sub) {
    sub->add_option("--equiv", equiv_file, "Equivalence JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--model", model_file, "Model JSON {source, precision_bits}")->required()->check(CLI::ExistingFile);
    sub->add_option("--input", input_file, "Input file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", output_file, "Output file")->required();
    sub->add_flag("--force", force, "Overwrite the output file");
  };
  auto* encode = codec->add_subcommand("encode", "Examples JSON -> codestream");
  auto* decode = codec->add_subcommand("decode", "Codestream -> invariants JSON");
  add_codec(encode);
  add_codec(decode);

  BananaFlags bf;
  std::size_t jobs = 1;
  auto* banana = app.add_subcommand("banana", "Lambda sweep of VC / VIC / BINCE on the Banana source");
  banana->add_option("--config", bf.config, "JSON config")->check(CLI::ExistingFile);
  banana->add_option("--objective", bf.objectives, "Objectives (vc, vic, bince)")->delimiter(',');
  banana->add_option("--aug", bf.aug, "Augmentation (identity, rotation)");
  banana->add_option("--lambda-sweep", bf.lambdas, "Comma-separated lambdas")->delimiter(',');
  banana->add_option("--seeds", bf.seeds, "Comma-separated seeds")->delimiter(',');
  banana->add_option("--epochs", bf.epochs, "Epochs per run");
  banana->add_option("--steps", bf.steps, "Steps per epoch");
  banana->add_option("--batch", bf.batch, "Batch size");
  banana->add_flag("--no-partition", bf.no_partition, "Skip the partition export");
  banana->add_option("--jobs", jobs, "Runs trained in parallel")->check(CLI::PositiveNumber);
  add_out(banana, true);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference checks of every op and loss");
  grad->add_option("--seed", seed, "Instance seed");
  add_out(grad, false);

  std::optional<std::size_t> f_dims, f_samples, f_steps;
  std::vector<double> f_lambdas;
  auto* feat = app.add_subcommand("feature-compress", "Array compressor lambda sweep on Gaussian features");
  feat->add_option("--config", config, "JSON config")->check(CLI::ExistingFile);
  feat->add_option("--dims", f_dims, "Feature dimensions");
  feat->add_option("--samples", f_samples, "Rows");
  feat->add_option("--lambdas", f_lambdas, "Comma-separated lambdas")->delimiter(',');
  feat->add_option("--steps", f_steps, "Training steps");
  add_out(feat, true);

  std::string run_dir;
  auto* rep = app.add_subcommand("report", "Render SVGs from a run directory's CSVs");
  rep->add_option("--run", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, os, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, os, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitConfig;
  }

  try {
    const OutputDir out(out_dir, force);
    if (*ri) return cmd_ri_curve(config, out, os);
    if (*coins) return cmd_coins(coins_n, samples, p_heads, seed, out, os);
    if (*multiset) return cmd_multiset(alphabet, length, samples, base_pmf, seed, out, os);
    if (*graphs) return cmd_graphs(nodes, edge_prob, samples, seed, out, os);
    if (*encode) return cmd_codec_encode(equiv_file, model_file, input_file, output_file, force, os);
    if (*decode) return cmd_codec_decode(equiv_file, model_file, input_file, output_file, force, os);
    if (*banana) return cmd_banana(bf, jobs, out, os);
    if (*grad) return cmd_gradcheck(seed, out_dir.empty() ? std::nullopt : std::optional<OutputDir>(out), os);
    if (*feat) return cmd_feature_compress(config, f_dims, f_samples, f_lambdas, f_steps, out, os);
    if (*rep) return cmd_report(run_dir, os);
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what(), e.path());
    return kExitConfig;
  } catch (const UsageError& e) {
    print_error(err, "usage", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    print_error(err, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace ivc::cli
