#pragma once

// Equivalence relations expressed through maximal invariants, and exact
// entropies of their pushforward distributions.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstring>
#include <map>
#include <numeric>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ivc/error.hpp"
#include "ivc/sources.hpp"

namespace ivc {

// ---------------------------------------------------------------------------
// Specs and values
// ---------------------------------------------------------------------------

/// Euclidean norm. With quant_bins the norm is binned uniformly on `range`.
struct Norm {
  std::optional<std::uint32_t> quant_bins;
  std::optional<std::array<double, 2>> range;
};

/// Direction x / |x|. With quant_bins (2-D only) the angle is binned on [-pi, pi).
struct UnitVector {
  std::optional<std::uint32_t> quant_bins;
};

/// Symbol-count vector (the empirical measure, or type, of a sequence).
struct Counts {};

/// Isomorphism class of a simple undirected graph given as its upper-triangle
/// edge indicator string (edges ordered (0,1), (0,2), ..., (n-2,n-1)).
struct GraphCanonical {
  std::uint32_t num_nodes = 3;
};

/// Arbitrary partition given by a class id for every (flat) alphabet index.
struct Preimage {
  std::vector<std::uint32_t> class_of;
};

/// Identity relation: every example is its own class.
struct Equality {};

using EquivalenceSpec = std::variant<Norm, UnitVector, Counts, GraphCanonical, Preimage, Equality>;

/// Canonical byte encoding of M(x). Equal encodings iff same class; ordered
/// lexicographically.
struct InvariantValue {
  std::vector<std::uint8_t> bytes;

  auto operator<=>(const InvariantValue&) const = default;
  bool operator==(const InvariantValue&) const = default;

  [[nodiscard]] std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
      s.push_back(kDigits[b >> 4]);
      s.push_back(kDigits[b & 15]);
    }
    return s;
  }

  static InvariantValue from_hex(std::string_view s) {
    if (s.size() % 2 != 0) throw ValidationError("odd-length hex invariant");
    auto nibble = [](char c) -> std::uint8_t {
      if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
      if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
      if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
      throw ValidationError("invalid hex digit in invariant");
    };
    InvariantValue v;
    for (std::size_t i = 0; i < s.size(); i += 2)
      v.bytes.push_back(static_cast<std::uint8_t>((nibble(s[i]) << 4) | nibble(s[i + 1])));
    return v;
  }
};

namespace detail {

inline void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32_be(std::span<const std::uint8_t> in, std::size_t pos) {
  if (pos + 4 > in.size()) throw DecodeError("truncated invariant encoding");
  return (std::uint32_t{in[pos]} << 24) | (std::uint32_t{in[pos + 1]} << 16) |
         (std::uint32_t{in[pos + 2]} << 8) | std::uint32_t{in[pos + 3]};
}

/// Order-preserving big-endian encoding of a double.
inline void put_f64_ordered(std::vector<std::uint8_t>& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v);
  bits = (bits >> 63) ? ~bits : (bits | (std::uint64_t{1} << 63));
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(bits >> shift));
}

inline double get_f64_ordered(std::span<const std::uint8_t> in, std::size_t pos) {
  if (pos + 8 > in.size()) throw DecodeError("truncated invariant encoding");
  std::uint64_t bits = 0;
  for (std::size_t k = 0; k < 8; ++k) bits = (bits << 8) | in[pos + k];
  bits = (bits >> 63) ? (bits & ~(std::uint64_t{1} << 63)) : ~bits;
  return std::bit_cast<double>(bits);
}

inline std::uint32_t quantize(double v, double lo, double hi, std::uint32_t bins) {
  if (!(hi > lo)) return 0;
  const double t = (v - lo) / (hi - lo) * bins;
  if (!(t > 0.0)) return 0;
  return static_cast<std::uint32_t>(std::min<double>(std::floor(t), bins - 1));
}

inline double bin_center(std::uint32_t bin, double lo, double hi, std::uint32_t bins) {
  return lo + (hi - lo) * (bin + 0.5) / bins;
}

inline std::size_t num_edges(std::uint32_t nodes) { return std::size_t{nodes} * (nodes - 1) / 2; }

}  // namespace detail

inline void validate(const EquivalenceSpec& equiv) {
  if (const auto* g = std::get_if<GraphCanonical>(&equiv)) {
    if (g->num_nodes < 1 || g->num_nodes > 8) throw ValidationError("GraphCanonical num_nodes must be in [1,8]");
  } else if (const auto* n = std::get_if<Norm>(&equiv)) {
    if (n->quant_bins && *n->quant_bins == 0) throw ValidationError("quant_bins must be positive");
    if (n->range && !((*n->range)[1] > (*n->range)[0])) throw ValidationError("Norm range must be increasing");
  } else if (const auto* u = std::get_if<UnitVector>(&equiv)) {
    if (u->quant_bins && *u->quant_bins == 0) throw ValidationError("quant_bins must be positive");
  }
}

[[nodiscard]] inline bool is_continuous_invariant(const EquivalenceSpec& equiv) noexcept {
  return std::holds_alternative<Norm>(equiv) || std::holds_alternative<UnitVector>(equiv);
}

/// A discrete example: a symbol sequence over an alphabet of `alphabet` letters.
struct DiscreteExample {
  std::span<const std::uint32_t> symbols;
  std::uint32_t alphabet = 0;
};

// ---------------------------------------------------------------------------
// Graph canonization
// ---------------------------------------------------------------------------

/// Lexicographically smallest edge-indicator string over all n! relabelings,
/// packed MSB-first into an integer (first edge = most significant bit).
[[nodiscard]] inline std::uint32_t canonical_graph_code(std::span<const std::uint32_t> edges,
                                                        std::uint32_t nodes) {
  const std::size_t m = detail::num_edges(nodes);
  if (edges.size() != m) throw TypeError("graph edge string has wrong length for num_nodes");
  std::array<std::array<bool, 8>, 8> adj{};
  std::size_t e = 0;
  for (std::uint32_t i = 0; i < nodes; ++i)
    for (std::uint32_t j = i + 1; j < nodes; ++j, ++e) {
      if (edges[e] > 1) throw TypeError("graph edge indicators must be 0 or 1");
      adj[i][j] = adj[j][i] = edges[e] != 0;
    }
  std::array<std::uint32_t, 8> perm{};
  std::iota(perm.begin(), perm.begin() + nodes, 0u);
  std::uint32_t best = ~0u;
  do {
    std::uint32_t code = 0;
    for (std::uint32_t i = 0; i < nodes; ++i)
      for (std::uint32_t j = i + 1; j < nodes; ++j) code = (code << 1) | (adj[perm[i]][perm[j]] ? 1u : 0u);
    best = std::min(best, code);
  } while (std::next_permutation(perm.begin(), perm.begin() + nodes));
  return best;
}

// ---------------------------------------------------------------------------
// Maximal invariants
// ---------------------------------------------------------------------------

/// Real-valued invariant features of a continuous example (before any
/// quantization): {|x|} for Norm, x/|x| for UnitVector, x itself for Equality.
[[nodiscard]] inline std::vector<double> invariant_features(const EquivalenceSpec& equiv,
                                                            std::span<const double> x) {
  // Squares summed in sorted order: permuting or negating coordinates
  // gives the same bits even when the compiler fuses multiply-adds.
  std::vector<double> sq(x.size());
  std::transform(x.begin(), x.end(), sq.begin(), [](double v) { return v * v; });
  std::sort(sq.begin(), sq.end());
  double norm = 0.0;
  for (double v : sq) norm += v;
  norm = std::sqrt(norm);
  if (std::holds_alternative<Norm>(equiv)) return {norm};
  if (std::holds_alternative<UnitVector>(equiv)) {
    std::vector<double> u(x.begin(), x.end());
    if (norm > 0.0)
      for (double& v : u) v /= norm;
    return u;
  }
  if (std::holds_alternative<Equality>(equiv)) return {x.begin(), x.end()};
  throw TypeError("equivalence not applicable to continuous examples");
}

[[nodiscard]] inline InvariantValue maximal_invariant(const EquivalenceSpec& equiv, std::span<const double> x) {
  validate(equiv);
  InvariantValue v;
  if (const auto* n = std::get_if<Norm>(&equiv)) {
    const double r = invariant_features(equiv, x)[0];
    if (n->quant_bins) {
      if (!n->range) throw ValidationError("quantized Norm requires a range (see fit_quantization)");
      detail::put_u32_be(v.bytes, detail::quantize(r, (*n->range)[0], (*n->range)[1], *n->quant_bins));
    } else {
      detail::put_f64_ordered(v.bytes, r);
    }
    return v;
  }
  if (const auto* u = std::get_if<UnitVector>(&equiv)) {
    if (u->quant_bins) {
      if (x.size() != 2) throw TypeError("quantized UnitVector requires 2-D examples");
      const double angle = std::atan2(x[1], x[0]);
      detail::put_u32_be(v.bytes, detail::quantize(angle, -std::numbers::pi, std::numbers::pi, *u->quant_bins));
    } else {
      for (double c : invariant_features(equiv, x)) detail::put_f64_ordered(v.bytes, c);
    }
    return v;
  }
  if (std::holds_alternative<Equality>(equiv)) {
    for (double c : x) detail::put_f64_ordered(v.bytes, c);
    return v;
  }
  throw TypeError("equivalence not applicable to continuous examples");
}

[[nodiscard]] inline InvariantValue maximal_invariant(const EquivalenceSpec& equiv, DiscreteExample x) {
  validate(equiv);
  InvariantValue v;
  return std::visit(
      [&](const auto& e) -> InvariantValue {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Counts>) {
          std::vector<std::uint32_t> counts(x.alphabet, 0);
          for (auto s : x.symbols) {
            if (s >= x.alphabet) throw TypeError("symbol outside alphabet");
            ++counts[s];
          }
          for (auto c : counts) detail::put_u32_be(v.bytes, c);
        } else if constexpr (std::is_same_v<T, GraphCanonical>) {
          v.bytes.push_back(static_cast<std::uint8_t>(e.num_nodes));
          detail::put_u32_be(v.bytes, canonical_graph_code(x.symbols, e.num_nodes));
        } else if constexpr (std::is_same_v<T, Preimage>) {
          const std::size_t idx = Alphabet{x.alphabet, x.symbols.size()}.encode(x.symbols);
          if (idx >= e.class_of.size()) throw ValidationError("Preimage table is not total over the alphabet");
          detail::put_u32_be(v.bytes, e.class_of[idx]);
        } else if constexpr (std::is_same_v<T, Equality>) {
          for (auto s : x.symbols) detail::put_u32_be(v.bytes, s);
        } else {
          throw TypeError("equivalence not applicable to discrete examples");
        }
        return v;
      },
      equiv);
}

/// M(x) for every row of a batch.
[[nodiscard]] inline std::vector<InvariantValue> maximal_invariants(const EquivalenceSpec& equiv,
                                                                    const SampleBatch& batch) {
  std::vector<InvariantValue> out;
  out.reserve(batch.rows);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    if (batch.is_discrete())
      out.push_back(maximal_invariant(equiv, DiscreteExample{batch.symbol_row(i), batch.alphabet}));
    else
      out.push_back(maximal_invariant(equiv, batch.real_row(i)));
  }
  return out;
}

/// Fills in quantization for continuous invariants: `bins` uniform bins
/// (unless already set) on the observed range of the batch.
[[nodiscard]] inline EquivalenceSpec fit_quantization(EquivalenceSpec equiv, const SampleBatch& batch,
                                                      std::uint32_t bins = 256) {
  if (auto* n = std::get_if<Norm>(&equiv)) {
    if (!n->quant_bins) n->quant_bins = bins;
    if (!n->range) {
      if (batch.is_discrete()) throw TypeError("Norm requires a continuous batch");
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = 0; i < batch.rows; ++i) {
        const double r = invariant_features(equiv, batch.real_row(i))[0];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      if (!(hi > lo)) hi = lo + 1.0;
      n->range = std::array<double, 2>{lo, std::nextafter(hi, INFINITY)};
    }
  } else if (auto* u = std::get_if<UnitVector>(&equiv)) {
    if (!u->quant_bins) u->quant_bins = bins;
  }
  return equiv;
}

// ---------------------------------------------------------------------------
// Canonical representatives
// ---------------------------------------------------------------------------

/// A fixed member of an equivalence class: the lexicographic minimum for
/// discrete relations, the point (r, 0) for Norm, the unit vector for UnitVector.
struct Representative {
  std::vector<std::uint32_t> symbols;
  std::vector<double> real;
};

[[nodiscard]] inline Representative canonical_representative(const EquivalenceSpec& equiv,
                                                             const InvariantValue& value,
                                                             const Alphabet& alphabet = {}) {
  const std::span<const std::uint8_t> b = value.bytes;
  Representative rep;
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Counts>) {
          for (std::size_t s = 0; 4 * s < b.size(); ++s) {
            const auto c = detail::get_u32_be(b, 4 * s);
            rep.symbols.insert(rep.symbols.end(), c, static_cast<std::uint32_t>(s));
          }
        } else if constexpr (std::is_same_v<T, GraphCanonical>) {
          const std::size_t m = detail::num_edges(e.num_nodes);
          const auto code = detail::get_u32_be(b, 1);
          for (std::size_t k = 0; k < m; ++k) rep.symbols.push_back((code >> (m - 1 - k)) & 1u);
        } else if constexpr (std::is_same_v<T, Preimage>) {
          const auto id = detail::get_u32_be(b, 0);
          const auto it = std::find(e.class_of.begin(), e.class_of.end(), id);
          if (it == e.class_of.end()) throw ValidationError("class id not present in Preimage table");
          rep.symbols.resize(alphabet.length);
          alphabet.decode(static_cast<std::size_t>(it - e.class_of.begin()), rep.symbols);
        } else if constexpr (std::is_same_v<T, Equality>) {
          if (alphabet.base == 0) {
            for (std::size_t k = 0; k + 8 <= b.size(); k += 8) rep.real.push_back(detail::get_f64_ordered(b, k));
          } else {
            for (std::size_t k = 0; k + 4 <= b.size(); k += 4) rep.symbols.push_back(detail::get_u32_be(b, k));
          }
        } else if constexpr (std::is_same_v<T, Norm>) {
          double r = 0.0;
          if (e.quant_bins) {
            if (!e.range) throw ValidationError("quantized Norm requires a range");
            r = detail::bin_center(detail::get_u32_be(b, 0), (*e.range)[0], (*e.range)[1], *e.quant_bins);
          } else {
            r = detail::get_f64_ordered(b, 0);
          }
          rep.real = {r, 0.0};
        } else {
          if (e.quant_bins) {
            const double a =
                detail::bin_center(detail::get_u32_be(b, 0), -std::numbers::pi, std::numbers::pi, *e.quant_bins);
            rep.real = {std::cos(a), std::sin(a)};
          } else {
            for (std::size_t k = 0; k + 8 <= b.size(); k += 8) rep.real.push_back(detail::get_f64_ordered(b, k));
          }
        }
      },
      equiv);
  return rep;
}

// ---------------------------------------------------------------------------
// Entropies and pushforwards
// ---------------------------------------------------------------------------

/// Shannon entropy in bits, with 0 log 0 = 0.
[[nodiscard]] inline double entropy_bits(std::span<const double> pmf) noexcept {
  double h = 0.0;
  for (double p : pmf)
    if (p > 0.0) h -= p * std::log2(p);
  return std::max(h, 0.0);
}

[[nodiscard]] inline double entropy_bits(const std::map<InvariantValue, double>& pmf) noexcept {
  double h = 0.0;
  for (const auto& [k, p] : pmf)
    if (p > 0.0) h -= p * std::log2(p);
  return std::max(h, 0.0);
}

/// Default alphabet structure for a flat pmf: graphs are edge strings, every
/// other relation sees single symbols.
[[nodiscard]] inline Alphabet default_alphabet(const EquivalenceSpec& equiv, std::size_t pmf_size) {
  if (const auto* g = std::get_if<GraphCanonical>(&equiv)) {
    const std::size_t m = detail::num_edges(g->num_nodes);
    if (pmf_size != (std::size_t{1} << m)) throw ValidationError("pmf size must be 2^(n(n-1)/2) for graphs");
    return {2, m};
  }
  return {static_cast<std::uint32_t>(pmf_size), 1};
}

/// Class structure of a finite alphabet under an equivalence.
struct ClassPartition {
  std::vector<std::size_t> class_of;    ///< class index of every flat alphabet index
  std::vector<InvariantValue> classes;  ///< sorted class values
  std::vector<double> probs;            ///< class probabilities (when built from a pmf)
};

[[nodiscard]] inline ClassPartition partition_alphabet(std::span<const double> pmf, const EquivalenceSpec& equiv,
                                                       std::optional<Alphabet> alphabet = std::nullopt) {
  if (is_continuous_invariant(equiv)) throw UnsupportedError("pushforward requires a discrete equivalence");
  const Alphabet alpha = alphabet ? *alphabet : default_alphabet(equiv, pmf.size());
  if (alpha.size() != pmf.size()) throw ValidationError("pmf size does not match the alphabet");
  std::vector<InvariantValue> values(pmf.size());
  std::vector<std::uint32_t> seq(alpha.length);
  std::map<InvariantValue, std::size_t> index;
  for (std::size_t x = 0; x < pmf.size(); ++x) {
    alpha.decode(x, seq);
    values[x] = maximal_invariant(equiv, DiscreteExample{seq, alpha.base});
    index.emplace(values[x], 0);
  }
  ClassPartition part;
  for (auto& [v, id] : index) {
    id = part.classes.size();
    part.classes.push_back(v);
  }
  part.class_of.resize(pmf.size());
  part.probs.assign(part.classes.size(), 0.0);
  for (std::size_t x = 0; x < pmf.size(); ++x) {
    part.class_of[x] = index.at(values[x]);
    part.probs[part.class_of[x]] += pmf[x];
  }
  return part;
}

/// Distribution of M(X) for a discrete X.
[[nodiscard]] inline std::map<InvariantValue, double> pushforward_pmf(
    std::span<const double> pmf, const EquivalenceSpec& equiv, std::optional<Alphabet> alphabet = std::nullopt) {
  const auto part = partition_alphabet(pmf, equiv, alphabet);
  std::map<InvariantValue, double> out;
  for (std::size_t c = 0; c < part.classes.size(); ++c) out.emplace(part.classes[c], part.probs[c]);
  return out;
}

struct InvariantEntropies {
  double H_X = 0.0;
  double H_M = 0.0;
  double H_X_given_M = 0.0;
};

namespace detail {

/// Calls fn(counts, log_prob) for every type (count vector) of L i.i.d.
/// draws from base with positive probability, by enumerating compositions.
template <class Fn>
void for_each_type(std::span<const double> base, std::size_t length, Fn&& fn) {
  const std::size_t k = base.size();
  // Number of compositions C(L+k-1, k-1), guarded against blow-up.
  double n_types = 1.0;
  for (std::size_t i = 1; i < k; ++i) n_types = n_types * double(length + i) / double(i);
  if (n_types > double(kMaxEnumeratedAlphabet)) throw CapacityError("too many types to enumerate");
  std::vector<double> log_base(k);
  for (std::size_t i = 0; i < k; ++i) log_base[i] = base[i] > 0.0 ? std::log(base[i]) : -INFINITY;
  const double log_fact_l = std::lgamma(double(length) + 1.0);
  std::vector<std::uint32_t> counts(k, 0);
  auto visit = [&](auto&& self, std::size_t pos, std::size_t remaining) -> void {
    if (pos + 1 == k) {
      counts[pos] = static_cast<std::uint32_t>(remaining);
      double lp = log_fact_l;
      for (std::size_t i = 0; i < k; ++i) {
        if (counts[i] == 0) continue;
        if (base[i] == 0.0) return;
        lp += double(counts[i]) * log_base[i] - std::lgamma(double(counts[i]) + 1.0);
      }
      fn(std::span<const std::uint32_t>(counts), lp);
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[pos] = static_cast<std::uint32_t>(c);
      self(self, pos + 1, remaining - c);
    }
  };
  visit(visit, 0, length);
}

/// Entropy of the type of L i.i.d. draws from base.
inline double type_entropy_bits(std::span<const double> base, std::size_t length) {
  double h = 0.0;
  for_each_type(base, length, [&h](std::span<const std::uint32_t>, double lp) { h -= std::exp(lp) * lp / std::numbers::ln2; });
  return std::max(h, 0.0);
}

}  // namespace detail

/// H(X), H(M(X)) and H(X|M(X)) = H(X) - H(M(X)) for a discrete source.
[[nodiscard]] inline InvariantEntropies invariant_entropies(const SourceSpec& spec, const EquivalenceSpec& equiv) {
  validate(spec);
  validate(equiv);
  if (std::holds_alternative<Banana>(spec)) throw UnsupportedError("invariant_entropies requires a discrete source");
  InvariantEntropies out;
  if (const auto* c = std::get_if<Categorical>(&spec)) {
    out.H_X = entropy_bits(c->pmf);
  } else {
    const auto& s = std::get<IidSequence>(spec);
    out.H_X = double(s.length) * entropy_bits(s.base_pmf);
  }
  if (std::holds_alternative<Equality>(equiv)) {
    out.H_M = out.H_X;
  } else if (const auto* s = std::get_if<IidSequence>(&spec); s && std::holds_alternative<Counts>(equiv)) {
    out.H_M = detail::type_entropy_bits(s->base_pmf, s->length);
  } else {
    const auto pmf = source_pmf(spec);
    std::optional<Alphabet> alpha;
    if (!std::holds_alternative<GraphCanonical>(equiv)) alpha = alphabet_of(spec);
    out.H_M = entropy_bits(pushforward_pmf(pmf, equiv, alpha));
  }
  out.H_M = std::min(out.H_M, out.H_X);
  out.H_X_given_M = std::max(0.0, out.H_X - out.H_M);
  return out;
}

/// Exact distribution of M(X) for a discrete source. Counts on i.i.d.
/// sequences enumerates types, so the sequence alphabet may be far larger
/// than the enumeration limit (e.g. 100 coin flips).
[[nodiscard]] inline std::map<InvariantValue, double> source_invariant_pmf(const SourceSpec& spec,
                                                                           const EquivalenceSpec& equiv) {
  validate(spec);
  validate(equiv);
  if (std::holds_alternative<Banana>(spec)) throw UnsupportedError("source_invariant_pmf requires a discrete source");
  if (const auto* s = std::get_if<IidSequence>(&spec); s && std::holds_alternative<Counts>(equiv)) {
    std::map<InvariantValue, double> out;
    detail::for_each_type(s->base_pmf, s->length, [&out](std::span<const std::uint32_t> counts, double lp) {
      InvariantValue v;
      for (auto c : counts) detail::put_u32_be(v.bytes, c);
      out.emplace(std::move(v), std::exp(lp));
    });
    return out;
  }
  std::optional<Alphabet> alpha;
  if (!std::holds_alternative<GraphCanonical>(equiv)) alpha = alphabet_of(spec);
  return pushforward_pmf(source_pmf(spec), equiv, alpha);
}

// ---------------------------------------------------------------------------
// Augmentation / equivalence consistency
// ---------------------------------------------------------------------------

struct ConsistencyReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
};

/// Counts examples whose invariant changes under the augmentation: exact
/// comparison for discrete relations, max-abs tolerance on the real-valued
/// invariant features for continuous ones.
[[nodiscard]] inline ConsistencyReport check_augmentation_consistency(const AugmentationSpec& aug,
                                                                      const EquivalenceSpec& equiv,
                                                                      const SampleBatch& batch, std::uint64_t seed,
                                                                      double tol = 1e-9) {
  const SampleBatch augmented = apply_augmentation(aug, batch, seed);
  ConsistencyReport report;
  report.checked = batch.rows;
  for (std::size_t i = 0; i < batch.rows; ++i) {
    bool same = true;
    if (batch.is_discrete()) {
      same = maximal_invariant(equiv, DiscreteExample{batch.symbol_row(i), batch.alphabet}) ==
             maximal_invariant(equiv, DiscreteExample{augmented.symbol_row(i), augmented.alphabet});
    } else {
      const auto a = invariant_features(equiv, batch.real_row(i));
      const auto b = invariant_features(equiv, augmented.real_row(i));
      for (std::size_t k = 0; k < a.size(); ++k) same = same && std::abs(a[k] - b[k]) <= tol;
    }
    if (!same) ++report.violations;
  }
  return report;
}

}  // namespace ivc
