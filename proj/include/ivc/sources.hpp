#pragma once

// Data sources and random augmentation generators.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "ivc/error.hpp"
#include "ivc/rng.hpp"

namespace ivc {

// ---------------------------------------------------------------------------
// Source specifications
// ---------------------------------------------------------------------------

/// Gaussian pushed through a quadratic bend, then rotated and shifted.
struct Banana {
  std::array<double, 2> cov_diag{3.0, 0.5};
  double bend = 0.1;
  double rot_deg = -40.0;
  std::array<double, 2> shift{-3.0, -4.0};
};

struct Categorical {
  std::vector<double> pmf;
};

struct IidSequence {
  std::vector<double> base_pmf;
  std::size_t length = 1;
};

using SourceSpec = std::variant<Banana, Categorical, IidSequence>;

inline constexpr std::size_t kMaxEnumeratedAlphabet = std::size_t{1} << 20;

/// Throws ValidationError unless p is nonnegative and sums to one within 1e-12.
inline void validate_pmf(std::span<const double> p, const char* what = "pmf") {
  if (p.empty()) throw ValidationError(std::string(what) + " is empty");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError(std::string(what) + " has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError(std::string(what) + " does not sum to 1 (sum=" + std::to_string(total) + ")");
}

inline void validate(const SourceSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Banana>) {
          if (!(s.cov_diag[0] > 0.0) || !(s.cov_diag[1] > 0.0))
            throw ValidationError("Banana cov_diag entries must be > 0");
        } else if constexpr (std::is_same_v<T, Categorical>) {
          validate_pmf(s.pmf);
        } else {
          validate_pmf(s.base_pmf, "base_pmf");
          if (s.length < 1) throw ValidationError("IidSequence length must be >= 1");
        }
      },
      spec);
}

[[nodiscard]] inline bool is_discrete(const SourceSpec& spec) noexcept {
  return !std::holds_alternative<Banana>(spec);
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

/// Row-major batch of examples. Continuous batches hold an n x d matrix of
/// doubles; discrete batches hold an n x L matrix of symbol indices drawn from
/// an alphabet of `alphabet` letters.
struct SampleBatch {
  enum class Kind : std::uint8_t { Continuous, Discrete };

  Kind kind = Kind::Continuous;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint32_t alphabet = 0;
  std::vector<double> real;
  std::vector<std::uint32_t> symbols;

  static SampleBatch continuous(std::size_t n, std::size_t d) {
    SampleBatch b;
    b.kind = Kind::Continuous;
    b.rows = n;
    b.cols = d;
    b.real.assign(n * d, 0.0);
    return b;
  }

  static SampleBatch discrete(std::size_t n, std::size_t len, std::uint32_t alphabet) {
    SampleBatch b;
    b.kind = Kind::Discrete;
    b.rows = n;
    b.cols = len;
    b.alphabet = alphabet;
    b.symbols.assign(n * len, 0);
    return b;
  }

  [[nodiscard]] bool is_discrete() const noexcept { return kind == Kind::Discrete; }

  [[nodiscard]] std::span<const double> real_row(std::size_t i) const {
    return {real.data() + i * cols, cols};
  }
  [[nodiscard]] std::span<double> real_row(std::size_t i) { return {real.data() + i * cols, cols}; }

  [[nodiscard]] std::span<const std::uint32_t> symbol_row(std::size_t i) const {
    return {symbols.data() + i * cols, cols};
  }
  [[nodiscard]] std::span<std::uint32_t> symbol_row(std::size_t i) {
    return {symbols.data() + i * cols, cols};
  }

  bool operator==(const SampleBatch&) const = default;
};

/// Alphabet of fixed-length sequences: `base` letters per position.
struct Alphabet {
  std::uint32_t base = 0;
  std::size_t length = 1;

  /// |base|^length, or throws CapacityError beyond the enumeration limit.
  [[nodiscard]] std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < length; ++i) {
      if (base != 0 && n > kMaxEnumeratedAlphabet / base)
        throw CapacityError("alphabet exceeds 2^20 sequences");
      n *= base;
    }
    if (n > kMaxEnumeratedAlphabet) throw CapacityError("alphabet exceeds 2^20 sequences");
    return n;
  }

  /// Mixed-radix decoding; the first position is the most significant digit.
  void decode(std::size_t index, std::span<std::uint32_t> out) const {
    for (std::size_t i = length; i-- > 0;) {
      out[i] = static_cast<std::uint32_t>(index % base);
      index /= base;
    }
  }

  [[nodiscard]] std::size_t encode(std::span<const std::uint32_t> seq) const {
    std::size_t index = 0;
    for (auto s : seq) index = index * base + s;
    return index;
  }
};

[[nodiscard]] inline Alphabet alphabet_of(const SourceSpec& spec) {
  if (const auto* c = std::get_if<Categorical>(&spec))
    return {static_cast<std::uint32_t>(c->pmf.size()), 1};
  if (const auto* s = std::get_if<IidSequence>(&spec))
    return {static_cast<std::uint32_t>(s->base_pmf.size()), s->length};
  throw UnsupportedError("continuous source has no discrete alphabet");
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t sample_index(std::span<const double> pmf, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    acc += pmf[k];
    if (u < acc) return static_cast<std::uint32_t>(k);
  }
  // u landed in the rounding slack above the cumulative sum.
  for (std::size_t k = pmf.size(); k-- > 0;)
    if (pmf[k] > 0.0) return static_cast<std::uint32_t>(k);
  return 0;
}

inline std::array<double, 2> rotate(std::array<double, 2> v, double deg) {
  const double t = deg * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

}  // namespace detail

/// Pre-rotation point of the Banana transform: (x1, x2 + bend*x1^2 - 9).
[[nodiscard]] inline std::array<double, 2> banana_bend(const Banana& b, double g1, double g2) {
  const double x1 = std::sqrt(b.cov_diag[0]) * g1;
  const double x2 = std::sqrt(b.cov_diag[1]) * g2;
  return {x1, x2 + b.bend * x1 * x1 - 9.0};
}

/// Draws n examples. Example i uses stream CounterRng(seed).split(i), so the
/// result is independent of evaluation order.
[[nodiscard]] inline SampleBatch sample_source(const SourceSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample_source requires n >= 1");
  validate(spec);
  const CounterRng root(seed, 0x5A3B);
  return std::visit(
      [&](const auto& s) -> SampleBatch {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Banana>) {
          auto batch = SampleBatch::continuous(n, 2);
          for (std::size_t i = 0; i < n; ++i) {
            auto rng = root.split(i);
            const double g1 = rng.normal();
            const double g2 = rng.normal();
            auto p = detail::rotate(banana_bend(s, g1, g2), s.rot_deg);
            auto row = batch.real_row(i);
            row[0] = p[0] + s.shift[0];
            row[1] = p[1] + s.shift[1];
          }
          return batch;
        } else if constexpr (std::is_same_v<T, Categorical>) {
          auto batch = SampleBatch::discrete(n, 1, static_cast<std::uint32_t>(s.pmf.size()));
          for (std::size_t i = 0; i < n; ++i) {
            auto rng = root.split(i);
            batch.symbols[i] = detail::sample_index(s.pmf, rng.uniform());
          }
          return batch;
        } else {
          auto batch = SampleBatch::discrete(n, s.length, static_cast<std::uint32_t>(s.base_pmf.size()));
          for (std::size_t i = 0; i < n; ++i) {
            auto rng = root.split(i);
            for (auto& sym : batch.symbol_row(i)) sym = detail::sample_index(s.base_pmf, rng.uniform());
          }
          return batch;
        }
      },
      spec);
}

/// Exact pmf over the full discrete alphabet (mixed-radix sequence order).
[[nodiscard]] inline std::vector<double> source_pmf(const SourceSpec& spec) {
  validate(spec);
  if (std::holds_alternative<Banana>(spec))
    throw UnsupportedError("source_pmf: continuous source has no pmf");
  if (const auto* c = std::get_if<Categorical>(&spec)) return c->pmf;
  const auto& s = std::get<IidSequence>(spec);
  const Alphabet alpha = alphabet_of(spec);
  const std::size_t size = alpha.size();
  std::vector<double> pmf(size);
  std::vector<std::uint32_t> seq(s.length);
  for (std::size_t idx = 0; idx < size; ++idx) {
    alpha.decode(idx, seq);
    double p = 1.0;
    for (auto sym : seq) p *= s.base_pmf[sym];
    pmf[idx] = p;
  }
  return pmf;
}

// ---------------------------------------------------------------------------
// Augmentations
// ---------------------------------------------------------------------------

struct Identity {};
struct Rotation {
  double min_deg = 0.0;
  double max_deg = 360.0;
};
struct TranslateX {
  double min = 0.0;
  double max = 0.0;
};
struct TranslateY {
  double min = 0.0;
  double max = 0.0;
};
struct Permutation {};
/// Replaces example i by a uniformly drawn example j with labels[j] == labels[i].
struct LabelResample {
  std::vector<std::uint32_t> labels;
};
struct Compose;

using AugmentationSpec =
    std::variant<Identity, Rotation, TranslateX, TranslateY, Permutation, LabelResample, Compose>;

struct Compose {
  std::vector<AugmentationSpec> list;
};

inline void validate(const AugmentationSpec& spec) {
  std::visit(
      [](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Rotation>) {
          if (a.min_deg > a.max_deg) throw ValidationError("Rotation min_deg > max_deg");
        } else if constexpr (std::is_same_v<T, TranslateX> || std::is_same_v<T, TranslateY>) {
          if (a.min > a.max) throw ValidationError("translation min > max");
        } else if constexpr (std::is_same_v<T, Compose>) {
          for (const auto& inner : a.list) validate(inner);
        }
      },
      spec);
}

namespace detail {

inline void require_continuous_2d(const SampleBatch& b, const char* what) {
  if (b.is_discrete() || b.cols != 2)
    throw TypeError(std::string(what) + " requires a continuous 2-D batch");
}

inline void require_discrete(const SampleBatch& b, const char* what) {
  if (!b.is_discrete()) throw TypeError(std::string(what) + " requires a discrete batch");
}

/// Label -> member indices, built once per call.
class LabelIndex {
 public:
  explicit LabelIndex(std::span<const std::uint32_t> labels) : labels_(labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) members_[labels[i]].push_back(i);
  }

  [[nodiscard]] std::size_t draw(std::size_t i, CounterRng& rng) const {
    const auto& m = members_.at(labels_[i]);
    return m[rng.below(m.size())];
  }

 private:
  std::span<const std::uint32_t> labels_;
  std::unordered_map<std::uint32_t, std::vector<std::size_t>> members_;
};

}  // namespace detail

/// Applies one independent draw of the augmentation to each example.
/// Deterministic given seed; the output has the input's shape.
[[nodiscard]] inline SampleBatch apply_augmentation(const AugmentationSpec& spec, const SampleBatch& batch,
                                                    std::uint64_t seed) {
  validate(spec);
  const CounterRng root(seed, 0xA06);
  return std::visit(
      [&](const auto& a) -> SampleBatch {
        using T = std::decay_t<decltype(a)>;
        SampleBatch out = batch;
        if constexpr (std::is_same_v<T, Identity>) {
          return out;
        } else if constexpr (std::is_same_v<T, Rotation>) {
          detail::require_continuous_2d(batch, "Rotation");
          for (std::size_t i = 0; i < batch.rows; ++i) {
            auto rng = root.split(i);
            const double deg = rng.uniform(a.min_deg, a.max_deg);
            auto row = out.real_row(i);
            auto r = detail::rotate({row[0], row[1]}, deg);
            row[0] = r[0];
            row[1] = r[1];
          }
          return out;
        } else if constexpr (std::is_same_v<T, TranslateX> || std::is_same_v<T, TranslateY>) {
          detail::require_continuous_2d(batch, "Translate");
          constexpr std::size_t axis = std::is_same_v<T, TranslateX> ? 0 : 1;
          for (std::size_t i = 0; i < batch.rows; ++i) {
            auto rng = root.split(i);
            out.real_row(i)[axis] += rng.uniform(a.min, a.max);
          }
          return out;
        } else if constexpr (std::is_same_v<T, Permutation>) {
          detail::require_discrete(batch, "Permutation");
          for (std::size_t i = 0; i < batch.rows; ++i) {
            auto rng = root.split(i);
            auto row = out.symbol_row(i);
            for (std::size_t k = row.size(); k > 1; --k) std::swap(row[k - 1], row[rng.below(k)]);
          }
          return out;
        } else if constexpr (std::is_same_v<T, LabelResample>) {
          detail::require_discrete(batch, "LabelResample");
          if (a.labels.size() != batch.rows)
            throw ValidationError("LabelResample labels must cover every example index");
          const detail::LabelIndex index(a.labels);
          for (std::size_t i = 0; i < batch.rows; ++i) {
            auto rng = root.split(i);
            const std::size_t j = index.draw(i, rng);
            auto src = batch.symbol_row(j);
            std::copy(src.begin(), src.end(), out.symbol_row(i).begin());
          }
          return out;
        } else {
          for (std::size_t k = 0; k < a.list.size(); ++k)
            out = apply_augmentation(a.list[k], out, mix64(seed + 0x9E37 * (k + 1)));
          return out;
        }
      },
      spec);
}

}  // namespace ivc
