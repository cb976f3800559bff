#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "ivc/error.hpp"
#include "ivc/invariance.hpp"

namespace ivc {

/// Static frequency table over invariant values. Frequencies sum to
/// 2^precision_bits; cumulative starts are derived from the (sorted) entry
/// order. An entry with an empty value is the escape symbol.
class FrequencyModel {
 public:
  struct Entry {
    InvariantValue value;
    std::uint32_t freq = 0;
    std::uint32_t cum = 0;
  };

  FrequencyModel() = default;

  /// Entries must be sorted by value, unique, with freq >= 1 summing to 2^precision_bits.
  FrequencyModel(std::vector<Entry> entries, std::uint32_t precision_bits)
      : entries_(std::move(entries)), precision_bits_(precision_bits) {
    if (precision_bits_ < 8 || precision_bits_ > 16) throw ValidationError("precision_bits must be in [8,16]");
    if (entries_.empty()) throw ValidationError("frequency model needs at least one symbol");
    std::uint64_t cum = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].freq == 0) throw ValidationError("frequency model entry with zero frequency");
      if (i > 0 && !(entries_[i - 1].value < entries_[i].value))
        throw ValidationError("frequency model entries must be sorted and unique");
      entries_[i].cum = static_cast<std::uint32_t>(cum);
      cum += entries_[i].freq;
      if (entries_[i].value.bytes.empty()) escape_ = i;
    }
    if (cum != total()) throw ValidationError("frequencies do not sum to 2^precision_bits");
    slot_.resize(total());
    for (std::uint32_t i = 0; i < entries_.size(); ++i)
      std::fill_n(slot_.begin() + entries_[i].cum, entries_[i].freq, i);
  }

  [[nodiscard]] std::uint32_t precision_bits() const noexcept { return precision_bits_; }
  [[nodiscard]] std::uint32_t total() const noexcept { return std::uint32_t{1} << precision_bits_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
  [[nodiscard]] const Entry& entry(std::size_t i) const { return entries_.at(i); }
  [[nodiscard]] std::optional<std::size_t> escape_index() const noexcept { return escape_; }

  [[nodiscard]] std::optional<std::size_t> find(const InvariantValue& v) const {
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), v,
                                     [](const Entry& e, const InvariantValue& key) { return e.value < key; });
    if (it == entries_.end() || !(it->value == v)) return std::nullopt;
    return static_cast<std::size_t>(it - entries_.begin());
  }

  /// Entry index owning the cumulative slot (slot < total()).
  [[nodiscard]] std::uint32_t symbol_for_slot(std::uint32_t slot) const { return slot_[slot]; }

  /// -log2(freq/total) for entry i.
  [[nodiscard]] double cost_bits(std::size_t i) const {
    return double(precision_bits_) - std::log2(double(entries_[i].freq));
  }

  bool operator==(const FrequencyModel& o) const {
    if (precision_bits_ != o.precision_bits_ || entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (!(entries_[i].value == o.entries_[i].value) || entries_[i].freq != o.entries_[i].freq) return false;
    return true;
  }

 private:
  std::vector<Entry> entries_;
  std::uint32_t precision_bits_ = 14;
  std::optional<std::size_t> escape_;
  std::vector<std::uint32_t> slot_;
};

inline constexpr std::uint32_t kDefaultPrecisionBits = 14;

namespace detail {

/// Largest-remainder apportionment of `total` among weights with a floor of 1.
inline std::vector<std::uint32_t> apportion(const std::vector<double>& weights, std::uint32_t total) {
  const std::size_t n = weights.size();
  if (n > total) throw CapacityError("more symbols than 2^precision_bits");
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw ValidationError("frequency weights must be positive");
  std::vector<double> share(n);
  std::vector<std::uint32_t> freq(n);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    share[i] = weights[i] / sum * total;
    freq[i] = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::floor(share[i])));
    assigned += freq[i];
  }
  std::int64_t diff = std::int64_t{total} - assigned;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (diff > 0) {
    // Hand out the remaining units by largest fractional remainder.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return share[a] - freq[a] > share[b] - freq[b];
    });
    for (std::size_t k = 0; diff > 0; ++k, --diff) ++freq[order[k % n]];
  } else {
    // Floors pushed us over: take units back from the most over-allocated symbols.
    while (diff < 0) {
      std::size_t pick = n;
      double worst = -INFINITY;
      for (std::size_t i = 0; i < n; ++i) {
        if (freq[i] <= 1) continue;
        const double over = (freq[i] - share[i]) / std::max(share[i], 1e-300);
        if (over > worst) {
          worst = over;
          pick = i;
        }
      }
      --freq[pick];
      ++diff;
    }
  }
  return freq;
}

}  // namespace detail

/// Frequencies proportional to counts (largest remainder, floor of 1).
[[nodiscard]] inline FrequencyModel build_model(const std::map<InvariantValue, std::uint64_t>& counts,
                                                std::uint32_t precision_bits = kDefaultPrecisionBits) {
  if (counts.empty()) throw ValidationError("build_model needs at least one symbol");
  if (precision_bits < 8 || precision_bits > 16) throw ValidationError("precision_bits must be in [8,16]");
  std::vector<double> weights;
  for (const auto& [v, c] : counts) {
    if (c == 0) throw ValidationError("build_model counts must be positive");
    weights.push_back(double(c));
  }
  const auto freq = detail::apportion(weights, std::uint32_t{1} << precision_bits);
  std::vector<FrequencyModel::Entry> entries;
  std::size_t i = 0;
  for (const auto& [v, c] : counts) entries.push_back({v, freq[i++], 0});
  return FrequencyModel(std::move(entries), precision_bits);
}

/// Model from exact class probabilities; zero-probability classes are dropped.
[[nodiscard]] inline FrequencyModel build_model_from_pmf(const std::map<InvariantValue, double>& pmf,
                                                         std::uint32_t precision_bits = kDefaultPrecisionBits) {
  std::vector<FrequencyModel::Entry> entries;
  std::vector<double> weights;
  for (const auto& [v, p] : pmf)
    if (p > 0.0) {
      entries.push_back({v, 0, 0});
      weights.push_back(p);
    }
  if (entries.empty()) throw ValidationError("pmf has no positive mass");
  const auto freq = detail::apportion(weights, std::uint32_t{1} << precision_bits);
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].freq = freq[i];
  return FrequencyModel(std::move(entries), precision_bits);
}

/// Copy of the model with an escape entry (frequency 1) taken from the most
/// frequent symbol. Returns the model unchanged if it already has one.
[[nodiscard]] inline FrequencyModel with_escape(const FrequencyModel& model) {
  if (model.escape_index()) return model;
  auto entries = model.entries();
  auto largest = std::max_element(entries.begin(), entries.end(),
                                  [](const auto& a, const auto& b) { return a.freq < b.freq; });
  if (largest->freq <= 1) throw CapacityError("no frequency left for an escape symbol");
  --largest->freq;
  entries.insert(entries.begin(), FrequencyModel::Entry{InvariantValue{}, 1, 0});
  return FrequencyModel(std::move(entries), model.precision_bits());
}

}  // namespace ivc
