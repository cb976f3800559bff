#pragma once

// Randomized invariant-coding corpora shared by the unit and acceptance suites.

#include <map>
#include <vector>

#include "ivc/coding/invariant_codec.hpp"

namespace ivc::test {

inline std::map<InvariantValue, std::uint64_t> histogram(const std::vector<InvariantValue>& values) {
  std::map<InvariantValue, std::uint64_t> h;
  for (const auto& v : values) ++h[v];
  return h;
}

// One random corpus: source, equivalence and (sometimes mismatched) model.
struct Corpus {
  SampleBatch batch;
  EquivalenceSpec equiv;
  Alphabet alphabet;
  FrequencyModel model;
};

inline Corpus random_corpus(CounterRng& rng, std::uint64_t seed) {
  const std::size_t n = rng.below(3) == 0 ? rng.below(50) + 1 : 1000 + rng.below(1500);
  Corpus c;
  switch (rng.below(6)) {
    case 0: {
      const std::uint32_t base = 2 + static_cast<std::uint32_t>(rng.below(4));
      const std::size_t len = 1 + rng.below(12);
      std::vector<double> p(base);
      double s = 0.0;
      for (auto& v : p) s += (v = 0.1 + rng.uniform());
      for (auto& v : p) v /= s;
      const SourceSpec src = IidSequence{p, len};
      c.batch = sample_source(src, n, seed);
      c.equiv = Counts{};
      c.alphabet = alphabet_of(src);
      break;
    }
    case 1: {
      const std::uint32_t nodes = 2 + static_cast<std::uint32_t>(rng.below(4));
      const SourceSpec src = IidSequence{{0.6, 0.4}, nodes * (nodes - 1) / 2};
      c.batch = sample_source(src, n, seed);
      c.equiv = GraphCanonical{nodes};
      c.alphabet = alphabet_of(src);
      break;
    }
    case 2: {
      const std::size_t k = 2 + rng.below(40);
      Preimage pre;
      for (std::size_t i = 0; i < k; ++i) pre.class_of.push_back(static_cast<std::uint32_t>(rng.below(6)));
      const SourceSpec src = Categorical{std::vector<double>(k, 1.0 / double(k))};
      c.batch = sample_source(src, n, seed);
      c.equiv = pre;
      c.alphabet = alphabet_of(src);
      break;
    }
    case 3: {
      const SourceSpec src = IidSequence{{0.5, 0.3, 0.2}, 1 + rng.below(4)};
      c.batch = sample_source(src, n, seed);
      c.equiv = Equality{};
      c.alphabet = alphabet_of(src);
      break;
    }
    case 4: {
      c.batch = sample_source(Banana{}, n, seed);
      c.equiv = fit_quantization(Norm{}, c.batch, 32 + static_cast<std::uint32_t>(rng.below(200)));
      break;
    }
    default: {
      c.batch = sample_source(Banana{}, n, seed);
      c.equiv = UnitVector{16 + static_cast<std::uint32_t>(rng.below(100))};
      break;
    }
  }
  auto counts = histogram(maximal_invariants(c.equiv, c.batch));
  // Every fifth corpus codes with a model that lacks some classes.
  if (rng.below(5) == 0 && counts.size() > 1) counts.erase(counts.begin());
  c.model = build_model(counts, 10 + static_cast<std::uint32_t>(rng.below(7)));
  return c;
}

}  // namespace ivc::test
