#include <gtest/gtest.h>

#include <cmath>

#include "ivc/coding/invariant_codec.hpp"
#include "random_corpora.hpp"

namespace {

using namespace ivc;
using namespace ivc::test;

InvariantValue sym(std::uint32_t v) {
  InvariantValue out;
  out.bytes = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
               static_cast<std::uint8_t>(v)};
  return out;
}

std::uint32_t freq_of(const FrequencyModel& m, const InvariantValue& v) { return m.entry(*m.find(v)).freq; }

TEST(BuildModel, Examples) {
  const auto a = sym(1), b = sym(2);
  const auto even = build_model({{a, 1}, {b, 1}}, 8);
  EXPECT_EQ(freq_of(even, a), 128u);
  EXPECT_EQ(freq_of(even, b), 128u);
  const auto three = build_model({{a, 3}, {b, 1}}, 8);
  EXPECT_EQ(freq_of(three, a), 192u);
  EXPECT_EQ(freq_of(three, b), 64u);
  const auto skew = build_model({{a, 1}, {b, 1000000}}, 8);
  EXPECT_GE(freq_of(skew, a), 1u);
  EXPECT_EQ(freq_of(skew, a) + freq_of(skew, b), 256u);
}

TEST(BuildModel, FrequenciesSumToTotal) {
  CounterRng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::map<InvariantValue, std::uint64_t> counts;
    const std::size_t k = 1 + rng.below(200);
    for (std::size_t i = 0; i < k; ++i) counts[sym(static_cast<std::uint32_t>(i))] = 1 + rng.below(100000);
    const std::uint32_t bits = 8 + static_cast<std::uint32_t>(rng.below(9));
    const auto m = build_model(counts, bits);
    std::uint64_t total = 0;
    for (const auto& e : m.entries()) {
      EXPECT_GE(e.freq, 1u);
      total += e.freq;
    }
    EXPECT_EQ(total, std::uint64_t{1} << bits);
  }
}

TEST(BuildModel, Errors) {
  std::map<InvariantValue, std::uint64_t> many;
  for (std::uint32_t i = 0; i < 257; ++i) many[sym(i)] = 1;
  EXPECT_THROW((void)build_model(many, 8), CapacityError);
  EXPECT_THROW((void)build_model({}, 8), ValidationError);
  EXPECT_THROW((void)build_model({{sym(0), 0}}, 8), ValidationError);
  EXPECT_THROW((void)build_model({{sym(0), 1}}, 7), ValidationError);
  EXPECT_THROW((void)build_model({{sym(0), 1}}, 17), ValidationError);
}

TEST(Rans, EmptySequence) {
  const auto m = build_model({{sym(0), 1}, {sym(1), 1}}, 12);
  const auto bytes = rans_encode({}, m);
  EXPECT_TRUE(bytes.empty());
  EXPECT_TRUE(rans_decode(bytes, m, 0).empty());
  const auto coded = compress_invariant_values({}, m);
  const auto parsed = CodeStream::parse(coded.stream.serialize());
  EXPECT_EQ(parsed.n_symbols, 0u);
  EXPECT_TRUE(decode_invariant_values(parsed).empty());
}

TEST(Rans, FairCoinsWithinBound) {
  CounterRng rng(4);
  std::vector<InvariantValue> s;
  for (int i = 0; i < 10000; ++i) s.push_back(sym(static_cast<std::uint32_t>(rng.below(2))));
  const auto m = build_model({{sym(0), 1}, {sym(1), 1}}, 14);
  const auto bytes = rans_encode(s, m);
  EXPECT_LE(8.0 * double(bytes.size()), 10000.0 + 64 + 200);
  EXPECT_EQ(rans_decode(bytes, m, s.size()), s);
}

TEST(Rans, SkewedBinaryNearBinaryEntropy) {
  const double h = -0.9 * std::log2(0.9) - 0.1 * std::log2(0.1);
  EXPECT_NEAR(h, 0.4689955936, 1e-9);
  CounterRng rng(5);
  std::vector<InvariantValue> s;
  for (int i = 0; i < 10000; ++i) s.push_back(sym(rng.uniform() < 0.1 ? 1u : 0u));
  const auto m = build_model_from_pmf({{sym(0), 0.9}, {sym(1), 0.1}}, 14);
  const auto bytes = rans_encode(s, m);
  const double bps = 8.0 * double(bytes.size()) / 10000.0;
  // Sampling noise of the empirical cross-entropy is ~0.004 bits/symbol.
  EXPECT_NEAR(bps, h, 0.02);
  EXPECT_LE(8.0 * double(bytes.size()), model_cross_entropy_bits(s, m) + 64 + 0.02 * 10000);
  EXPECT_EQ(rans_decode(bytes, m, s.size()), s);
}

TEST(Rans, UnknownSymbolIsEncodingError) {
  const auto m = build_model({{sym(0), 1}}, 8);
  const std::vector<InvariantValue> s{sym(7)};
  EXPECT_THROW((void)rans_encode(s, m), EncodingError);
}

TEST(Rans, CorruptedPayloadDetected) {
  CounterRng rng(6);
  std::vector<InvariantValue> s;
  for (int i = 0; i < 2000; ++i) s.push_back(sym(static_cast<std::uint32_t>(rng.below(5))));
  const auto m = build_model(histogram(s), 12);
  auto bytes = rans_encode(s, m);
  auto truncated = bytes;
  truncated.resize(truncated.size() / 2);
  EXPECT_THROW((void)rans_decode(truncated, m, s.size()), DecodeError);
  EXPECT_THROW((void)rans_decode(bytes, m, s.size() - 1), DecodeError);
}

TEST(InvariantCodec, RoundtripAndLengthOnRandomCorpora) {
  CounterRng rng(1234);
  std::size_t with_escapes = 0, large = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const Corpus c = random_corpus(rng, t);
    const auto values = maximal_invariants(c.equiv, c.batch);
    const auto coded = invariant_compress(c.batch, c.equiv, c.model);
    const auto bytes = coded.stream.serialize();
    const auto decoded = invariant_decompress(CodeStream::parse(bytes), c.equiv, c.model, c.alphabet);
    ASSERT_EQ(decoded.values, values) << "corpus " << t;
    with_escapes += coded.stats.escapes > 0;
    for (const auto& [v, rep] : decoded.representatives) {
      if (rep.symbols.empty() || std::holds_alternative<Preimage>(c.equiv)) continue;
      EXPECT_EQ(maximal_invariant(c.equiv, DiscreteExample{rep.symbols, c.alphabet.base}), v);
    }
    if (values.size() >= 1000) {
      ++large;
      EXPECT_LE(coded.stats.payload_bits, 1.02 * coded.stats.model_bits + 64.0) << "corpus " << t;
    }
  }
  EXPECT_GT(with_escapes, 50u);
  EXPECT_GT(large, 300u);
}

TEST(InvariantCodec, HundredCoinsUnderFourPointSixBits) {
  const SourceSpec src = IidSequence{{0.5, 0.5}, 100};
  const auto model = build_model_from_pmf(source_invariant_pmf(src, Counts{}), 14);
  const auto batch = sample_source(src, 10000, 7);
  const auto coded = invariant_compress(batch, Counts{}, model);
  EXPECT_LE(coded.stats.payload_bits / 10000.0, 4.6);
  EXPECT_EQ(coded.stats.escapes, 0u);
}

TEST(InvariantCodec, MultisetGainMatchesOrderEntropy) {
  // 8 symbols from a 4-letter alphabet; lossless coding spends H(X) per
  // sequence, invariant coding H(M(X)); the gain is H(X|M(X)).
  const std::vector<double> base{0.4, 0.3, 0.2, 0.1};
  const SourceSpec src = IidSequence{base, 8};
  const std::size_t n = 20000;
  const auto ent = invariant_entropies(src, Counts{});
  const auto batch = sample_source(src, n, 3);
  const auto inv = invariant_compress(batch, Counts{}, build_model_from_pmf(source_invariant_pmf(src, Counts{}), 16));
  std::map<InvariantValue, double> letters;
  for (std::uint32_t a = 0; a < 4; ++a) {
    const std::uint32_t s[] = {a};
    letters.emplace(maximal_invariant(Equality{}, DiscreteExample{s, 4}), base[a]);
  }
  std::vector<InvariantValue> flat;
  for (auto s : batch.symbols) {
    const std::uint32_t one[] = {s};
    flat.push_back(maximal_invariant(Equality{}, DiscreteExample{one, 4}));
  }
  const auto lossless = compress_invariant_values(flat, build_model_from_pmf(letters, 16));
  const double gain = (lossless.stats.payload_bits - inv.stats.payload_bits) / double(n);
  EXPECT_NEAR(gain, ent.H_X_given_M, 0.05 * ent.H_X_given_M);
  // Rate gain bound with matched models.
  EXPECT_GE(lossless.stats.payload_bits - inv.stats.payload_bits, 0.9 * double(n) * ent.H_X_given_M);
}

TEST(InvariantCodec, EqualityIsLossless) {
  const SourceSpec src = IidSequence{{0.5, 0.25, 0.25}, 3};
  const auto ent = invariant_entropies(src, Equality{});
  const auto batch = sample_source(src, 20000, 8);
  const auto coded = invariant_compress(batch, Equality{}, build_model_from_pmf(source_invariant_pmf(src, Equality{}), 14));
  EXPECT_NEAR(coded.stats.payload_bits / 20000.0, ent.H_X, 0.03 * ent.H_X);
}

TEST(InvariantCodec, CountsRepresentativeIsSorted) {
  const SourceSpec src = IidSequence{{0.5, 0.5}, 3};
  const auto model = build_model_from_pmf(source_invariant_pmf(src, Counts{}), 12);
  auto batch = SampleBatch::discrete(1, 3, 2);
  batch.symbols = {0, 1, 0};
  const auto coded = invariant_compress(batch, Counts{}, model);
  const auto out = invariant_decompress(CodeStream::parse(coded.stream.serialize()), Counts{}, model, Alphabet{2, 3});
  ASSERT_EQ(out.representatives.size(), 1u);
  EXPECT_EQ(out.representatives.begin()->second.symbols, (std::vector<std::uint32_t>{0, 0, 1}));
}

TEST(InvariantCodec, WrongModelRejected) {
  const SourceSpec src = IidSequence{{0.5, 0.5}, 6};
  const auto right = build_model_from_pmf(source_invariant_pmf(src, Counts{}), 12);
  const auto wrong = build_model_from_pmf(source_invariant_pmf(IidSequence{{0.9, 0.1}, 6}, Counts{}), 12);
  const auto coded = invariant_compress(sample_source(src, 500, 1), Counts{}, right);
  EXPECT_THROW((void)invariant_decompress(coded.stream, Counts{}, wrong), DecodeError);
}

TEST(CodeStream, RejectsBadContainers) {
  const auto m = build_model({{sym(0), 3}, {sym(1), 1}}, 10);
  const std::vector<InvariantValue> v(300, sym(0));
  const auto bytes = compress_invariant_values(v, m).stream.serialize();
  EXPECT_EQ(bytes[0], 'I');
  EXPECT_EQ(bytes[3], 'Z');
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW((void)CodeStream::parse(bad_magic), DecodeError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_THROW((void)CodeStream::parse(bad_version), DecodeError);
  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() - 1}) {
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW((void)CodeStream::parse(truncated), DecodeError) << cut;
  }
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW((void)CodeStream::parse(trailing), DecodeError);
}

TEST(CodeStream, SerializeParseIsIdentity) {
  CounterRng rng(9);
  std::vector<InvariantValue> v;
  for (int i = 0; i < 1000; ++i) v.push_back(sym(static_cast<std::uint32_t>(rng.below(9))));
  const auto m = build_model(histogram(std::vector<InvariantValue>(v.begin(), v.begin() + 500)), 12);
  const auto cs = compress_invariant_values(v, m).stream;
  const auto bytes = cs.serialize();
  EXPECT_EQ(CodeStream::parse(bytes).serialize(), bytes);
}

}  // namespace
