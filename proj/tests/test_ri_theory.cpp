#include <gtest/gtest.h>

#include <cmath>

#include "ivc/ri_theory.hpp"

namespace {

using namespace ivc;

const std::vector<double> kEight{0.25, 0.2, 0.15, 0.1, 0.1, 0.08, 0.07, 0.05};
const Preimage kThree{{0, 0, 1, 1, 1, 2, 2, 2}};

double h2(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

Channel random_channel(CounterRng& rng, std::size_t rows, std::size_t cols) {
  Channel ch(rows, cols);
  for (std::size_t x = 0; x < rows; ++x) {
    double s = 0.0;
    for (auto& v : ch.row(x)) s += (v = -std::log(1.0 - rng.uniform()));
    for (auto& v : ch.row(x)) v /= s;
  }
  return ch;
}

std::vector<double> random_pmf(CounterRng& rng, std::size_t n) {
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) s += (v = rng.uniform() + 0.01);
  for (auto& v : p) v /= s;
  return p;
}

TEST(RiFunction, Examples) {
  EXPECT_DOUBLE_EQ(ri_function(2.5, 0.0), 2.5);
  EXPECT_DOUBLE_EQ(ri_function(2.5, 2.5), 0.0);
  EXPECT_DOUBLE_EQ(ri_function(3.0, 1.5), 1.5);
  EXPECT_DOUBLE_EQ(ri_function(1.0, 4.0), 0.0);
  EXPECT_THROW((void)ri_function(-1.0, 0.0), ValidationError);
  EXPECT_THROW((void)ri_function(1.0, -0.1), ValidationError);
}

TEST(MutualInformation, Examples) {
  const std::vector<double> u4(4, 0.25);
  Channel id(4, 4);
  for (std::size_t i = 0; i < 4; ++i) id(i, i) = 1.0;
  EXPECT_NEAR(mutual_information(u4, id), 2.0, 1e-12);
  Channel constant(8, 3);
  for (std::size_t x = 0; x < 8; ++x) {
    constant(x, 0) = 0.2;
    constant(x, 1) = 0.3;
    constant(x, 2) = 0.5;
  }
  EXPECT_NEAR(mutual_information(kEight, constant), 0.0, 1e-12);
  Channel bsc(2, 2);
  bsc(0, 0) = bsc(1, 1) = 0.75;
  bsc(0, 1) = bsc(1, 0) = 0.25;
  EXPECT_NEAR(mutual_information(std::vector<double>{0.5, 0.5}, bsc), 1.0 - h2(0.25), 1e-12);
  EXPECT_NEAR(1.0 - h2(0.25), 0.1887218755, 1e-9);
  EXPECT_THROW((void)mutual_information(u4, constant), ValidationError);
}

TEST(MutualInformation, Bounds) {
  CounterRng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto p = random_pmf(rng, 6);
    const auto ch = random_channel(rng, 6, 3);
    const double mi = mutual_information(p, ch);
    EXPECT_GE(mi, 0.0);
    EXPECT_LE(mi, std::min(entropy_bits(p), std::log2(3.0)) + 1e-12);
  }
}

TEST(InvarianceDistortion, Examples) {
  const auto part = partition_alphabet(kEight, kThree);
  const double H_M = entropy_bits(part.probs);
  EXPECT_NEAR(invariance_distortion(kEight, class_channel(part), kThree), 0.0, 1e-12);
  Channel constant(8, 1, 1.0);
  EXPECT_NEAR(invariance_distortion(kEight, constant, kThree), H_M, 1e-12);
  // H_M = 1 source: two equiprobable classes, erasure with alpha = 0.5.
  const std::vector<double> p{0.25, 0.25, 0.25, 0.25};
  const Preimage two{{0, 0, 1, 1}};
  Channel erase(4, 3);
  for (std::size_t x = 0; x < 4; ++x) {
    erase(x, x / 2) = 0.5;
    erase(x, 2) = 0.5;
  }
  EXPECT_NEAR(invariance_distortion(p, erase, two), 0.5, 1e-12);
}

TEST(InvarianceDistortion, DataProcessing) {
  CounterRng rng(11);
  for (int t = 0; t < 200; ++t) {
    const auto ch = random_channel(rng, 8, 4);
    const auto next = random_channel(rng, 4, 5);
    EXPECT_GE(invariance_distortion(kEight, ch.then(next), kThree) + 1e-12, invariance_distortion(kEight, ch, kThree));
  }
}

TEST(ErasureChannel, Examples) {
  const auto part = partition_alphabet(kEight, kThree);
  const double H_M = entropy_bits(part.probs);
  const auto zero = erasure_channel(kEight, kThree, 0.0);
  EXPECT_NEAR(zero.rate, H_M, 1e-9);
  EXPECT_NEAR(zero.distortion, 0.0, 1e-9);
  EXPECT_EQ(zero.channel.cols(), part.classes.size() + 1);
  const auto full = erasure_channel(kEight, kThree, H_M);
  EXPECT_NEAR(full.rate, 0.0, 1e-9);
  const auto over = erasure_channel(kEight, kThree, H_M + 1.0);
  EXPECT_TRUE(over.trivial);
  EXPECT_NEAR(over.rate, 0.0, 1e-12);
  EXPECT_THROW((void)erasure_channel(kEight, kThree, -0.1), ValidationError);

  const SourceSpec coins = IidSequence{{0.5, 0.5}, 2};
  const auto c = erasure_channel(source_pmf(coins), Counts{}, 0.75, alphabet_of(coins));
  EXPECT_NEAR(c.alpha, 0.5, 1e-12);
  EXPECT_NEAR(c.rate, 0.75, 1e-9);
  EXPECT_NEAR(c.distortion, 0.75, 1e-9);
}

TEST(ErasureChannel, AchievesTheLine) {
  const double H_M = entropy_bits(partition_alphabet(kEight, kThree).probs);
  for (int i = 0; i <= 20; ++i) {
    const double delta = H_M * i / 20.0;
    const auto e = erasure_channel(kEight, kThree, delta);
    e.channel.validate();
    EXPECT_NEAR(e.rate, ri_function(H_M, delta), 1e-9);
    EXPECT_NEAR(e.distortion, delta, 1e-9);
    EXPECT_NEAR(e.rate, mutual_information(kEight, e.channel), 1e-12);
  }
}

TEST(Converse, RandomChannelsNeverBeatTheLine) {
  CounterRng rng(21);
  for (int t = 0; t < 250; ++t) {
    const std::size_t n = 2 + rng.below(10);
    const auto p = random_pmf(rng, n);
    Preimage pre;
    for (std::size_t i = 0; i < n; ++i) pre.class_of.push_back(static_cast<std::uint32_t>(rng.below(4)));
    const double H_M = entropy_bits(partition_alphabet(p, pre).probs);
    const auto ch = random_channel(rng, n, 1 + rng.below(6));
    const double rate = mutual_information(p, ch);
    const double dist = invariance_distortion(p, ch, pre);
    EXPECT_GE(rate, ri_function(H_M, dist) - 1e-2);
    EXPECT_LE(dist, H_M + 1e-12);
  }
}

TEST(OptimizeChannel, BetaZeroIsConstant) {
  const auto o = optimize_channel(kEight, kThree, 0.0, 3, 4, 1);
  EXPECT_LT(o.rate, 1e-2);
}

TEST(OptimizeChannel, VerticesAndConverse) {
  const double H_M = entropy_bits(partition_alphabet(kEight, kThree).probs);
  for (double beta : {0.25, 0.5, 2.0, 4.0}) {
    const auto o = optimize_channel(kEight, kThree, beta, 3, 8, 42);
    o.channel.validate(1e-9);
    EXPECT_GE(o.rate, ri_function(H_M, o.distortion) - 1e-2) << beta;
    if (beta > 1.0) {
      EXPECT_NEAR(o.rate, H_M, 1e-2) << beta;
      EXPECT_NEAR(o.distortion, 0.0, 1e-2) << beta;
    } else {
      EXPECT_NEAR(o.rate, 0.0, 1e-2) << beta;
      EXPECT_NEAR(o.distortion, H_M, 1e-2) << beta;
    }
    EXPECT_NEAR(o.objective, o.rate + beta * o.distortion, 1e-9);
  }
}

TEST(OptimizeChannel, InformationBottleneckRecovery) {
  // Preimage by labels Y: the lossless oracle point costs H(Y).
  const std::vector<double> p{0.1, 0.15, 0.05, 0.2, 0.3, 0.2};
  const Preimage labels{{0, 1, 0, 1, 2, 2}};
  const double H_Y = entropy_bits(std::vector<double>{0.15, 0.35, 0.5});
  const auto o = optimize_channel(p, labels, 4.0, 6, 8, 9);
  EXPECT_NEAR(o.rate, H_Y, 1e-2);
  EXPECT_NEAR(o.distortion, 0.0, 1e-2);
}

TEST(OptimizeChannel, Deterministic) {
  const auto a = optimize_channel(kEight, kThree, 2.0, 3, 3, 5);
  const auto b = optimize_channel(kEight, kThree, 2.0, 3, 3, 5);
  EXPECT_EQ(a.rate, b.rate);
  EXPECT_EQ(a.distortion, b.distortion);
}

TEST(OptimizeChannel, CapacityLimit) {
  EXPECT_THROW((void)optimize_channel(std::vector<double>(65, 1.0 / 65), Equality{}, 1.0, 2, 1, 0), CapacityError);
}

TEST(RiCurveTable, ErasureEqualsTheoryOnGrid) {
  std::vector<OptimizedChannel> oracle;
  for (double beta : {0.25, 4.0}) oracle.push_back(optimize_channel(kEight, kThree, beta, 3, 4, 1));
  const auto rows = ri_curve_table(kEight, kThree, oracle, 11);
  ASSERT_EQ(rows.size(), 11u);
  for (const auto& r : rows) EXPECT_NEAR(r.rate_erasure, r.rate_theory, 1e-9);
  EXPECT_NEAR(rows.back().rate_oracle, 0.0, 1e-2);
}

}  // namespace
