#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ivc/invariance.hpp"
#include "ivc/sources.hpp"

namespace {

using namespace ivc;

// Independent reference: std::mt19937_64 + std::normal_distribution through
// the Banana map (bend, rotation, shift) written out from scratch.
std::array<double, 2> reference_banana_mean(std::size_t draws) {
  const Banana b;
  std::mt19937_64 gen(20240611);
  std::normal_distribution<double> n1(0.0, std::sqrt(b.cov_diag[0])), n2(0.0, std::sqrt(b.cov_diag[1]));
  const double t = b.rot_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double a = n1(gen);
    const double y = n2(gen) + b.bend * a * a - 9.0;
    m0 += c * a - s * y + b.shift[0];
    m1 += s * a + c * y + b.shift[1];
  }
  return {m0 / double(draws), m1 / double(draws)};
}

TEST(Sources, DegenerateCategoricalRepeatsSymbolZero) {
  const auto b = sample_source(Categorical{{1.0}}, 5, 3);
  ASSERT_TRUE(b.is_discrete());
  EXPECT_EQ(b.rows, 5u);
  for (auto s : b.symbols) EXPECT_EQ(s, 0u);
}

TEST(Sources, BananaMeanMatchesIndependentMonteCarlo) {
  const auto oracle = reference_banana_mean(10'000'000);
  const auto b = sample_source(Banana{}, 1'000'000, 17);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < b.rows; ++i) {
    m0 += b.real_row(i)[0];
    m1 += b.real_row(i)[1];
  }
  m0 /= double(b.rows);
  m1 /= double(b.rows);
  EXPECT_NEAR(m0, oracle[0], 0.05);
  EXPECT_NEAR(m1, oracle[1], 0.05);
}

TEST(Sources, BananaIntermediateCovarianceHasBendCorrection) {
  // Undo shift and rotation; Var(x1) = 3, Var(x2) = 0.5 + bend^2 Var(x1^2)
  // = 0.5 + 0.01 * 2 * 9, Cov = bend * E[x1^3] = 0.
  const Banana spec;
  const std::size_t n = 400'000;
  const auto b = sample_source(spec, n, 5);
  const double t = -spec.rot_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = b.real_row(i)[0] - spec.shift[0], y = b.real_row(i)[1] - spec.shift[1];
    u[i] = c * x - s * y;
    v[i] = s * x + c * y;
  }
  auto mean = [&](const std::vector<double>& a) {
    double m = 0.0;
    for (double x : a) m += x;
    return m / double(n);
  };
  const double mu = mean(u), mv = mean(v);
  double vu = 0.0, vv = 0.0, cuv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    vu += (u[i] - mu) * (u[i] - mu);
    vv += (v[i] - mv) * (v[i] - mv);
    cuv += (u[i] - mu) * (v[i] - mv);
  }
  vu /= double(n - 1);
  vv /= double(n - 1);
  cuv /= double(n - 1);
  const double var_x1 = spec.cov_diag[0];
  const double var_x2 = spec.cov_diag[1] + spec.bend * spec.bend * 2.0 * var_x1 * var_x1;
  // Standard errors of sample (co)variances under the model (fourth moments).
  const double se_u = var_x1 * std::sqrt(2.0 / double(n));
  const double se_v = 0.02;  // generous: x2 carries a chi-square component
  const double se_c = std::sqrt(var_x1 * var_x2 / double(n));
  EXPECT_NEAR(mu, 0.0, 3 * std::sqrt(var_x1 / double(n)));
  EXPECT_NEAR(mv, spec.bend * var_x1 - 9.0, 3 * std::sqrt(var_x2 / double(n)));
  EXPECT_NEAR(vu, var_x1, 3 * se_u);
  EXPECT_NEAR(vv, var_x2, 3 * se_v);
  EXPECT_NEAR(cuv, 0.0, 3 * 3.0 * se_c);
}

TEST(Sources, SamplingIsDeterministic) {
  const SourceSpec seq = IidSequence{{0.5, 0.5}, 3};
  EXPECT_EQ(sample_source(seq, 1, 42), sample_source(seq, 1, 42));
  EXPECT_EQ(sample_source(Banana{}, 100, 9), sample_source(Banana{}, 100, 9));
  EXPECT_NE(sample_source(Banana{}, 100, 9), sample_source(Banana{}, 100, 10));
}

TEST(Sources, PrefixIndependentOfBatchSize) {
  const auto a = sample_source(Banana{}, 10, 4);
  const auto b = sample_source(Banana{}, 1000, 4);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(a.real_row(i)[0], b.real_row(i)[0]);
}

TEST(Sources, InvalidPmfRejected) {
  EXPECT_THROW((void)sample_source(Categorical{{0.5, 0.4}}, 1, 0), ValidationError);
  EXPECT_THROW((void)sample_source(Categorical{{1.2, -0.2}}, 1, 0), ValidationError);
  EXPECT_THROW((void)sample_source(Banana{}, 0, 0), ValidationError);
}

TEST(Sources, SourcePmfProductMeasure) {
  EXPECT_EQ(source_pmf(Categorical{{0.25, 0.75}}), (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(source_pmf(IidSequence{{0.5, 0.5}, 2}), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  const auto p = source_pmf(IidSequence{{0.9, 0.1}, 2});
  const std::vector<double> want{0.81, 0.09, 0.09, 0.01};
  ASSERT_EQ(p.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], want[i], 1e-15);
}

TEST(Sources, SourcePmfErrors) {
  EXPECT_THROW((void)source_pmf(Banana{}), UnsupportedError);
  EXPECT_THROW((void)source_pmf(IidSequence{{0.5, 0.5}, 21}), CapacityError);
}

TEST(Augmentation, IdentityIsBitwiseEqual) {
  const auto b = sample_source(Banana{}, 50, 1);
  EXPECT_EQ(apply_augmentation(Identity{}, b, 3), b);
}

TEST(Augmentation, FixedQuarterTurn) {
  auto b = SampleBatch::continuous(1, 2);
  b.real = {1.0, 0.0};
  const auto r = apply_augmentation(Rotation{90.0, 90.0}, b, 0);
  EXPECT_NEAR(r.real[0], 0.0, 1e-12);
  EXPECT_NEAR(r.real[1], 1.0, 1e-12);
}

TEST(Augmentation, PermutationPreservesCounts) {
  auto b = SampleBatch::discrete(200, 3, 2);
  for (std::size_t i = 0; i < b.rows; ++i) {
    b.symbol_row(i)[0] = 0;
    b.symbol_row(i)[1] = 1;
    b.symbol_row(i)[2] = 0;
  }
  const auto p = apply_augmentation(Permutation{}, b, 5);
  std::size_t moved = 0;
  for (std::size_t i = 0; i < p.rows; ++i) {
    auto row = p.symbol_row(i);
    EXPECT_EQ(std::count(row.begin(), row.end(), 0u), 2);
    moved += row[0] != 0u;
  }
  EXPECT_GT(moved, 0u);
}

TEST(Augmentation, DeterministicAndShapePreserving) {
  const auto b = sample_source(Banana{}, 64, 2);
  const AugmentationSpec aug = Compose{{Rotation{}, TranslateX{-1.0, 1.0}}};
  const auto a1 = apply_augmentation(aug, b, 8);
  EXPECT_EQ(a1, apply_augmentation(aug, b, 8));
  EXPECT_EQ(a1.rows, b.rows);
  EXPECT_EQ(a1.cols, b.cols);
  EXPECT_NE(a1, apply_augmentation(aug, b, 9));
}

TEST(Augmentation, KindMismatchIsTypeError) {
  const auto cont = sample_source(Banana{}, 4, 0);
  const auto disc = sample_source(Categorical{{0.5, 0.5}}, 4, 0);
  EXPECT_THROW((void)apply_augmentation(Permutation{}, cont, 0), TypeError);
  EXPECT_THROW((void)apply_augmentation(Rotation{}, disc, 0), TypeError);
  EXPECT_THROW((void)apply_augmentation(LabelResample{{0, 1, 0, 1}}, cont, 0), TypeError);
}

TEST(Augmentation, LabelResampleKeepsLabelsAndNeedsCoverage) {
  const SourceSpec src = Categorical{std::vector<double>(6, 1.0 / 6.0)};
  const auto b = sample_source(src, 300, 3);
  std::vector<std::uint32_t> labels(b.rows);
  for (std::size_t i = 0; i < b.rows; ++i) labels[i] = b.symbols[i] % 2;
  const auto r = apply_augmentation(LabelResample{labels}, b, 4);
  for (std::size_t i = 0; i < b.rows; ++i) EXPECT_EQ(r.symbols[i] % 2, labels[i]);
  labels.pop_back();
  EXPECT_THROW((void)apply_augmentation(LabelResample{labels}, b, 4), ValidationError);
}

TEST(Consistency, RotationKeepsNorm) {
  const auto b = sample_source(Banana{}, 1000, 6);
  const auto r = check_augmentation_consistency(Rotation{}, Norm{}, b, 7, 1e-9);
  EXPECT_EQ(r.checked, 1000u);
  EXPECT_EQ(r.violations, 0u);
}

TEST(Consistency, PermutationKeepsCounts) {
  const auto b = sample_source(IidSequence{{0.3, 0.3, 0.4}, 6}, 1000, 6);
  EXPECT_EQ(check_augmentation_consistency(Permutation{}, Counts{}, b, 1).violations, 0u);
}

TEST(Consistency, TranslationBreaksNorm) {
  const auto b = sample_source(Banana{}, 1000, 6);
  EXPECT_GT(check_augmentation_consistency(TranslateX{-2.0, 2.0}, Norm{}, b, 1, 1e-9).violations, 0u);
}

}  // namespace
