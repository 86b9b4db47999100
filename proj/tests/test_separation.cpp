#include "dlmpc/separation.hpp"

#include "oracles/svm_oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dlmpc;

TEST(Separation, SymmetricCollinearSets)
{
  const std::vector<Position> a{{-1, 0}, {-2, 0}}, b{{1, 0}, {2, 0}};
  const auto h = fit_separating_hyperplane(a, b);
  ASSERT_TRUE(h);
  EXPECT_NEAR(h->normal(0), 1.0, 1e-12);
  EXPECT_NEAR(h->normal(1), 0.0, 1e-12);
  EXPECT_NEAR(h->support_a, -1.0, 1e-12);
  EXPECT_NEAR(h->support_b, 1.0, 1e-12);
  EXPECT_NEAR(h->margin(), 2.0, 1e-12);
}

TEST(Separation, SharedPointIsInfeasible)
{
  const std::vector<Position> a{{0, 0}, {-1, 1}}, b{{0, 0}, {1, 1}};
  EXPECT_FALSE(fit_separating_hyperplane(a, b));
}

TEST(Separation, OverlappingHullsAreInfeasible)
{
  const std::vector<Position> a{{-1, -1}, {1, 1}}, b{{-1, 1}, {1, -1}};
  EXPECT_FALSE(fit_separating_hyperplane(a, b));
}

TEST(Separation, EmptySetThrows)
{
  const std::vector<Position> a{{0, 0}}, none;
  EXPECT_THROW(fit_separating_hyperplane(a, none), std::invalid_argument);
}

TEST(Separation, SinglePoints)
{
  const std::vector<Position> a{{0, 0}}, b{{3, 4}};
  const auto h = fit_separating_hyperplane(a, b);
  ASSERT_TRUE(h);
  EXPECT_NEAR(h->margin(), 5.0, 1e-12);
  EXPECT_NEAR(h->normal(0), 0.6, 1e-12);
}

TEST(Separation, HullDropsInteriorAndCollinearPoints)
{
  const auto hull = convex_hull({{0, 0}, {2, 0}, {1, 0}, {2, 2}, {0, 2}, {1, 1}});
  EXPECT_EQ(hull.size(), 4u);
  EXPECT_EQ(convex_hull({{1, 1}, {1, 1}}).size(), 1u);
  EXPECT_EQ(convex_hull({{0, 0}, {1, 1}, {2, 2}}).size(), 2u);
}

TEST(Separation, MatchesQpOracleOnRandomInstances)
{
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1), ang(0, 6.283185307179586), gap(0.05, 2.0);
  std::uniform_int_distribution<int> count(1, 7);
  int separable = 0;
  for (int trial = 0; separable < 50; ++trial) {
    ASSERT_LT(trial, 1000);
    const double th = ang(rng);
    const Position n(std::cos(th), std::sin(th)), c(u(rng), u(rng));
    const double g = gap(rng);
    std::vector<Position> a, b;
    for (int k = count(rng); k > 0; --k) { a.push_back(c + Position(u(rng), u(rng)) - (g / 2 + 1.5) * n); }
    for (int k = count(rng); k > 0; --k) { b.push_back(c + Position(u(rng), u(rng)) + (g / 2 + 1.5) * n); }
    const auto ref = oracle::hard_margin_svm(a, b);
    const auto h = fit_separating_hyperplane(a, b);
    ASSERT_EQ(ref.has_value(), h.has_value()) << "trial " << trial;
    if (!ref) { continue; }
    ++separable;
    EXPECT_NEAR(h->margin(), ref->margin, 1e-6) << "trial " << trial;
    for (const auto & p : a) { EXPECT_LE(h->normal.dot(p), h->support_a + 1e-9); }
    for (const auto & p : b) { EXPECT_GE(h->normal.dot(p), h->support_b - 1e-9); }
  }
}
