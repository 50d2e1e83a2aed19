#include "hoifkit/condvar.hpp"
#include "hoifkit/error.hpp"
#include "hoifkit/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hoifkit;

TEST(Subcube, TwoPointsOneBin) {
  Eigen::MatrixXd X(2, 1);
  X << 0.1, 0.12;
  const Eigen::Vector2d Y(3.0, 1.0);
  SubcubePlan plan = make_subcube_plan(2, 1, 1.5);  // m = ceil(2^1.5) = 3
  EXPECT_EQ(plan.m, 3);
  Engine eng = make_engine(1, 0, "condvar-test");
  const auto r = subcube_variance(X, Y, plan, eng);
  EXPECT_DOUBLE_EQ(r.sigma2_hat, 2.0);
  EXPECT_EQ(r.bins_used, 1);
}

TEST(Subcube, ConstantResponseGivesZero) {
  Engine eng = make_engine(2, 0, "condvar-test");
  Eigen::MatrixXd X(100, 1);
  for (int i = 0; i < 100; ++i) X(i, 0) = uniform01(eng);
  const auto r = subcube_variance(X, Eigen::VectorXd::Constant(100, 4.2), make_subcube_plan(100, 1, 1.1), eng);
  EXPECT_EQ(r.sigma2_hat, 0.0);
}

TEST(Subcube, EmptyDesignAndDomain) {
  Eigen::MatrixXd X(2, 1);
  X << 0.1, 0.9;
  Engine eng = make_engine(3, 0, "condvar-test");
  EXPECT_THROW(subcube_variance(X, Eigen::Vector2d(1, 2), make_subcube_plan(2, 1, 2.0), eng), EmptyDesignError);
  X(1, 0) = 1.5;
  EXPECT_THROW(subcube_variance(X, Eigen::Vector2d(1, 2), make_subcube_plan(2, 1, 2.0), eng), DomainError);
  EXPECT_THROW(make_subcube_plan(10, 1, 1.0), ConfigError);
}

TEST(Subcube, EdgePointsHalfOpenAndLastClosed) {
  // m = 4: 0.25 opens bin 1, and 1.0 lands in the last bin.
  SubcubePlan plan;
  plan.m = 4;
  plan.k_bins = 4;
  plan.edge = 0.25;
  Eigen::MatrixXd X(4, 1);
  X << 0.25, 0.3, 1.0, 0.8;
  const Eigen::Vector4d Y(0.0, 2.0, 0.0, 4.0);
  Engine eng = make_engine(4, 0, "condvar-test");
  const auto r = subcube_variance(X, Y, plan, eng);
  EXPECT_EQ(r.bins_used, 2);
  EXPECT_DOUBLE_EQ(r.sigma2_hat, (2.0 + 8.0) / 2.0);
}

TEST(Subcube, PlansAreCubes) {
  const auto p = make_subcube_plan(100, 2, 1.2);
  EXPECT_EQ(p.m, static_cast<long>(std::ceil(std::pow(100.0, 0.6))));
  EXPECT_EQ(p.k_bins, static_cast<std::uint64_t>(p.m * p.m));
  const auto o = optimal_subcube_plan(1000, 1, 0.3);
  // k = n^{2/(1+1.2)}
  EXPECT_EQ(o.m, static_cast<long>(std::ceil(std::pow(1000.0, 2.0 / 2.2))));
}

TEST(Subcube, DeterministicPerSeed) {
  Engine g = make_engine(5, 0, "data");
  Eigen::MatrixXd X(500, 2);
  Eigen::VectorXd Y(500);
  for (int i = 0; i < 500; ++i) X(i, 0) = uniform01(g), X(i, 1) = uniform01(g), Y[i] = standard_normal(g);
  const auto plan = make_subcube_plan(500, 2, 1.1);
  Engine e1 = make_engine(9, 1, "pairs"), e2 = make_engine(9, 1, "pairs");
  EXPECT_EQ(subcube_variance(X, Y, plan, e1).sigma2_hat, subcube_variance(X, Y, plan, e2).sigma2_hat);
}

TEST(Subcube, AllPairsWithinBinSampleVariance) {
  Eigen::MatrixXd X(3, 1);
  X << 0.01, 0.02, 0.03;
  const Eigen::Vector3d Y(1.0, 2.0, 6.0);
  Engine eng = make_engine(6, 0, "condvar-test");
  SubcubeOptions o;
  o.all_pairs = true;
  const auto r = subcube_variance(X, Y, make_subcube_plan(3, 1, 1.5), eng, o);
  // mean of (Yi-Yj)^2/2 over the three pairs = sample variance = 7
  EXPECT_DOUBLE_EQ(r.sigma2_hat, 7.0);
}

TEST(Subcube, UnbiasedUnderConstantMean) {
  // n = 50, gamma = 1.2, Y ~ N(0,1): mean over 5000 seeds within 3 MC-se of 1
  const int R = 5000;
  double s = 0.0, ss = 0.0;
  for (int r = 0; r < R; ++r) {
    Engine eng = make_engine(2024, r, "condvar-unbiased");
    Eigen::MatrixXd X(50, 1);
    Eigen::VectorXd Y(50);
    for (int i = 0; i < 50; ++i) X(i, 0) = uniform01(eng), Y[i] = standard_normal(eng);
    const double v = subcube_variance(X, Y, make_subcube_plan(50, 1, 1.2), eng).sigma2_hat;
    s += v;
    ss += v * v;
  }
  const double mean = s / R, sd = std::sqrt((ss - R * mean * mean) / (R - 1));
  EXPECT_LE(std::abs(mean - 1.0), 3.0 * sd / std::sqrt(static_cast<double>(R)));
}
