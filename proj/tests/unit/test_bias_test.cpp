#include "hoifkit/bias_test.hpp"
#include "hoifkit/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace hoifkit;

namespace {

UStatResult ustat(double est, double se) {
  UStatResult r;
  r.estimate = est;
  r.se = se;
  r.order = 2;
  r.kernel_kind = KernelKind::oracle_gram;
  return r;
}

}  // namespace

TEST(NormalQuantile, KnownValues) {
  EXPECT_NEAR(normal_upper_quantile(0.025), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_upper_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_upper_quantile(0.05), 1.6448536269514722, 1e-12);
  EXPECT_NEAR(normal_upper_quantile(0.975), -1.959963984540054, 1e-12);
}

TEST(BiasTest, ZeroEstimateNeverRejects) {
  const auto t = bias_test(ustat(0.0, 0.3), ustat(1.0, 0.2), 0.05, 0.0);
  EXPECT_NEAR(t.statistic, -1.959963984540054 * 0.3 / 0.2, 1e-12);
  EXPECT_FALSE(t.reject);
}

TEST(BiasTest, Arithmetic) {
  const auto t = bias_test(ustat(0.5, 0.0), ustat(1.0, 0.1), 0.05, 1.0);
  EXPECT_NEAR(t.statistic, 5.0, 1e-12);
  EXPECT_TRUE(t.reject);
  EXPECT_EQ(t.threshold, 1.0);
  EXPECT_EQ(t.if_estimate, 0.5);
  EXPECT_NEAR(t.z_alpha_half, 1.959963984540054, 1e-12);
}

TEST(BiasTest, NegativeEstimateUsesAbsoluteValue) {
  const auto t = bias_test(ustat(-0.5, 0.0), ustat(1.0, 0.1), 0.05, 1.0);
  EXPECT_NEAR(t.statistic, 5.0, 1e-12);
}

TEST(BiasTest, HugeDeltaNeverRejects) {
  const auto t = bias_test(ustat(1e6, 0.0), ustat(1.0, 1e-6), 0.05, std::numeric_limits<double>::infinity());
  EXPECT_FALSE(t.reject);
}

TEST(BiasTest, Errors) {
  EXPECT_THROW(bias_test(ustat(0.1, 0.1), ustat(1.0, 0.0), 0.05, 0.0), DegenerateError);
  EXPECT_THROW(bias_test(ustat(0.1, 0.1), ustat(1.0, 0.1), 0.0, 0.0), ConfigError);
  EXPECT_THROW(bias_test(ustat(0.1, 0.1), ustat(1.0, 0.1), 1.0, 0.0), ConfigError);
  EXPECT_THROW(bias_test(ustat(0.1, 0.1), ustat(1.0, 0.1), 0.05, -0.1), ConfigError);
}

TEST(BiasTest, MonotoneAndScaleEquivariant) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const double est = U(gen) - 0.5, ise = 0.2 * U(gen), pse = 0.01 + 0.1 * U(gen);
    const double d1 = 3.0 * U(gen), d2 = d1 + 2.0 * U(gen);
    const double a1 = 0.01 + 0.4 * U(gen), a2 = a1 * U(gen) + 1e-6;
    const auto base = bias_test(ustat(est, ise), ustat(0.0, pse), a1, d1);
    // larger delta or smaller alpha can only turn a rejection off
    if (bias_test(ustat(est, ise), ustat(0.0, pse), a1, d2).reject) EXPECT_TRUE(base.reject);
    if (bias_test(ustat(est, ise), ustat(0.0, pse), a2, d1).reject) EXPECT_TRUE(base.reject);
    const double c = 0.1 + 10.0 * U(gen);
    const auto scaled = bias_test(ustat(c * est, c * ise), ustat(0.0, c * pse), a1, d1);
    EXPECT_NEAR(scaled.statistic, base.statistic, 1e-12 * std::max(1.0, std::abs(base.statistic)));
    EXPECT_EQ(scaled.reject, base.reject);
    EXPECT_EQ(base.reject, base.statistic > d1);
  }
}
