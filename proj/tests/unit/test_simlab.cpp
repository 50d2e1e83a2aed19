#include "hoifkit/error.hpp"
#include "hoifkit/projection.hpp"
#include "hoifkit/simlab.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace hoifkit;

namespace {

Field fourier_series(int k, std::vector<std::pair<int, double>> terms) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  for (auto [j, v] : terms) c[j] = v;
  return Field::series(BasisDict::make(Family::fourier, k), c);
}

}  // namespace

TEST(GenTruth, AmplitudeZeroIsOffset) {
  TruthSpec s;
  s.amplitude = 0.0;
  s.offset = 0.4;
  const Field f = gen_truth(s);
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 0.5, 0.9;
  EXPECT_TRUE((f.eval(X).array() == 0.4).all());
}

TEST(GenTruth, SingleTerm) {
  TruthSpec s;
  s.J = 2;
  s.amplitude = 0.7;
  s.offset = 0.1;
  const Field f = gen_truth(s);
  for (double x : {0.0, 0.2, 0.61}) {
    const double ref = 0.1 + 0.7 * std::pow(2.0, -0.75) * std::numbers::sqrt2 * std::cos(2.0 * std::numbers::pi * x);
    EXPECT_NEAR(f(std::span<const double>(&x, 1)), ref, 1e-14);
  }
}

TEST(GenTruth, AlternatingSignsAndErrors) {
  TruthSpec s;
  s.J = 5;
  s.sign = SignPattern::alternating;
  const Field f = gen_truth(s);
  ASSERT_TRUE(f.is_series());
  EXPECT_GT(f.coef()[1], 0.0);  // j = 2
  EXPECT_LT(f.coef()[2], 0.0);  // j = 3
  EXPECT_GT(f.coef()[3], 0.0);
  EXPECT_EQ(f.coef()[0], 0.0);
  s.s = 1.5;
  EXPECT_THROW(gen_truth(s), ConfigError);
  EXPECT_THROW(parse_sign("mixed"), ConfigError);
}

TEST(GenTruth, L2TailMatchesDirectSum) {
  TruthSpec s;
  s.J = 400;
  s.s = 0.25;
  s.amplitude = 1.3;
  const Field f = gen_truth(s);
  for (int k : {1, 10, 57, 399, 400}) {
    double direct = 0.0;
    for (int j = k; j < s.J; ++j) direct += f.coef()[j] * f.coef()[j];
    EXPECT_NEAR(l2_tail(s, k), direct, 1e-8) << k;
  }
  // and the same tail from quadrature of (p - Pi_k p)^2 at k = 10
  const Field head = Field::series(BasisDict::make(Family::fourier, 10), f.coef().head(10));
  const double q = inner_product(Field::combine(f, 1.0, head, -1.0), Field::combine(f, 1.0, head, -1.0),
                                 Density::uniform(1), 400);
  EXPECT_NEAR(q, l2_tail(s, 10), 1e-8);
}

TEST(GenData, DeterministicAndMoments) {
  DataModel m;
  m.noise = Noise::bernoulli;
  m.p = Field::constant(0.5);
  Engine e1 = make_engine(1, 0, "data"), e2 = make_engine(1, 0, "data");
  const Dataset a = gen_data(100000, 1, m, e1), b = gen_data(100000, 1, m, e2);
  EXPECT_EQ(a.X(), b.X());
  EXPECT_EQ(a.A(), b.A());
  EXPECT_NEAR(a.A().mean(), 0.5, 0.01);
  EXPECT_EQ(a.Y(), a.A());

  DataModel g;
  g.noise = Noise::gaussian;
  g.p = Field::callable([](std::span<const double> x) { return std::sin(5.0 * x[0]); });
  Engine e3 = make_engine(2, 0, "data");
  const Dataset d = gen_data(100000, 2, g, e3);
  const Eigen::VectorXd e = d.A() - g.p.eval(d.X());
  const double v = (e.array() - e.mean()).square().sum() / (e.size() - 1);
  EXPECT_NEAR(v, 1.0, 0.02);
  EXPECT_GE(d.X().minCoeff(), 0.0);
  EXPECT_LT(d.X().maxCoeff(), 1.0);
}

TEST(GenData, GaussianCovarianceModel) {
  DataModel m;
  m.variant = FunctionalVariant::cond_covariance;
  m.p = Field::constant(0.0);
  m.b = Field::constant(1.0);
  m.rho = 0.6;
  Engine eng = make_engine(3, 0, "data");
  const Dataset d = gen_data(200000, 1, m, eng);
  const double cov = ((d.A().array() - d.A().mean()) * (d.Y().array() - d.Y().mean())).mean();
  EXPECT_NEAR(cov, 0.6, 0.01);
  EXPECT_NEAR(d.Y().mean(), 1.0, 0.01);
}

TEST(GenData, BernoulliRangeChecked) {
  TruthSpec s;
  s.offset = 0.5;
  s.amplitude = 1.0;
  EXPECT_THROW(check_probability_range(gen_truth(s), 1), ConfigError);
  s.amplitude = 0.01;
  EXPECT_NO_THROW(check_probability_range(gen_truth(s), 1));
}

TEST(FitNuisance, ExactInterpolationAndMean) {
  const auto b = BasisDict::make(Family::fourier, 5);
  Engine eng = make_engine(4, 0, "fit");
  Sample s;
  s.X.resize(50, 1);
  for (int i = 0; i < 50; ++i) s.X(i, 0) = uniform01(eng);
  const Eigen::VectorXd beta = (Eigen::VectorXd(5) << 0.3, -0.2, 0.5, 0.1, -0.4).finished();
  s.A = b.eval(s.X) * beta;
  s.Y = s.A;
  const auto nuis = fit_nuisance(s, b, FunctionalVariant::cond_variance);
  EXPECT_LT((nuis.p_hat.coef() - beta).cwiseAbs().maxCoeff(), 1e-10);

  const auto b1 = BasisDict::make(Family::fourier, 1);
  s.A = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0);
  const auto n1 = fit_nuisance(s, b1, FunctionalVariant::cond_variance);
  EXPECT_NEAR(n1.p_hat.coef()[0], 0.5, 1e-14);
  EXPECT_THROW(fit_nuisance(s, BasisDict::make(Family::fourier, 50), FunctionalVariant::cond_variance),
               PreconditionError);
}

TEST(OracleBias, Examples) {
  const auto b2 = BasisDict::make(Family::fourier, 2);
  const auto g = GramOperator::identity(2);
  const Density u = Density::uniform(1);
  // p_hat = p: everything zero
  const Field p = fourier_series(6, {{1, 0.2}, {3, 0.1}});
  const auto z = oracle_bias(p, p, p, p, b2, g, u);
  EXPECT_EQ(z.bias_k, 0.0);
  EXPECT_EQ(z.bias_inf, 0.0);
  // p - p_hat = 0.3 z_2 + 0.1 z_4 (z_4 = sqrt2 cos 4 pi x), cond_variance
  const Field diff = fourier_series(4, {{1, 0.3}, {3, 0.1}});
  const Field zero;
  const auto o = oracle_bias(diff, zero, diff, zero, b2, g, u);
  EXPECT_NEAR(o.bias_k, 0.09, 1e-12);
  EXPECT_NEAR(o.bias_inf, 0.10, 1e-12);
  EXPECT_NEAR(o.tb_k, 0.01, 1e-12);
  EXPECT_NEAR(o.proj_p2, 0.09, 1e-12);
  // same through quadrature only (callables, no coefficient shortcut)
  const Field dc = Field::callable([](std::span<const double> x) {
    const double t = 2.0 * std::numbers::pi * x[0];
    return std::numbers::sqrt2 * (0.3 * std::cos(t) + 0.1 * std::cos(2.0 * t));
  });
  const auto q = oracle_bias(dc, zero, dc, zero, b2, g, u);
  EXPECT_NEAR(q.bias_k, 0.09, 1e-10);
  EXPECT_NEAR(q.bias_inf, 0.10, 1e-10);
}

TEST(OracleBias, InsideSpanHasNoTruncation) {
  const auto b = BasisDict::make(Family::legendre, 6);
  const Field d = Field::callable([](std::span<const double> x) { return 1.0 - 2.0 * x[0] + x[0] * x[0] * x[0]; });
  const auto o = oracle_bias(d, Field(), d, Field(), b, GramOperator::identity(6), Density::uniform(1));
  EXPECT_NEAR(o.tb_k, 0.0, 1e-10);
  EXPECT_NEAR(o.bias_k, o.bias_inf, 1e-10);
  EXPECT_NEAR(power_condition_ratio(o, FunctionalVariant::cond_variance, 6, 600), o.proj_p2 / 0.01, 1e-9);
}

TEST(Weierstrass, ValueAndSlope) {
  const Field w = weierstrass(0.5, 3, 2.0);
  const double x = 0.0;
  EXPECT_NEAR(w(std::span<const double>(&x, 1)), 2.0 * (1.0 + std::pow(2.0, -0.5) + 0.5), 1e-14);
  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 6, 12, 24}), 1.0, 1e-14);
  EXPECT_NEAR(loglog_slope({1, 10, 100}, {1, 0.1, 0.01}), -1.0, 1e-14);
}
