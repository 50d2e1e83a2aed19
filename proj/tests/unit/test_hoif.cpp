#include "hoifkit/error.hpp"
#include "hoifkit/gram.hpp"
#include "hoifkit/hoif.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hoifkit;

namespace {

GramOperator dense(const Eigen::MatrixXd& m, GramKind kind = GramKind::exact) {
  return GramOperator::from_matrix(m, kind, "test");
}

double tol(double ref) { return 1e-10 * std::max(1.0, std::abs(ref)); }

}  // namespace

TEST(Psi1, Examples) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
  const auto r0 = drml_psi1(zero, zero);
  EXPECT_EQ(r0.estimate, 0.0);
  EXPECT_EQ(r0.se, 0.0);
  const Eigen::Vector2d a(1.0, -1.0);
  const auto r = drml_psi1(a, a);
  EXPECT_DOUBLE_EQ(r.estimate, 1.0);
  EXPECT_DOUBLE_EQ(r.se, 0.0);
  EXPECT_THROW(drml_psi1(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)), InsufficientDataError);
}

TEST(Psi1, SampleSd) {
  const Eigen::Vector4d a(1, 2, 3, 4), y(1, 1, 1, 2);
  const auto r = drml_psi1(a, y);
  // summands 1,2,3,8: mean 3.5, sample variance 29/3
  EXPECT_DOUBLE_EQ(r.estimate, 3.5);
  EXPECT_NEAR(r.se, std::sqrt(29.0 / 3.0 / 4.0), 1e-14);
}

TEST(If22, Examples) {
  const Eigen::Vector2d one(1.0, 1.0);
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(2, 1);
  EXPECT_DOUBLE_EQ(if22(one, one, Z, GramOperator::identity(1)).estimate, 1.0);
  EXPECT_DOUBLE_EQ(if22(Eigen::Vector2d::Zero(), one, Z, GramOperator::identity(1)).estimate, 0.0);
  EXPECT_THROW(if22(one, one, Eigen::MatrixXd::Ones(2, 2), GramOperator::identity(1)), DimensionError);
  EXPECT_THROW(if22(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1),
                    GramOperator::identity(1)),
               InsufficientDataError);
}

TEST(If22, MatchesDoubleLoopAndSeDefinition) {
  std::mt19937_64 gen(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 1 + rep % 5;
    const int n = 2 + static_cast<int>(gen() % 24);
    const auto t = oracle::random_instance(gen, n, k);
    // n x n variance route and cross-moment route (forced by n > 3k or not) both appear over the sweep
    const auto r = if22(t.a, t.y, t.Z, dense(t.omega));
    const double ref = oracle::if22(t.a, t.y, t.Z, t.omega);
    ASSERT_NEAR(r.estimate, ref, tol(ref)) << "n=" << n << " k=" << k;
    ASSERT_NEAR(if22_naive(t.a, t.y, t.Z, dense(t.omega)), ref, tol(ref));
    if (n >= 3) {
      const auto se = oracle::se2(t.a, t.y, t.Z, t.omega);
      ASSERT_NEAR(r.se, se.se, tol(se.se));
      ASSERT_NEAR(r.diagnostics.at("var_linear"), se.var_linear, tol(se.var_linear));
      ASSERT_NEAR(r.diagnostics.at("var_degenerate"), se.var_degenerate, tol(se.var_degenerate));
    }
  }
}

TEST(If22, CrossMomentRouteMatchesDefinition) {
  // n well above 3k takes the k x k cross-moment route for mean K^2
  std::mt19937_64 gen(8);
  const auto t = oracle::random_instance(gen, 60, 2);
  const auto r = if22(t.a, t.y, t.Z, dense(t.omega));
  const auto se = oracle::se2(t.a, t.y, t.Z, t.omega);
  EXPECT_NEAR(r.se, se.se, 1e-10);
  const auto s = if22(t.a, t.a, t.Z, dense(t.omega));
  EXPECT_NEAR(s.se, oracle::se2(t.a, t.a, t.Z, t.omega).se, 1e-10);
}

TEST(If22, Symmetry) {
  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = oracle::random_instance(gen, 15, 3);
    const auto g = dense(t.omega);
    EXPECT_EQ(if22(t.a, t.y, t.Z, GramOperator::identity(3)).estimate,
              if22(t.y, t.a, t.Z, GramOperator::identity(3)).estimate);
    EXPECT_NEAR(if22(t.a, t.y, t.Z, g).estimate, if22(t.y, t.a, t.Z, g).estimate, 1e-14);
  }
}

TEST(If22, IncompleteVarianceKeepsEstimate) {
  std::mt19937_64 gen(6);
  const auto t = oracle::random_instance(gen, 200, 4);
  UStatOptions inc;
  inc.variance = VarianceMode::incomplete;
  const auto a = if22(t.a, t.y, t.Z, dense(t.omega));
  const auto b = if22(t.a, t.y, t.Z, dense(t.omega), inc);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(b.diagnostics.at("incomplete_variance"), 1.0);
  EXPECT_EQ(a.diagnostics.at("var_linear"), b.diagnostics.at("var_linear"));
  // lag-pair mean of K^2 is an unbiased subsample of the full mean: same order
  EXPECT_GT(b.diagnostics.at("var_degenerate"), 0.2 * a.diagnostics.at("var_degenerate"));
  EXPECT_LT(b.diagnostics.at("var_degenerate"), 5.0 * a.diagnostics.at("var_degenerate"));
}

TEST(If22, NaiveBudget) {
  const long n = 70000;
  EXPECT_THROW(if22_naive(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, 1),
                          GramOperator::identity(1)),
               BudgetError);
}

TEST(If33, MatchesTripleLoopAndSe) {
  std::mt19937_64 gen(77);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 1 + rep % 5;
    const int n = 3 + static_cast<int>(gen() % 23);
    const auto t = oracle::random_instance(gen, n, k);
    const auto r = if22_to_33(t.a, t.y, t.Z, dense(t.omega, GramKind::empirical));
    const double ref = oracle::if33(t.a, t.y, t.Z, t.omega);
    ASSERT_NEAR(r.estimate, ref, tol(ref)) << "n=" << n << " k=" << k;
    const double ref_t3 = oracle::t3(t.a, t.y, t.Z, t.omega);
    ASSERT_NEAR(r.diagnostics.at("t3"), ref_t3, tol(ref_t3));
    if (n >= 4 && rep % 4 == 0) {
      const double se = oracle::se3(t.a, t.y, t.Z, t.omega);
      ASSERT_NEAR(r.se, se, tol(se)) << "n=" << n << " k=" << k;
    }
  }
}

TEST(If33, SampleGramReducesT3) {
  // With Ohat = Z'Z/n the sum over the middle index collapses: over distinct
  // triples T3 = sum_{i != l} a_i G_il (G_ii + G_ll - 2) y_l / (n(n-1)(n-2)),
  // so it vanishes only in the V-statistic form that keeps coincident indices.
  std::mt19937_64 gen(12);
  std::normal_distribution<double> N;
  const int n = 30, k = 3;
  Eigen::MatrixXd Z(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) Z(i, j) = N(gen);
  const Eigen::MatrixXd O = Z.transpose() * Z / n;
  Eigen::VectorXd a(n), y(n);
  for (int i = 0; i < n; ++i) a[i] = N(gen), y[i] = N(gen);
  const auto r = if22_to_33(a, y, Z, dense(O, GramKind::empirical));
  const Eigen::MatrixXd G = Z * O.inverse() * Z.transpose();
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l)
      if (i != l) s += a[i] * G(i, l) * (G(i, i) + G(l, l) - 2.0) * y[l];
  const double t3 = s / (n * (n - 1.0) * (n - 2.0));
  EXPECT_NEAR(r.diagnostics.at("t3"), t3, 1e-10);
  EXPECT_NEAR(r.diagnostics.at("if22"), if22(a, y, Z, dense(O)).estimate, 1e-12);
}

TEST(If33, ZeroResidualAndSmallN) {
  std::mt19937_64 gen(1);
  const auto t = oracle::random_instance(gen, 8, 2);
  const auto r = if22_to_33(t.a, Eigen::VectorXd::Zero(8), t.Z, dense(t.omega, GramKind::empirical));
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_THROW(if22_to_33(t.a.head(2), t.y.head(2), t.Z.topRows(2), dense(t.omega)), InsufficientDataError);
}

TEST(FitFhat, Examples) {
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(4, 1);
  EXPECT_EQ(fit_fhat(Eigen::VectorXd::Zero(4), Z, GramOperator::identity(1))[0], 0.0);
  const Eigen::Vector4d r(0.1, 0.5, 0.2, 0.4);
  EXPECT_NEAR(fit_fhat(r, Z, GramOperator::identity(1))[0], 0.3, 1e-15);
  std::mt19937_64 gen(9);
  const auto t = oracle::random_instance(gen, 20, 4);
  const Eigen::VectorXd beta = fit_fhat(t.a, t.Z, dense(t.omega));
  const Eigen::VectorXd ref = t.omega.fullPivLu().solve(t.Z.transpose() * t.a / 20.0);
  EXPECT_LT((beta - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kbw, Examples) {
  const Eigen::Vector2d one(1.0, 1.0);
  const Eigen::MatrixXd F = Eigen::MatrixXd::Ones(2, 1);
  EXPECT_DOUBLE_EQ(if22_kbw(one, one, F, GramOperator::identity(1, GramKind::custom)).estimate, 1.0);
  EXPECT_THROW(if22_kbw(one, one, Eigen::MatrixXd::Zero(2, 1), GramOperator::identity(1, GramKind::custom)),
               DegenerateAggregateError);
  EXPECT_THROW(kbw_omega(Eigen::MatrixXd::Zero(3, 1), GramOperator::identity(3)), DegenerateAggregateError);
  // two identical directions: Omega_f rank one
  EXPECT_THROW(kbw_omega(Eigen::MatrixXd::Ones(3, 2), GramOperator::identity(3)), DegenerateAggregateError);
}

TEST(Kbw, MatchesDoubleLoop) {
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 1 + rep % 5;
    const int n = 3 + static_cast<int>(gen() % 23);
    const auto t = oracle::random_instance(gen, n, m);
    const auto r = if22_kbw(t.a, t.y, t.Z, dense(t.omega, GramKind::custom));
    const double ref = oracle::if22(t.a, t.y, t.Z, t.omega);
    ASSERT_NEAR(r.estimate, ref, tol(ref));
    const auto se = oracle::se2(t.a, t.y, t.Z, t.omega);
    ASSERT_NEAR(r.se, se.se, tol(se.se));
    EXPECT_EQ(r.kernel_kind, KernelKind::kbw);
  }
}

TEST(Kbw, OmegaFromCoefficients) {
  std::mt19937_64 gen(2);
  const auto t = oracle::random_instance(gen, 10, 4);
  Eigen::MatrixXd B = t.Z.topRows(4).transpose().leftCols(2);
  const auto of = kbw_omega(B, dense(t.omega));
  EXPECT_LT((of.matrix() - B.transpose() * t.omega * B).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kbw, DiagnosticsZeroWhenNoSignal) {
  // p_hat = p and f == 0: Delta_num = 0 - 0
  std::mt19937_64 gen(3);
  const auto t = oracle::random_instance(gen, 12, 3);
  const auto d = kbw_diagnostics(t.a, t.Z, GramOperator::identity(3), Eigen::VectorXd::Zero(3),
                                 Eigen::VectorXd::Zero(3), 0.0);
  EXPECT_EQ(d.delta_num, 0.0);
  EXPECT_EQ(d.conditional_mean, 0.0);
  // Delta_denom = if22_sel - bias + (1/n^2) sum r^2 z'z, both readings equal under identity
  const double n = 12.0;
  double diag = 0.0;
  for (int i = 0; i < 12; ++i) diag += t.a[i] * t.a[i] * t.Z.row(i).squaredNorm();
  const double ref = oracle::if22(t.a, t.a, t.Z, Eigen::MatrixXd::Identity(3, 3)) + diag / (n * n);
  EXPECT_NEAR(d.delta_denom, ref, 1e-12);
  EXPECT_NEAR(d.delta_denom_literal, ref, 1e-12);
}

TEST(Kbw, DiagnosticsWithGram) {
  std::mt19937_64 gen(13);
  const auto t = oracle::random_instance(gen, 15, 3);
  const Eigen::VectorXd bt = Eigen::Vector3d(0.2, -0.1, 0.3);
  const Eigen::VectorXd bh = Eigen::Vector3d(0.1, 0.1, 0.2);
  const double bias = 0.05;
  const auto d = kbw_diagnostics(t.a, t.Z, dense(t.omega), bh, bt, bias);
  const double n = 15.0;
  const double s = (bt.transpose() * t.Z.transpose() * t.a)(0, 0) / n;
  EXPECT_NEAR(d.delta_num, s * s - bias * bias, 1e-12);
  const Eigen::MatrixXd oi = t.omega.inverse();
  double diag_inv = 0.0, diag_plain = 0.0;
  for (int i = 0; i < 15; ++i) {
    diag_inv += t.a[i] * t.a[i] * (t.Z.row(i) * oi * t.Z.row(i).transpose())(0, 0);
    diag_plain += t.a[i] * t.a[i] * t.Z.row(i).squaredNorm();
  }
  const double i22 = oracle::if22(t.a, t.a, t.Z, t.omega);
  EXPECT_NEAR(d.delta_denom, i22 - bias + diag_inv / (n * n), 1e-10);
  EXPECT_NEAR(d.delta_denom_literal, i22 - bias + diag_plain / (n * n), 1e-10);
  const double cross = bt.dot(t.omega * bh), fh2 = bh.dot(t.omega * bh);
  EXPECT_NEAR(d.conditional_mean, cross * cross / fh2, 1e-12);
  EXPECT_NEAR(d.ratio, (bias * bias + d.delta_num) / (bias + d.delta_denom), 1e-12);
}
