#pragma once

#include "hoifkit/basis.hpp"
#include "hoifkit/dataset.hpp"
#include "hoifkit/field.hpp"
#include "hoifkit/gram.hpp"
#include "hoifkit/hoif.hpp"
#include "hoifkit/quadrature.hpp"
#include "hoifkit/rng.hpp"
#include "hoifkit/universal.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>

namespace hoifkit {

enum class SignPattern { positive, alternating };

std::string_view to_string(SignPattern sign);
SignPattern parse_sign(std::string_view name);

/// p(x) = offset + amplitude * sum_{j=2}^{J} sign_j j^{-(s+1/2)} z_j(x), with z_j the
/// 1-based j-th function of `family` (so z_1 is the constant for nested families).
struct TruthSpec {
  double s = 0.25;
  int J = 400;
  double amplitude = 1.0;
  Family family = Family::fourier;
  double offset = 0.0;
  SignPattern sign = SignPattern::positive;
  int d = 1;
};

/// Throws ConfigError on s outside (0,1) or J < 1.
Field gen_truth(const TruthSpec& spec);

/// amplitude^2 sum_{j=max(k,1)+1}^{J} j^{-(1+2s)}: the squared L2 norm of the
/// truth beyond the first k functions (orthonormal families).
double l2_tail(const TruthSpec& spec, int k);

/// max |f| over a uniform lattice of about `scan_points` points.
double sup_norm(const Field& f, int d, int scan_points = 4001);

/// Throws ConfigError unless lo < p < hi on the scan lattice.
void check_probability_range(const Field& p, int d, double lo = 0.05, double hi = 0.95, int scan_points = 4001);

/// How (A, Y) are drawn given X.
///   gaussian:  A = p + e1,  Y = b + rho e1 + sqrt(1 - rho^2) e2   (cond_cov = rho)
///   bernoulli: A ~ Bern(p), Y ~ Bern(b) independently             (cond_cov = 0)
/// For cond_variance, Y = A.
struct DataModel {
  Noise noise = Noise::gaussian;
  FunctionalVariant variant = FunctionalVariant::cond_variance;
  Field p;
  Field b;  ///< ignored for cond_variance
  double rho = 0.5;
};

/// n records with X ~ Uniform([0,1]^d). Bernoulli models throw ConfigError if p
/// (or b) leaves [0,1] at a drawn point. All records start in the train split.
Dataset gen_data(long n, int d, const DataModel& model, Engine& eng);

/// Least-squares series fit of A (and Y for cond_covariance) on the first k
/// functions of `basis` within `train`. Throws PreconditionError if |train| <= k
/// and SingularGramError for a singular design.
NuisancePair fit_nuisance(const Sample& train, const BasisDict& basis, FunctionalVariant variant);

struct OracleBias {
  double bias_k = 0.0;    ///< int Pi[p_hat - p] Pi[b_hat - b] g
  double bias_inf = 0.0;  ///< int (p_hat - p)(b_hat - b) g
  double tb_k = 0.0;      ///< bias_inf - bias_k
  double proj_b2 = 0.0;   ///< int Pi[b_hat - b]^2 g
  double proj_p2 = 0.0;   ///< int Pi[p_hat - p]^2 g
  Eigen::VectorXd beta_p; ///< coefficients of Pi[p - p_hat | z_k]
};

/// Quadrature oracle for the truncated and full bias of the first-order estimator.
OracleBias oracle_bias(const Field& p, const Field& p_hat, const Field& b, const Field& b_hat, const BasisDict& basis_k,
                       const GramOperator& gram, const Density& density, int quad_points = 200);

/// Power requirement ratio: Bias_k^2 / ((k/n) E[Pi_b^2] E[Pi_p^2]) for cond_covariance,
/// E[Pi_p^2] / (k/n) for cond_variance.
double power_condition_ratio(const OracleBias& oracle, FunctionalVariant variant, int k, long n);

/// b(x) = amplitude * sum_{j=0}^{levels-1} 2^{-js} cos(2^j 2 pi x_1), Hölder of order s < 1.
Field weierstrass(double s, int levels = 20, double amplitude = 1.0);

/// Ordinary least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hoifkit
