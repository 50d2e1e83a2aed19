#pragma once

#include "hoifkit/dataset.hpp"
#include "hoifkit/field.hpp"
#include "hoifkit/gram.hpp"
#include "hoifkit/hoif.hpp"
#include "hoifkit/quadrature.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>

namespace hoifkit {

enum class Noise { gaussian, bernoulli };

std::string_view to_string(Noise noise);
Noise parse_noise(std::string_view name);

/// Sieve model p_theta(x) = p_hat(x) + theta' z(x) with unit-variance Gaussian
/// noise (or Bernoulli, where only the chi-square projection is offered).
struct SieveModel {
  BasisDict basis;
  Field p_hat;
  Noise noise = Noise::gaussian;
  GramOperator gram;  ///< exact Gram under `density`
  Density density;

  static SieveModel make(BasisDict basis, Field p_hat, Noise noise, const Density& density,
                         const GramOptions& gram_options = {});
};

/// psi(theta) = c0 + linear' theta + theta' quad theta  with  c0 = int p_hat^2 g,
/// linear = 2 int p_hat z g, quad = Omega_k.
struct QuadraticFunctional {
  double c0 = 0.0;
  Eigen::VectorXd linear;
  Eigen::MatrixXd quad;
};

QuadraticFunctional make_quadratic_functional(const SieveModel& model, int quad_points = 200);
double psi_value(const Eigen::Ref<const Eigen::VectorXd>& theta, const QuadraticFunctional& qf);

/// {theta : (theta - center)' shape (theta - center) <= radius2}.
struct Ellipsoid {
  Eigen::VectorXd center;
  GramOperator shape;  ///< (1/n2) Z2'Z2
  double radius2 = 0.0;
  long n2 = 0;
  double rss_center = 0.0;  ///< RSS_{D2}(center)
  bool negative_radius = false;

  double distance2(const Eigen::Ref<const Eigen::VectorXd>& theta) const;
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& theta) const { return distance2(theta) <= radius2; }
};

/// theta_tilde = Omega^{-1} int z (p - p_hat) g (KL projection for Gaussian
/// noise, chi-square projection for Bernoulli noise).
Eigen::VectorXd kl_projection_oracle(const Field& true_p, const SieveModel& model, int quad_points = 200);

/// Least-squares coefficient of A - p_hat(X) on z(X) within D1.
Eigen::VectorXd split_mle(const Sample& d1, const SieveModel& model);

/// RSS_{D2}(sum) residual sum of squares of A - p_theta(X).
double rss(const Sample& d2, const SieveModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Split likelihood-ratio set RSS_{D2}(theta) <= RSS_{D2}(theta_hat_D1) + 2 log(1/alpha),
/// written as an ellipsoid around the D2 least-squares fit. In per-observation
/// units the slack is (2/n2) log(1/alpha) with n2 = |D2|.
Ellipsoid confidence_set(const Sample& d2, const SieveModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta_hat_d1,
                         double alpha);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi - lo; }
  bool contains(double v, double slack = 0.0) const noexcept { return v >= lo - slack && v <= hi + slack; }
};

/// Exact range of psi over the ellipsoid via the trust-region subproblem.
/// Throws DegenerateError if radius2 < 0.
Interval plugin_interval(const Ellipsoid& ell, const QuadraticFunctional& qf);

struct ProfileResult {
  Interval interval;
  bool unimodal = true;       ///< constrained-min RSS decreasing then increasing on the scan
  bool disconnected = false;  ///< scan found more than one run of accepted levels
  int evaluations = 0;
};

/// Levels phi whose minimal RSS on {psi(theta) = phi} stays within the set's
/// threshold, found by bisection from a bracket of four times the plug-in width.
ProfileResult profile_interval(const Ellipsoid& ell, const QuadraticFunctional& qf);
ProfileResult profile_interval(const Sample& d2, const SieveModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& theta_hat_d1, const QuadraticFunctional& qf,
                               double alpha);

struct LengthBound {
  double full = 0.0;       ///< (1 - alpha) |psi(theta_hat) - psi(theta_tilde)|
  double displayed = 0.0;  ///< (1 - alpha) |(theta_hat - theta_tilde)' Omega (theta_hat + theta_tilde)|
};

LengthBound length_lower_bound(const Eigen::Ref<const Eigen::VectorXd>& theta_hat,
                               const Eigen::Ref<const Eigen::VectorXd>& theta_tilde, const QuadraticFunctional& qf,
                               double alpha);

/// Center psi1 - IF22, half-width z_{alpha/2} sqrt(se(psi1)^2 + se(IF22)^2).
Interval hoif_wald_interval(const UStatResult& psi1, const UStatResult& if22, double alpha);

struct QuadraticHoif {
  UStatResult psi1;  ///< c0 + P_n[2 Pi[p_hat|z](X)(A - p_hat(X))]
  UStatResult if22;  ///< minus the U-statistic of r_i z_i' Omega^{-1} z_j r_j, so psi1 - if22 targets psi(theta_tilde)
};

/// HOIF estimates of psi(theta_tilde) = int p_{theta_tilde}^2 from one sample.
QuadraticHoif quadratic_hoif(const Sample& data, const SieveModel& model, const QuadraticFunctional& qf,
                             const UStatOptions& options = {});

/// Whether p_theta stays inside (0,1) on a uniform scan (Bernoulli models).
bool bernoulli_admissible(const SieveModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta, int scan_points = 1001);

}  // namespace hoifkit
