#pragma once

#include <Eigen/Dense>

namespace hoifkit {

struct TrsSolution {
  Eigen::VectorXd u;        ///< optimizer (coordinates of the problem it was solved in)
  double value = 0.0;       ///< objective at u
  double multiplier = 0.0;  ///< Lagrange multiplier of the ball constraint
  bool boundary = false;    ///< ||u||^2 = r2
  bool hard_case = false;
  int iterations = 0;
};

/// Quadratic q(u) = c + g'u + u'Hu with H symmetric, stored in the eigenbasis
/// of H. Solves the trust-region subproblems over {||u||^2 <= r2} and the
/// minimum-norm level-set problem used by profile intervals.
class BallQuadratic {
 public:
  BallQuadratic(double c, const Eigen::VectorXd& g, const Eigen::MatrixXd& H);

  int size() const noexcept { return static_cast<int>(lambda_.size()); }
  double value(const Eigen::VectorXd& u) const;  ///< u in original coordinates
  const Eigen::VectorXd& eigenvalues() const noexcept { return lambda_; }

  /// Global minimum over the ball; the optimizer is returned in original coordinates.
  TrsSolution minimize(double r2) const;
  /// Global maximum over the ball (hard case handled).
  TrsSolution maximize(double r2) const;

  /// Smallest ||u||^2 with q(u) = phi. Requires H positive definite.
  /// Returns +infinity when phi lies below the unconstrained minimum of q.
  double min_norm_at_level(double phi) const;
  /// Unconstrained minimum of q (H positive definite) and its squared norm.
  double unconstrained_min() const noexcept { return q_min_; }
  double unconstrained_min_norm2() const noexcept { return u_star_norm2_; }
  double center_value() const noexcept { return c_; }

 private:
  // min over the ball of ghat'w + w' diag(lam) w, in eigen coordinates.
  static TrsSolution solve_diag(const Eigen::VectorXd& lam, const Eigen::VectorXd& ghat, double r2);

  double c_ = 0.0;
  Eigen::VectorXd lambda_;  // ascending
  Eigen::MatrixXd V_;       // eigenvectors (columns)
  Eigen::VectorXd ghat_;    // V' g
  double q_min_ = 0.0;
  double u_star_norm2_ = 0.0;
  bool positive_definite_ = false;
};

}  // namespace hoifkit
