#pragma once

#include "hoifkit/basis.hpp"
#include "hoifkit/quadrature.hpp"

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <string>

namespace hoifkit {

enum class GramKind { exact, empirical, custom };
/// `identity` operators skip factorization and whitening entirely.
enum class GramStructure { dense, identity };

std::string_view to_string(GramKind kind);

struct GramDiagnostics {
  GramKind kind = GramKind::exact;
  int k = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double cond = 0.0;
  double ridge = 0.0;
  std::string source;  // density description or sample label
  long n_used = 0;     // empirical only
};

/// Symmetric positive-definite k x k operator with a stored Cholesky factor.
/// Immutable; copies share the factorization.
class GramOperator {
 public:
  GramOperator() = default;  ///< empty (k = 0) placeholder
  /// Exact identity (orthonormal family under its reference density).
  static GramOperator identity(int k, GramKind kind = GramKind::exact, std::string source = "identity");
  /// Symmetrizes, adds `ridge` to the diagonal, and factorizes.
  /// Throws SingularGramError if the factorization fails or a pivot is
  /// negligible relative to the largest diagonal entry.
  static GramOperator from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& matrix, GramKind kind,
                                  std::string source, double ridge = 0.0, long n_used = 0);

  int size() const noexcept { return k_; }
  GramKind kind() const noexcept { return kind_; }
  GramStructure structure() const noexcept { return structure_; }
  bool is_identity() const noexcept { return structure_ == GramStructure::identity; }
  double ridge() const noexcept { return ridge_; }
  long n_used() const noexcept { return n_used_; }
  const std::string& source() const noexcept { return source_; }

  /// Dense matrix (materialized for the identity structure).
  Eigen::MatrixXd matrix() const;
  /// Omega V.
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& V) const;
  /// Omega^{-1} V via the stored factor.
  Eigen::MatrixXd apply_inverse(const Eigen::Ref<const Eigen::MatrixXd>& V) const;
  /// Rows of Z mapped to the whitened frame: Q = Z L^{-T}, so that
  /// q_i' q_j = z_i' Omega^{-1} z_j. Identity structure returns Z unchanged.
  Eigen::MatrixXd whiten(const Eigen::Ref<const Eigen::MatrixXd>& Z) const;
  void whiten_in_place(Eigen::MatrixXd& Z) const;
  /// L^{-1} v for a k-vector (column form of whiten).
  Eigen::VectorXd whiten_vector(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  /// v' Omega^{-1} v.
  double inverse_quadratic(const Eigen::Ref<const Eigen::VectorXd>& v) const;

  /// Eigenvalue diagnostics; O(k^3) for dense operators, computed on demand.
  GramDiagnostics diagnostics() const;

 private:
  struct Factor;

  int k_ = 0;
  GramKind kind_ = GramKind::exact;
  GramStructure structure_ = GramStructure::identity;
  double ridge_ = 0.0;
  long n_used_ = 0;
  std::string source_;
  std::shared_ptr<const Factor> factor_;
};

struct GramOptions {
  int quad_points = 200;        ///< nodes per axis
  bool allow_analytic = true;   ///< identity for orthonormal families under uniform density
  double ridge = 0.0;
  double guard_tol = 1e-8;      ///< convergence guard tolerance (relative to max |entry|)
};

/// Omega_k = E_g[z z'] by composite Gauss-Legendre quadrature. For d > 1 the
/// tensor product structure of both dictionary and density reduces the tensor
/// rule to products of 1-D Gram entries. The result is checked against a
/// reference rule (200 nodes, or 100 when quad_points = 200).
/// Throws NumericalError on non-finite entries or a failed convergence guard.
GramOperator exact_gram(const BasisDict& dict, const Density& density, const GramOptions& options = {});

/// Dense quadrature Gram without guard or analytic shortcut (building block).
Eigen::MatrixXd quadrature_gram(const BasisDict& dict, const Density& density, int quad_points);

/// (1/n) Z'Z. Throws PreconditionError if n <= k.
GramOperator empirical_gram(const Eigen::Ref<const Eigen::MatrixXd>& Z, std::string source = "train",
                            double ridge = 0.0);

struct SwThresholds {
  double lambda_min_floor = 1e-3;
  double lambda_max_ceiling = std::numeric_limits<double>::infinity();
  double b_ceiling = std::numeric_limits<double>::infinity();
  double nuisance_bound = std::numeric_limits<double>::infinity();
  int scan_points = 100000;
};

struct ConditionReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double cond = 0.0;
  double sup_zz = 0.0;       ///< max over the scan of z(x)'z(x)
  double b_constant = 0.0;   ///< sup_zz / k
  long scan_size = 0;
  bool empty_scan = false;   ///< warning: no scan points, B reported as 0
  bool eigen_pass = false;
  bool b_pass = false;
  bool nuisance_pass = true;
  bool pass = false;
};

/// Condition SW report: Gram spectrum, sup of z'z over a fixed lattice scan of
/// about `scan_points` points, and optional nuisance sup-norm bounds.
ConditionReport check_condition_sw(const BasisDict& dict, const GramOperator& gram,
                                   const SwThresholds& thresholds = {},
                                   std::span<const double> nuisance_sups = {});

}  // namespace hoifkit
