#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hoifkit {

enum class Family { fourier, legendre, bspline, haar, monomial };

std::string_view to_string(Family family);
/// Throws ConfigError on an unknown name.
Family parse_family(std::string_view name);
/// Families that are orthonormal on [0,1] under the uniform density.
bool is_orthonormal(Family family);

struct BasisOptions {
  int order = 4;  ///< B-spline order (degree + 1); ignored by other families
};

/// A nested dictionary of k basis functions on [0,1]^d.
///
/// One-dimensional sequences (0-based index j):
///   fourier   1, sqrt2 cos(2 pi x), sqrt2 sin(2 pi x), sqrt2 cos(4 pi x), ...
///   legendre  sqrt(2j+1) P_j(2x-1)
///   haar      1, then psi_{l,m}(x) = 2^{l/2} psi(2^l x - m) for j = 2^l + m
///   monomial  x^j
///   bspline   k B-splines of the given order on uniform knots (not nested)
///
/// For d > 1 the dictionary holds tensor products of the 1-D sequence, taking
/// the k multi-indices of lowest total index and breaking ties lexicographically.
/// B-splines in d > 1 require k = m^d (the full tensor grid).
///
/// Immutable after construction; evaluation is pure.
class BasisDict {
 public:
  BasisDict() = default;  ///< empty placeholder; use make()
  /// Throws ConfigError naming the violated constraint.
  static BasisDict make(Family family, int k, int d = 1, BasisOptions options = {});

  Family family() const noexcept { return family_; }
  int size() const noexcept { return k_; }
  int dim() const noexcept { return d_; }
  int order() const noexcept { return order_; }
  /// Length of the 1-D sequence needed on each axis.
  int axis_size() const noexcept { return axis_size_; }
  /// Per-axis 1-D indices of function j.
  std::span<const int> multi_index(int j) const;

  /// Z[i, j] = z_j(X_i). Throws DomainError naming the first row outside [0,1]^d.
  Eigen::MatrixXd eval(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
  /// Evaluate all k functions at one point (no domain check).
  void eval_point(std::span<const double> x, std::span<double> out) const;
  /// First axis_size() functions of the 1-D sequence at x.
  void eval_axis(double x, std::span<double> out) const;

  /// sum_j coef_j z_j(X_i) for every row, without materializing Z.
  Eigen::VectorXd combine(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXd>& coef) const;
  /// sum_i w_i z(X_i), without materializing Z.
  Eigen::VectorXd moments(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXd>& w) const;

  /// Panel boundaries on [0,1] (including 0 and 1) between which every 1-D
  /// function is smooth. Used to build composite quadrature rules.
  std::vector<double> breakpoints() const;

  /// Human-readable identifier, e.g. "fourier(k=8,d=1)".
  std::string describe() const;

 private:
  void check_domain(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

  Family family_ = Family::fourier;
  int k_ = 0;
  int d_ = 1;
  int order_ = 0;
  int axis_size_ = 0;
  std::vector<int> index_;  // k x d, row-major
  std::vector<double> knots_;  // bspline only
};

}  // namespace hoifkit
