#pragma once

#include "hoifkit/basis.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>

namespace hoifkit {

/// A real function on [0,1]^d: a constant, a finite series offset + sum_j c_j z_j,
/// or an arbitrary callable. Cheap to copy; immutable.
class Field {
 public:
  using Callable = std::function<double(std::span<const double>)>;

  Field() = default;  ///< identically zero
  static Field constant(double value);
  static Field series(const BasisDict& basis, Eigen::VectorXd coef, double offset = 0.0);
  static Field callable(Callable f);
  /// a f + b h. Series in the same nested family combine coefficient-wise
  /// (so coefficient-space oracles stay available); otherwise a callable.
  static Field combine(const Field& f, double a, const Field& h, double b);

  bool is_constant() const noexcept { return !basis_ && !fn_; }
  bool is_series() const noexcept { return static_cast<bool>(basis_); }
  double offset() const noexcept { return offset_; }
  /// Series dictionary and coefficients (series fields only).
  const BasisDict& basis() const;
  const Eigen::VectorXd& coef() const noexcept { return coef_; }

  double operator()(std::span<const double> x) const;
  /// Row-wise evaluation. Series fields share the domain check of BasisDict.
  Eigen::VectorXd eval(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

 private:
  double offset_ = 0.0;
  std::shared_ptr<const BasisDict> basis_;
  Eigen::VectorXd coef_;
  std::shared_ptr<const Callable> fn_;
};

}  // namespace hoifkit
