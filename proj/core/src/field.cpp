#include "hoifkit/field.hpp"

#include "hoifkit/error.hpp"

#include <vector>

namespace hoifkit {

Field Field::constant(double value) {
  Field f;
  f.offset_ = value;
  return f;
}

Field Field::series(const BasisDict& basis, Eigen::VectorXd coef, double offset) {
  if (coef.size() != basis.size()) throw DimensionError("field: coefficient length != basis size");
  Field f;
  f.offset_ = offset;
  f.basis_ = std::make_shared<const BasisDict>(basis);
  f.coef_ = std::move(coef);
  return f;
}

Field Field::callable(Callable fn) {
  Field f;
  f.fn_ = std::make_shared<const Callable>(std::move(fn));
  return f;
}

namespace {

bool nested_family(Family f) { return f != Family::bspline; }

}  // namespace

Field Field::combine(const Field& f, double a, const Field& h, double b) {
  if (f.is_constant() && h.is_constant()) return constant(a * f.offset_ + b * h.offset_);
  if (f.is_series() && h.is_constant()) return series(*f.basis_, a * f.coef_, a * f.offset_ + b * h.offset_);
  if (f.is_constant() && h.is_series()) return series(*h.basis_, b * h.coef_, a * f.offset_ + b * h.offset_);
  if (f.is_series() && h.is_series()) {
    const BasisDict& bf = *f.basis_;
    const BasisDict& bh = *h.basis_;
    const bool same_family = bf.family() == bh.family() && bf.dim() == bh.dim();
    const bool compatible =
        same_family && (nested_family(bf.family()) || (bf.size() == bh.size() && bf.order() == bh.order()));
    if (compatible) {
      const BasisDict& big = bf.size() >= bh.size() ? bf : bh;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(big.size());
      c.head(bf.size()) += a * f.coef_;
      c.head(bh.size()) += b * h.coef_;
      return series(big, std::move(c), a * f.offset_ + b * h.offset_);
    }
  }
  return callable([f, a, h, b](std::span<const double> x) { return a * f(x) + b * h(x); });
}

const BasisDict& Field::basis() const {
  if (!basis_) throw PreconditionError("field: not a series field");
  return *basis_;
}

double Field::operator()(std::span<const double> x) const {
  if (fn_) return (*fn_)(x);
  if (!basis_) return offset_;
  std::vector<double> z(static_cast<std::size_t>(basis_->size()));
  basis_->eval_point(x, z);
  double v = offset_;
  for (std::size_t j = 0; j < z.size(); ++j) v += coef_[static_cast<Eigen::Index>(j)] * z[j];
  return v;
}

Eigen::VectorXd Field::eval(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  if (basis_) {
    Eigen::VectorXd v = basis_->combine(X, coef_);
    v.array() += offset_;
    return v;
  }
  if (!fn_) return Eigen::VectorXd::Constant(X.rows(), offset_);
  Eigen::VectorXd v(X.rows());
  std::vector<double> x(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index a = 0; a < X.cols(); ++a) x[a] = X(i, a);
    v[i] = (*fn_)(x);
  }
  return v;
}

}  // namespace hoifkit
