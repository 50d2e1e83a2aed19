#include "hoifkit/projection.hpp"

#include "hoifkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace hoifkit {

namespace {

bool coefficient_space(const BasisDict& basis, const Field& f, const Density& density) {
  if (!density.is_uniform() || !is_orthonormal(basis.family())) return false;
  if (f.is_constant()) return true;
  return f.is_series() && f.basis().family() == basis.family() && f.basis().dim() == basis.dim();
}

// Full coefficient vector (offset folded into the constant function z_0).
Eigen::VectorXd full_coef(const Field& f) {
  Eigen::VectorXd c = f.is_series() ? f.coef() : Eigen::VectorXd::Zero(1);
  if (c.size() == 0) c = Eigen::VectorXd::Zero(1);
  c[0] += f.offset();
  return c;
}

}  // namespace

QuadGrid integration_grid(const std::vector<const BasisDict*>& dicts, const Density& density, int quad_points) {
  std::vector<double> breaks{0.0, 1.0};
  int smooth_need = 0;
  int min_per_panel = 1;
  for (const BasisDict* b : dicts) {
    if (!b) continue;
    const auto bp = b->breakpoints();
    breaks.insert(breaks.end(), bp.begin(), bp.end());
    switch (b->family()) {
      case Family::fourier:
      case Family::legendre:
      case Family::monomial: smooth_need += 2 * b->axis_size(); break;
      case Family::bspline: min_per_panel = std::max(min_per_panel, b->order() + 2); break;
      case Family::haar: break;
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(), [](double x, double y) { return std::abs(x - y) < 1e-15; }),
               breaks.end());
  const int points = std::max(quad_points, smooth_need + 32);
  const Rule1D rule = axis_rule(breaks, points, min_per_panel);
  return tensor_grid(rule, density);
}

Eigen::VectorXd basis_moments(const BasisDict& basis, const Field& f, const Density& density, int quad_points) {
  if (density.dim() != basis.dim()) throw DimensionError("basis_moments: density dimension != basis dimension");
  const int k = basis.size();
  if (coefficient_space(basis, f, density)) {
    const Eigen::VectorXd c = full_coef(f);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(k);
    const Eigen::Index common = std::min<Eigen::Index>(k, c.size());
    m.head(common) = c.head(common);
    return m;
  }
  std::vector<const BasisDict*> dicts{&basis};
  if (f.is_series()) dicts.push_back(&f.basis());
  const QuadGrid grid = integration_grid(dicts, density, quad_points);
  const Eigen::VectorXd fv = f.eval(grid.nodes);
  const Eigen::VectorXd w = grid.weights.array() * fv.array();
  const Eigen::VectorXd m = basis.moments(grid.nodes, w);
  if (!m.allFinite()) throw NumericalError("basis_moments: non-finite quadrature value");
  return m;
}

double inner_product(const Field& f, const Field& h, const Density& density, int quad_points) {
  const bool fs = f.is_series() || f.is_constant();
  const bool hs = h.is_series() || h.is_constant();
  if (fs && hs && density.is_uniform()) {
    const BasisDict* bf = f.is_series() ? &f.basis() : nullptr;
    const BasisDict* bh = h.is_series() ? &h.basis() : nullptr;
    const BasisDict* ref = bf ? bf : bh;
    const bool ok = !ref || (is_orthonormal(ref->family()) && (!bf || (bf->family() == ref->family() && bf->dim() == ref->dim())) &&
                             (!bh || (bh->family() == ref->family() && bh->dim() == ref->dim())));
    if (ok) {
      const Eigen::VectorXd cf = full_coef(f);
      const Eigen::VectorXd ch = full_coef(h);
      const Eigen::Index common = std::min(cf.size(), ch.size());
      return cf.head(common).dot(ch.head(common));
    }
  }
  std::vector<const BasisDict*> dicts;
  if (f.is_series()) dicts.push_back(&f.basis());
  if (h.is_series()) dicts.push_back(&h.basis());
  const QuadGrid grid = integration_grid(dicts, density, quad_points);
  const Eigen::VectorXd fv = f.eval(grid.nodes);
  const Eigen::VectorXd hv = h.eval(grid.nodes);
  return (grid.weights.array() * fv.array() * hv.array()).sum();
}

Eigen::VectorXd projection_coef(const BasisDict& basis, const GramOperator& gram, const Field& f,
                                const Density& density, int quad_points) {
  return gram.apply_inverse(basis_moments(basis, f, density, quad_points));
}

}  // namespace hoifkit
