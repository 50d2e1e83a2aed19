#pragma once

#include "hoifkit/basis.hpp"
#include "hoifkit/field.hpp"
#include "hoifkit/gram.hpp"
#include "hoifkit/quadrature.hpp"

#include <Eigen/Dense>

#include <vector>

namespace hoifkit {

/// Quadrature grid able to integrate products of the given series dictionaries:
/// panels at the union of their breakpoints and at least `quad_points` nodes
/// per axis (more when a smooth dictionary needs them).
QuadGrid integration_grid(const std::vector<const BasisDict*>& dicts, const Density& density, int quad_points);

/// m_j = integral of z_j f g. Exact coefficient lookup when f is a series (or
/// constant) in the same orthonormal family under the uniform density.
Eigen::VectorXd basis_moments(const BasisDict& basis, const Field& f, const Density& density, int quad_points = 200);

/// integral of f h g, with the same coefficient-space shortcut.
double inner_product(const Field& f, const Field& h, const Density& density, int quad_points = 200);

/// Coefficients beta of Pi[f | z_k] = z' beta, beta = Omega^{-1} integral(z f g).
Eigen::VectorXd projection_coef(const BasisDict& basis, const GramOperator& gram, const Field& f,
                                const Density& density, int quad_points = 200);

}  // namespace hoifkit
