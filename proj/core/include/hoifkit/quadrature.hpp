#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hoifkit {

/// Nodes and weights of a rule on [0,1].
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [0,1]; nodes by Newton iteration on P_n.
Rule1D gauss_legendre(int points);
/// Gauss-Legendre on [a,b].
Rule1D gauss_legendre(int points, double a, double b);
/// Composite rule with one `points_per_panel` Gauss-Legendre panel between
/// consecutive breakpoints (breakpoints sorted, spanning [0,1]).
Rule1D composite_rule(std::span<const double> breakpoints, int points_per_panel);

/// Marginal density on [0,1].
struct AxisDensity {
  enum class Kind { uniform, beta };
  Kind kind = Kind::uniform;
  double a = 1.0;
  double b = 1.0;

  double pdf(double x) const;
  static AxisDensity uniform() { return {}; }
  /// Throws ConfigError unless a, b >= 1 (bounded density on [0,1]).
  static AxisDensity beta(double a, double b);
};

/// Product density g(x) = prod_a g_a(x_a) on [0,1]^d.
struct Density {
  std::vector<AxisDensity> axes;

  static Density uniform(int d);
  int dim() const noexcept { return static_cast<int>(axes.size()); }
  bool is_uniform() const noexcept;
  double pdf(std::span<const double> x) const;
  std::string describe() const;
};

/// Tensor quadrature grid on [0,1]^d with density folded into the weights:
/// sum_i weights[i] f(nodes.row(i)) approximates the integral of f g.
struct QuadGrid {
  Eigen::MatrixXd nodes;   // N x d
  Eigen::VectorXd weights;  // N

  Eigen::Index size() const noexcept { return weights.size(); }
  double integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const { return weights.dot(values); }
  double integrate(const std::function<double(std::span<const double>)>& f) const;
};

/// Tensor grid built from a per-axis composite rule.
QuadGrid tensor_grid(const Rule1D& axis_rule, const Density& density);
/// Per-axis composite rule using `breakpoints`, with about `points` nodes in
/// total per axis and at least `min_per_panel` nodes in each panel.
Rule1D axis_rule(std::span<const double> breakpoints, int points, int min_per_panel = 1);

}  // namespace hoifkit
