#include "hoifkit/quadrature.hpp"

#include "hoifkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hoifkit {

Rule1D gauss_legendre(int points, double a, double b) {
  if (points < 1) throw ConfigError("quadrature: points must be >= 1");
  Rule1D rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  const int n = points;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess for the i-th root of P_n.
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 30; ++iter) {
      double p0 = 1.0;
      double p1 = t;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = t;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (t * p1 - p0) / (t * t - 1.0);
    const double w = 2.0 / ((1.0 - t * t) * dp * dp);
    rule.nodes[i] = mid - half * t;
    rule.nodes[n - 1 - i] = mid + half * t;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = mid;
  return rule;
}

Rule1D gauss_legendre(int points) { return gauss_legendre(points, 0.0, 1.0); }

Rule1D composite_rule(std::span<const double> breakpoints, int points_per_panel) {
  if (breakpoints.size() < 2) throw ConfigError("quadrature: need at least two breakpoints");
  const Rule1D base = gauss_legendre(points_per_panel);
  Rule1D rule;
  rule.nodes.reserve((breakpoints.size() - 1) * points_per_panel);
  rule.weights.reserve(rule.nodes.capacity());
  for (std::size_t p = 0; p + 1 < breakpoints.size(); ++p) {
    const double a = breakpoints[p];
    const double b = breakpoints[p + 1];
    if (!(b > a)) continue;
    for (int i = 0; i < points_per_panel; ++i) {
      rule.nodes.push_back(a + (b - a) * base.nodes[i]);
      rule.weights.push_back((b - a) * base.weights[i]);
    }
  }
  return rule;
}

Rule1D axis_rule(std::span<const double> breakpoints, int points, int min_per_panel) {
  const int panels = std::max<int>(1, static_cast<int>(breakpoints.size()) - 1);
  const int per_panel = std::max(min_per_panel, (points + panels - 1) / panels);
  return composite_rule(breakpoints, std::max(1, per_panel));
}

double AxisDensity::pdf(double x) const {
  if (kind == Kind::uniform) return 1.0;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  if (x <= 0.0) return a == 1.0 ? std::exp(-log_beta) : 0.0;
  if (x >= 1.0) return b == 1.0 ? std::exp(-log_beta) : 0.0;
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta);
}

AxisDensity AxisDensity::beta(double a, double b) {
  if (!(a >= 1.0 && b >= 1.0)) {
    throw ConfigError("density: beta parameters must satisfy a >= 1 and b >= 1 (bounded density)");
  }
  return {Kind::beta, a, b};
}

Density Density::uniform(int d) { return Density{std::vector<AxisDensity>(static_cast<std::size_t>(d))}; }

bool Density::is_uniform() const noexcept {
  return std::all_of(axes.begin(), axes.end(), [](const AxisDensity& g) {
    return g.kind == AxisDensity::Kind::uniform || (g.a == 1.0 && g.b == 1.0);
  });
}

double Density::pdf(std::span<const double> x) const {
  double v = 1.0;
  for (std::size_t a = 0; a < axes.size(); ++a) v *= axes[a].pdf(x[a]);
  return v;
}

std::string Density::describe() const {
  if (is_uniform()) return "uniform(d=" + std::to_string(dim()) + ")";
  std::string s = "product(";
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (a) s += ",";
    s += axes[a].kind == AxisDensity::Kind::uniform
             ? std::string("uniform")
             : "beta(" + std::to_string(axes[a].a) + "," + std::to_string(axes[a].b) + ")";
  }
  return s + ")";
}

QuadGrid tensor_grid(const Rule1D& rule, const Density& density) {
  const int d = density.dim();
  const Eigen::Index m = static_cast<Eigen::Index>(rule.nodes.size());
  Eigen::Index total = 1;
  for (int a = 0; a < d; ++a) total *= m;
  QuadGrid grid;
  grid.nodes.resize(total, d);
  grid.weights.resize(total);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d), 0);
  for (Eigen::Index r = 0; r < total; ++r) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      const double x = rule.nodes[idx[a]];
      grid.nodes(r, a) = x;
      w *= rule.weights[idx[a]] * density.axes[a].pdf(x);
    }
    grid.weights[r] = w;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < m) break;
      idx[a] = 0;
    }
  }
  return grid;
}

double QuadGrid::integrate(const std::function<double(std::span<const double>)>& f) const {
  double acc = 0.0;
  std::vector<double> x(static_cast<std::size_t>(nodes.cols()));
  for (Eigen::Index r = 0; r < size(); ++r) {
    for (Eigen::Index a = 0; a < nodes.cols(); ++a) x[a] = nodes(r, a);
    acc += weights[r] * f(x);
  }
  return acc;
}

}  // namespace hoifkit
