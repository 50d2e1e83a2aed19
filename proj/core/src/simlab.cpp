#include "hoifkit/simlab.hpp"

#include "hoifkit/error.hpp"
#include "hoifkit/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hoifkit {

std::string_view to_string(SignPattern sign) { return sign == SignPattern::alternating ? "alternating" : "positive"; }

SignPattern parse_sign(std::string_view name) {
  if (name == "positive") return SignPattern::positive;
  if (name == "alternating") return SignPattern::alternating;
  throw ConfigError("truth.sign: unknown pattern '" + std::string(name) + "' (expected positive|alternating)");
}

Field gen_truth(const TruthSpec& spec) {
  if (!(spec.s > 0.0 && spec.s < 1.0)) throw ConfigError("truth.s: must lie in (0,1)");
  if (spec.J < 1) throw ConfigError("truth.J: must be >= 1");
  if (spec.amplitude == 0.0 || spec.J == 1) return Field::constant(spec.offset);
  const BasisDict basis = BasisDict::make(spec.family, spec.J, spec.d);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(spec.J);
  for (int j = 2; j <= spec.J; ++j) {
    const double sign = spec.sign == SignPattern::alternating && j % 2 == 1 ? -1.0 : 1.0;
    coef[j - 1] = sign * spec.amplitude * std::pow(static_cast<double>(j), -(spec.s + 0.5));
  }
  return Field::series(basis, std::move(coef), spec.offset);
}

double l2_tail(const TruthSpec& spec, int k) {
  double tail = 0.0;
  // Summed from the smallest term up for accuracy.
  for (int j = spec.J; j > std::max(k, 1); --j) tail += std::pow(static_cast<double>(j), -(1.0 + 2.0 * spec.s));
  return spec.amplitude * spec.amplitude * tail;
}

namespace {

Eigen::MatrixXd scan_lattice(int d, int scan_points) {
  const long per_axis =
      d == 1 ? scan_points : std::max(2L, static_cast<long>(std::floor(std::pow(scan_points, 1.0 / d))));
  long total = 1;
  for (int a = 0; a < d; ++a) total *= per_axis;
  Eigen::MatrixXd X(total, d);
  std::vector<long> idx(static_cast<std::size_t>(d), 0);
  for (long r = 0; r < total; ++r) {
    for (int a = 0; a < d; ++a) X(r, a) = static_cast<double>(idx[a]) / static_cast<double>(per_axis - 1);
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < per_axis) break;
      idx[a] = 0;
    }
  }
  return X;
}

}  // namespace

double sup_norm(const Field& f, int d, int scan_points) {
  return f.eval(scan_lattice(d, scan_points)).cwiseAbs().maxCoeff();
}

void check_probability_range(const Field& p, int d, double lo, double hi, int scan_points) {
  const Eigen::VectorXd v = p.eval(scan_lattice(d, scan_points));
  if (v.minCoeff() <= lo || v.maxCoeff() >= hi)
    throw ConfigError("truth: Bernoulli mean leaves (" + std::to_string(lo) + ", " + std::to_string(hi) +
                      ") on the scan grid (range " + std::to_string(v.minCoeff()) + " .. " +
                      std::to_string(v.maxCoeff()) + ")");
}

Dataset gen_data(long n, int d, const DataModel& model, Engine& eng) {
  if (n < 1) throw ConfigError("n: must be >= 1");
  if (d < 1) throw ConfigError("d: must be >= 1");
  Eigen::MatrixXd X(n, d);
  for (long i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) X(i, a) = uniform01(eng);
  const Eigen::VectorXd p = model.p.eval(X);
  const bool cov = model.variant == FunctionalVariant::cond_covariance;
  const Eigen::VectorXd b = cov ? model.b.eval(X) : Eigen::VectorXd();
  Eigen::VectorXd A(n);
  Eigen::VectorXd Y(n);
  if (model.noise == Noise::gaussian) {
    if (cov && !(std::abs(model.rho) <= 1.0)) throw ConfigError("model.rho: must lie in [-1,1]");
    const double rest = std::sqrt(std::max(0.0, 1.0 - model.rho * model.rho));
    for (long i = 0; i < n; ++i) {
      const double e1 = standard_normal(eng);
      A[i] = p[i] + e1;
      if (cov) Y[i] = b[i] + model.rho * e1 + rest * standard_normal(eng);
    }
  } else {
    auto bern = [&](double q) {
      if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("model: Bernoulli mean outside [0,1]");
      return uniform01(eng) < q ? 1.0 : 0.0;
    };
    for (long i = 0; i < n; ++i) {
      A[i] = bern(p[i]);
      if (cov) Y[i] = bern(b[i]);
    }
  }
  if (!cov) Y = A;
  return Dataset(std::move(X), std::move(A), std::move(Y));
}

namespace {

Field least_squares(const Eigen::MatrixXd& Z, const Eigen::VectorXd& v, const BasisDict& basis) {
  const GramOperator g = empirical_gram(Z, "train");
  Eigen::VectorXd beta = g.apply_inverse(Z.transpose() * v / static_cast<double>(Z.rows()));
  return Field::series(basis, std::move(beta));
}

}  // namespace

NuisancePair fit_nuisance(const Sample& train, const BasisDict& basis, FunctionalVariant variant) {
  const Eigen::MatrixXd Z = basis.eval(train.X);
  Field p_hat = least_squares(Z, train.A, basis);
  if (variant == FunctionalVariant::cond_variance) return NuisancePair::cond_variance(std::move(p_hat));
  return NuisancePair::cond_covariance(std::move(p_hat), least_squares(Z, train.Y, basis));
}

OracleBias oracle_bias(const Field& p, const Field& p_hat, const Field& b, const Field& b_hat, const BasisDict& basis_k,
                       const GramOperator& gram, const Density& density, int quad_points) {
  const Field dp = Field::combine(p, 1.0, p_hat, -1.0);
  const Field db = Field::combine(b, 1.0, b_hat, -1.0);
  OracleBias o;
  o.beta_p = projection_coef(basis_k, gram, dp, density, quad_points);
  const Eigen::VectorXd beta_b = projection_coef(basis_k, gram, db, density, quad_points);
  const Eigen::VectorXd om_b = gram.apply(beta_b).col(0);
  o.bias_k = o.beta_p.dot(om_b);
  o.proj_b2 = beta_b.dot(om_b);
  o.proj_p2 = o.beta_p.dot(gram.apply(o.beta_p).col(0));
  o.bias_inf = inner_product(dp, db, density, quad_points);
  o.tb_k = o.bias_inf - o.bias_k;
  return o;
}

double power_condition_ratio(const OracleBias& oracle, FunctionalVariant variant, int k, long n) {
  const double kn = static_cast<double>(k) / static_cast<double>(n);
  if (variant == FunctionalVariant::cond_variance) return oracle.proj_p2 / kn;
  const double den = kn * oracle.proj_b2 * oracle.proj_p2;
  return den > 0.0 ? oracle.bias_k * oracle.bias_k / den : 0.0;
}

Field weierstrass(double s, int levels, double amplitude) {
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("weierstrass.s: must lie in (0,1)");
  if (levels < 1) throw ConfigError("weierstrass.levels: must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(levels));
  for (int j = 0; j < levels; ++j) w[static_cast<std::size_t>(j)] = amplitude * std::pow(2.0, -j * s);
  return Field::callable([w](std::span<const double> x) {
    double v = 0.0;
    double freq = 2.0 * std::numbers::pi;
    for (double c : w) {
      v += c * std::cos(freq * x[0]);
      freq *= 2.0;
    }
    return v;
  });
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("loglog_slope: need two or more matched points");
  const auto m = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  sx /= m;
  sy /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - sx;
    sxy += dx * (std::log(y[i]) - sy);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace hoifkit
