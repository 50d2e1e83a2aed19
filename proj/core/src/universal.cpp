#include "hoifkit/universal.hpp"

#include "hoifkit/bias_test.hpp"
#include "hoifkit/error.hpp"
#include "hoifkit/projection.hpp"
#include "hoifkit/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoifkit {

std::string_view to_string(Noise noise) { return noise == Noise::bernoulli ? "bernoulli" : "gaussian"; }

Noise parse_noise(std::string_view name) {
  if (name == "gaussian") return Noise::gaussian;
  if (name == "bernoulli") return Noise::bernoulli;
  throw ConfigError("model: unknown noise '" + std::string(name) + "' (expected gaussian|bernoulli)");
}

SieveModel SieveModel::make(BasisDict basis, Field p_hat, Noise noise, const Density& density,
                            const GramOptions& gram_options) {
  SieveModel m;
  m.gram = exact_gram(basis, density, gram_options);
  m.basis = std::move(basis);
  m.p_hat = std::move(p_hat);
  m.noise = noise;
  m.density = density;
  return m;
}

QuadraticFunctional make_quadratic_functional(const SieveModel& model, int quad_points) {
  QuadraticFunctional qf;
  qf.c0 = inner_product(model.p_hat, model.p_hat, model.density, quad_points);
  qf.linear = 2.0 * basis_moments(model.basis, model.p_hat, model.density, quad_points);
  qf.quad = model.gram.matrix();
  return qf;
}

double psi_value(const Eigen::Ref<const Eigen::VectorXd>& theta, const QuadraticFunctional& qf) {
  if (theta.size() != qf.linear.size()) throw DimensionError("psi_value: theta length != k");
  return qf.c0 + qf.linear.dot(theta) + theta.dot(qf.quad * theta);
}

double Ellipsoid::distance2(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const Eigen::VectorXd diff = theta - center;
  return diff.dot(shape.apply(diff).col(0));
}

Eigen::VectorXd kl_projection_oracle(const Field& true_p, const SieveModel& model, int quad_points) {
  const Field diff = Field::combine(true_p, 1.0, model.p_hat, -1.0);
  return projection_coef(model.basis, model.gram, diff, model.density, quad_points);
}

namespace {

struct Design {
  Eigen::MatrixXd Z;
  Eigen::VectorXd r;
};

Design design(const Sample& s, const SieveModel& model) {
  return {model.basis.eval(s.X), s.A - model.p_hat.eval(s.X)};
}

}  // namespace

Eigen::VectorXd split_mle(const Sample& d1, const SieveModel& model) {
  const Design ds = design(d1, model);
  const GramOperator g = empirical_gram(ds.Z, "d1");
  return g.apply_inverse(ds.Z.transpose() * ds.r / static_cast<double>(ds.Z.rows()));
}

double rss(const Sample& d2, const SieveModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  const Design ds = design(d2, model);
  return (ds.r - ds.Z * theta).squaredNorm();
}

Ellipsoid confidence_set(const Sample& d2, const SieveModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta_hat_d1,
                         double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("universal.alpha: must lie in (0,1)");
  if (theta_hat_d1.size() != model.basis.size()) throw DimensionError("confidence_set: theta length != k");
  const Design ds = design(d2, model);
  const auto n2 = static_cast<double>(ds.Z.rows());
  Ellipsoid ell;
  ell.shape = empirical_gram(ds.Z, "d2");
  ell.center = ell.shape.apply_inverse(ds.Z.transpose() * ds.r / n2);
  ell.n2 = static_cast<long>(ds.Z.rows());
  ell.rss_center = (ds.r - ds.Z * ell.center).squaredNorm();
  // RSS(theta) - RSS(center) = n2 (theta - center)' shape (theta - center) exactly.
  ell.radius2 = ell.distance2(theta_hat_d1) + 2.0 * std::log(1.0 / alpha) / n2;
  ell.negative_radius = ell.radius2 < 0.0;
  return ell;
}

namespace {

BallQuadratic whitened_quadratic(const Ellipsoid& ell, const QuadraticFunctional& qf) {
  const Eigen::VectorXd grad = qf.linear + 2.0 * qf.quad * ell.center;
  const Eigen::VectorXd g = ell.shape.whiten_vector(grad);
  const Eigen::MatrixXd W = ell.shape.whiten(qf.quad);            // Omega L^{-T}
  const Eigen::MatrixXd H = ell.shape.whiten(W.transpose());      // L^{-1} Omega L^{-T}
  return BallQuadratic(psi_value(ell.center, qf), g, H);
}

}  // namespace

Interval plugin_interval(const Ellipsoid& ell, const QuadraticFunctional& qf) {
  if (ell.radius2 < 0.0 || ell.negative_radius) throw DegenerateError("plugin_interval: negative radius");
  const double c = psi_value(ell.center, qf);
  if (ell.radius2 == 0.0) return {c, c};
  const BallQuadratic bq = whitened_quadratic(ell, qf);
  Interval iv{bq.minimize(ell.radius2).value, bq.maximize(ell.radius2).value};
  iv.lo = std::min(iv.lo, c);
  iv.hi = std::max(iv.hi, c);
  return iv;
}

ProfileResult profile_interval(const Ellipsoid& ell, const QuadraticFunctional& qf) {
  if (ell.radius2 < 0.0 || ell.negative_radius) throw DegenerateError("profile_interval: negative radius");
  const double r = ell.radius2;
  const BallQuadratic bq = whitened_quadratic(ell, qf);
  const double c = bq.center_value();
  ProfileResult res;
  auto d = [&](double phi) {
    ++res.evaluations;
    return bq.min_norm_at_level(phi);
  };
  if (r == 0.0) {
    res.interval = {c, c};
    return res;
  }
  const Interval plug{bq.minimize(r).value, bq.maximize(r).value};
  const double scale = std::max({1.0, std::abs(c), std::abs(plug.lo), std::abs(plug.hi)});
  const double tiny = 1e-12 * scale;
  const double tol = 1e-15 * scale;

  // Upper endpoint.
  double up_lo = c;
  double up_hi = c + 4.0 * std::max(plug.hi - c, tiny);
  for (int i = 0; i < 200 && d(up_hi) <= r; ++i) up_hi = c + 2.0 * (up_hi - c);
  const double bracket_hi = up_hi;
  for (int it = 0; it < 200 && up_hi - up_lo > tol; ++it) {
    const double mid = 0.5 * (up_lo + up_hi);
    if (d(mid) <= r) up_lo = mid; else up_hi = mid;
  }

  // Lower endpoint; the constrained-min RSS is finite only above the unconstrained min of psi.
  const double qmin = bq.unconstrained_min();
  double lo_hi = c;
  double lo_lo = std::max(qmin, c - 4.0 * std::max(c - plug.lo, tiny));
  double lower;
  if (d(qmin) <= r) {
    lower = qmin;
    lo_lo = qmin;
  } else {
    for (int i = 0; i < 200 && lo_lo > qmin && d(lo_lo) <= r; ++i) lo_lo = std::max(qmin, c - 2.0 * (c - lo_lo));
    const double bracket_lo_start = lo_lo;
    double a = bracket_lo_start;
    double b = lo_hi;
    for (int it = 0; it < 200 && b - a > tol; ++it) {
      const double mid = 0.5 * (a + b);
      if (d(mid) <= r) b = mid; else a = mid;
    }
    lower = b;
  }
  res.interval = {lower, up_lo};

  // Shape check of the constrained-min RSS over the bracket.
  constexpr int kScan = 41;
  std::vector<double> vals(kScan);
  const double s_lo = lo_lo;
  const double s_hi = bracket_hi;
  for (int i = 0; i < kScan; ++i) vals[i] = d(s_lo + (s_hi - s_lo) * i / (kScan - 1.0));
  const auto argmin = std::min_element(vals.begin(), vals.end()) - vals.begin();
  const double slack = 1e-12 * std::max(1.0, r);
  for (int i = 1; i < kScan; ++i) {
    const bool finite = std::isfinite(vals[i]) && std::isfinite(vals[i - 1]);
    if (!finite) continue;
    if (i <= argmin && vals[i] > vals[i - 1] + slack) res.unimodal = false;
    if (i > argmin && vals[i] + slack < vals[i - 1]) res.unimodal = false;
  }
  int runs = 0;
  bool inside = false;
  for (double v : vals) {
    const bool acc = v <= r;
    if (acc && !inside) ++runs;
    inside = acc;
  }
  res.disconnected = runs > 1;
  return res;
}

ProfileResult profile_interval(const Sample& d2, const SieveModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& theta_hat_d1, const QuadraticFunctional& qf,
                               double alpha) {
  return profile_interval(confidence_set(d2, model, theta_hat_d1, alpha), qf);
}

LengthBound length_lower_bound(const Eigen::Ref<const Eigen::VectorXd>& theta_hat,
                               const Eigen::Ref<const Eigen::VectorXd>& theta_tilde, const QuadraticFunctional& qf,
                               double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("length_lower_bound: alpha must lie in (0,1]");
  const Eigen::VectorXd diff = theta_hat - theta_tilde;
  const Eigen::VectorXd sum = theta_hat + theta_tilde;
  const double quad = diff.dot(qf.quad * sum);
  LengthBound lb;
  lb.displayed = (1.0 - alpha) * std::abs(quad);
  lb.full = (1.0 - alpha) * std::abs(quad + qf.linear.dot(diff));
  return lb;
}

Interval hoif_wald_interval(const UStatResult& psi1, const UStatResult& if22, double alpha) {
  const double z = normal_upper_quantile(alpha / 2.0);
  const double center = psi1.estimate - if22.estimate;
  const double half = z * std::sqrt(psi1.se * psi1.se + if22.se * if22.se);
  return {center - half, center + half};
}

QuadraticHoif quadratic_hoif(const Sample& data, const SieveModel& model, const QuadraticFunctional& qf,
                             const UStatOptions& options) {
  const Design ds = design(data, model);
  const Eigen::Index n = ds.Z.rows();
  if (n < 2) throw InsufficientDataError("quadratic_hoif: need n >= 2");
  const Eigen::VectorXd beta_phat = model.gram.apply_inverse(0.5 * qf.linear);
  const Eigen::VectorXd proj = ds.Z * beta_phat;
  const Eigen::ArrayXd s = qf.c0 + 2.0 * proj.array() * ds.r.array();
  QuadraticHoif out;
  out.psi1.estimate = s.mean();
  out.psi1.se = std::sqrt((s - s.mean()).square().sum() / static_cast<double>(n - 1) / static_cast<double>(n));
  out.psi1.order = 1;
  out.psi1.kernel_kind = KernelKind::first_order;
  out.psi1.n_used = static_cast<long>(n);
  out.if22 = if22(ds.r, ds.r, ds.Z, model.gram, options);
  out.if22.estimate = -out.if22.estimate;
  return out;
}

bool bernoulli_admissible(const SieveModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta, int scan_points) {
  const int d = model.basis.dim();
  const long per_axis = d == 1 ? scan_points
                               : std::max(2L, static_cast<long>(std::floor(std::pow(scan_points, 1.0 / d))));
  long total = 1;
  for (int a = 0; a < d; ++a) total *= per_axis;
  Eigen::MatrixXd X(total, d);
  std::vector<long> idx(static_cast<std::size_t>(d), 0);
  for (long r = 0; r < total; ++r) {
    for (int a = 0; a < d; ++a) X(r, a) = per_axis > 1 ? static_cast<double>(idx[a]) / (per_axis - 1) : 0.5;
    for (int a = d - 1; a >= 0; --a) {
      if (++idx[a] < per_axis) break;
      idx[a] = 0;
    }
  }
  const Eigen::VectorXd p = model.p_hat.eval(X) + model.basis.eval(X) * theta;
  return (p.array() > 0.0).all() && (p.array() < 1.0).all();
}

}  // namespace hoifkit
