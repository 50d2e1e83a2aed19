#include "hoifkit/trust_region.hpp"

#include "hoifkit/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoifkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PathPoint {
  double q = 0.0;
  double norm2 = 0.0;
};

// u_i = -(mu/2) ghat_i / (1 + mu lam_i), skipping indices flagged in `skip`.
PathPoint level_path(double c, const Eigen::VectorXd& lam, const Eigen::VectorXd& ghat, double mu,
                     const std::vector<bool>* skip = nullptr) {
  PathPoint p;
  p.q = c;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (skip && (*skip)[static_cast<std::size_t>(i)]) continue;
    const double u = -0.5 * mu * ghat[i] / (1.0 + mu * lam[i]);
    p.q += ghat[i] * u + lam[i] * u * u;
    p.norm2 += u * u;
  }
  return p;
}

}  // namespace

BallQuadratic::BallQuadratic(double c, const Eigen::VectorXd& g, const Eigen::MatrixXd& H) : c_(c) {
  if (H.rows() != H.cols() || H.rows() != g.size()) throw DimensionError("BallQuadratic: inconsistent dimensions");
  const Eigen::MatrixXd Hs = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
  if (es.info() != Eigen::Success) throw NumericalError("BallQuadratic: eigendecomposition failed");
  lambda_ = es.eigenvalues();
  V_ = es.eigenvectors();
  ghat_ = V_.transpose() * g;
  positive_definite_ = lambda_.size() > 0 && lambda_[0] > 0.0;
  if (positive_definite_) {
    q_min_ = c_;
    u_star_norm2_ = 0.0;
    for (Eigen::Index i = 0; i < lambda_.size(); ++i) {
      const double u = -0.5 * ghat_[i] / lambda_[i];
      q_min_ += ghat_[i] * u + lambda_[i] * u * u;
      u_star_norm2_ += u * u;
    }
  } else {
    q_min_ = -kInf;
    u_star_norm2_ = kInf;
  }
}

double BallQuadratic::value(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd w = V_.transpose() * u;
  return c_ + ghat_.dot(w) + (lambda_.array() * w.array().square()).sum();
}

TrsSolution BallQuadratic::solve_diag(const Eigen::VectorXd& lam, const Eigen::VectorXd& ghat, double r2) {
  const Eigen::Index k = lam.size();
  TrsSolution sol;
  sol.u = Eigen::VectorXd::Zero(k);
  if (!(r2 >= 0.0)) throw DegenerateError("trust region: negative radius");
  if (r2 == 0.0 || k == 0) return sol;

  auto objective = [&](const Eigen::VectorXd& w) { return ghat.dot(w) + (lam.array() * w.array().square()).sum(); };
  const double lmin = lam.minCoeff();
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double gnorm = ghat.norm();

  if (lmin > 0.0) {
    const Eigen::VectorXd w0 = (-0.5 * ghat.array() / lam.array()).matrix();
    if (w0.squaredNorm() <= r2) {
      sol.u = w0;
      sol.value = objective(w0);
      return sol;
    }
  }
  const double pole = std::max(0.0, -lmin);

  if (lmin <= 0.0) {
    std::vector<bool> in_min(static_cast<std::size_t>(k), false);
    double g_min = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (lam[i] - lmin <= 1e-12 * scale) {
        in_min[static_cast<std::size_t>(i)] = true;
        g_min = std::max(g_min, std::abs(ghat[i]));
      }
    }
    if (g_min <= 1e-13 * gnorm || gnorm == 0.0) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
      Eigen::Index first = -1;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (in_min[static_cast<std::size_t>(i)]) {
          if (first < 0) first = i;
          continue;
        }
        w[i] = -0.5 * ghat[i] / (lam[i] + pole);
      }
      const double partial = w.squaredNorm();
      if (partial <= r2) {
        w[first] = std::sqrt(r2 - partial);
        sol.u = w;
        sol.value = objective(w);
        sol.multiplier = pole;
        sol.boundary = true;
        sol.hard_case = true;
        return sol;
      }
    }
  }

  // Secular equation ||w(eta)||^2 = r2 on (pole, hi].
  auto w_of = [&](double eta) { return Eigen::VectorXd((-0.5 * ghat.array() / (lam.array() + eta)).matrix()); };
  double lo = pole;
  double hi = pole + gnorm / (2.0 * std::sqrt(r2)) + std::numeric_limits<double>::min();
  double eta = hi;
  const double inv_root = 1.0 / std::sqrt(r2);
  int it = 0;
  for (; it < 500; ++it) {
    const Eigen::VectorXd w = w_of(eta);
    const double nw2 = w.squaredNorm();
    const double f = nw2 - r2;
    if (f > 0.0) lo = eta; else hi = eta;
    if (std::abs(f) <= 1e-15 * r2 || hi - lo <= 1e-16 * std::max(1.0, std::abs(eta))) break;
    // Newton on 1/sqrt(r2) - 1/||w||, which is nearly linear in eta.
    const double nw = std::sqrt(nw2);
    const double dnw2 = -2.0 * (w.array().square() / (lam.array() + eta)).sum();
    const double h = inv_root - 1.0 / nw;
    const double dh = 0.5 * dnw2 / (nw2 * nw);
    double next = (dh != 0.0 && std::isfinite(dh)) ? eta - h / dh : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    eta = next;
  }
  sol.u = w_of(eta);
  // Project onto the sphere to remove residual root-finding error.
  const double nu = sol.u.norm();
  if (nu > 0.0) sol.u *= std::sqrt(r2) / nu;
  sol.value = objective(sol.u);
  sol.multiplier = eta;
  sol.boundary = true;
  sol.iterations = it;
  return sol;
}

TrsSolution BallQuadratic::minimize(double r2) const {
  TrsSolution s = solve_diag(lambda_, ghat_, r2);
  s.value += c_;
  s.u = V_ * s.u;
  return s;
}

TrsSolution BallQuadratic::maximize(double r2) const {
  TrsSolution s = solve_diag(-lambda_, -ghat_, r2);
  s.value = c_ - s.value;
  s.u = V_ * s.u;
  return s;
}

double BallQuadratic::min_norm_at_level(double phi) const {
  if (!positive_definite_) throw PreconditionError("min_norm_at_level: quadratic must be positive definite");
  if (phi == c_) return 0.0;
  const Eigen::Index k = lambda_.size();
  const double scale = std::max(std::abs(c_), 1.0);

  if (phi > c_) {
    const double lmax = lambda_[k - 1];
    std::vector<bool> in_max(static_cast<std::size_t>(k), false);
    double g_max = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (lmax - lambda_[i] <= 1e-12 * lmax) {
        in_max[static_cast<std::size_t>(i)] = true;
        g_max = std::max(g_max, std::abs(ghat_[i]));
      }
    }
    const double gnorm = ghat_.norm();
    if (g_max <= 1e-13 * gnorm || gnorm == 0.0) {
      const PathPoint lim = level_path(c_, lambda_, ghat_, -1.0 / lmax, &in_max);
      if (phi >= lim.q) return lim.norm2 + (phi - lim.q) / lmax;
    }
    // mu = -s / lmax, s in (0, 1); q increases with s.
    double lo = 0.0;
    double hi = 1.0;
    const PathPoint edge = level_path(c_, lambda_, ghat_, -std::nextafter(1.0, 0.0) / lmax);
    if (edge.q < phi) return kInf;
    PathPoint mid;
    for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
      const double s = 0.5 * (lo + hi);
      mid = level_path(c_, lambda_, ghat_, -s / lmax);
      if (mid.q < phi) lo = s; else hi = s;
      if (std::abs(mid.q - phi) <= 1e-15 * scale) break;
    }
    return mid.norm2;
  }

  if (phi < q_min_) return kInf;
  if (phi == q_min_) return u_star_norm2_;
  // mu = t / (1 - t), t in (0, 1); q decreases with t.
  double lo = 0.0;
  double hi = 1.0;
  PathPoint mid;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double t = 0.5 * (lo + hi);
    mid = level_path(c_, lambda_, ghat_, t / (1.0 - t));
    if (mid.q > phi) lo = t; else hi = t;
    if (std::abs(mid.q - phi) <= 1e-15 * scale) break;
  }
  return mid.norm2;
}

}  // namespace hoifkit
