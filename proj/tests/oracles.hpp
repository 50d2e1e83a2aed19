#pragma once

// Reference implementations for the unit and acceptance tests. Everything here
// is written from the definitions with plain loops and an explicit inverse,
// and shares no code with the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd inverse(const Eigen::MatrixXd& omega) { return omega.fullPivLu().inverse(); }

// G(i,j) = z_i' Omega^{-1} z_j
inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& omega) {
  const Eigen::MatrixXd oi = inverse(omega);
  const long n = Z.rows();
  Eigen::MatrixXd G(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      double s = 0.0;
      for (long r = 0; r < Z.cols(); ++r)
        for (long c = 0; c < Z.cols(); ++c) s += Z(i, r) * oi(r, c) * Z(j, c);
      G(i, j) = s;
    }
  return G;
}

inline double if22(const Eigen::VectorXd& a, const Eigen::VectorXd& y, const Eigen::MatrixXd& Z,
                   const Eigen::MatrixXd& omega) {
  const Eigen::MatrixXd G = kernel_matrix(Z, omega);
  const long n = a.size();
  double s = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (i != j) s += a[i] * G(i, j) * y[j];
  return s / (static_cast<double>(n) * (n - 1));
}

// B~ = mean over distinct (i1,i2,i3) of a_1 (z_1' Oi z_2)(z_2' Oi z_3) y_3
inline double b_tilde(const Eigen::VectorXd& a, const Eigen::VectorXd& y, const Eigen::MatrixXd& Z,
                      const Eigen::MatrixXd& omega) {
  const Eigen::MatrixXd G = kernel_matrix(Z, omega);
  const long n = a.size();
  double s = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      for (long l = 0; l < n; ++l)
        if (i != j && j != l && i != l) s += a[i] * G(i, j) * G(j, l) * y[l];
  return s / (static_cast<double>(n) * (n - 1) * (n - 2));
}

// T3 with the middle factor written out: z_1' Oi (Omega - z_2 z_2') Oi z_3.
inline double t3(const Eigen::VectorXd& a, const Eigen::VectorXd& y, const Eigen::MatrixXd& Z,
                 const Eigen::MatrixXd& omega) {
  const Eigen::MatrixXd oi = inverse(omega);
  const long n = a.size();
  double s = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      for (long l = 0; l < n; ++l) {
        if (i == j || j == l || i == l) continue;
        const Eigen::MatrixXd mid = omega - Z.row(j).transpose() * Z.row(j);
        const double v = (Z.row(i) * oi * mid * oi * Z.row(l).transpose())(0, 0);
        s += a[i] * v * y[l];
      }
  return s / (static_cast<double>(n) * (n - 1) * (n - 2));
}

inline double if33(const Eigen::VectorXd& a, const Eigen::VectorXd& y, const Eigen::MatrixXd& Z,
                   const Eigen::MatrixXd& omega) {
  return if22(a, y, Z, omega) + t3(a, y, Z, omega);
}

inline double sample_var(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

struct Se2 {
  double var_linear = 0.0;
  double var_degenerate = 0.0;
  double se = 0.0;
};

// Order-2 Hoeffding plug-in straight from its definition:
// K_ij = (a_i y_j + a_j y_i) G_ij / 2, h_i = mean_{j != i} K_ij,
// var = 4/n var(h) + 2/(n(n-1)) mean_{i != j} K_ij^2.
inline Se2 se2(const Eigen::VectorXd& a, const Eigen::VectorXd& y, const Eigen::MatrixXd& Z,
               const Eigen::MatrixXd& omega) {
  const Eigen::MatrixXd G = kernel_matrix(Z, omega);
  const long n = a.size();
  const double nd = static_cast<double>(n);
  std::vector<double> h(n, 0.0);
  double k2 = 0.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      if (i == j) continue;
      const double K = 0.5 * (a[i] * y[j] + a[j] * y[i]) * G(i, j);
      h[i] += K / (nd - 1);
      k2 += K * K;
    }
  k2 /= nd * (nd - 1);
  Se2 r;
  r.var_linear = 4.0 / nd * sample_var(h);
  r.var_degenerate = 2.0 / (nd * (nd - 1)) * k2;
  r.se = std::sqrt(r.var_linear + r.var_degenerate);
  return r;
}

// Order-3 analogue: linear part from psi_i = 4(h2_i - IF22) - 3(h3_i - B~) where
// h3 averages the B kernel with i fixed in each of the three slots, the order-2
// degenerate part as above, and 6/(n(n-1)(n-2)) V3 with
// V3 = n^-3 sum_i (sum_j a_j^2 G_ij^2)(sum_l y_l^2 G_il^2).
inline double se3(const Eigen::VectorXd& a, const Eigen::VectorXd& y, const Eigen::MatrixXd& Z,
                  const Eigen::MatrixXd& omega) {
  const Eigen::MatrixXd G = kernel_matrix(Z, omega);
  const long n = a.size();
  const double nd = static_cast<double>(n);
  const double i22 = if22(a, y, Z, omega);
  const double bt = b_tilde(a, y, Z, omega);
  std::vector<double> psi(n);
  double k2 = 0.0;
  for (long i = 0; i < n; ++i) {
    double h2 = 0.0;
    for (long j = 0; j < n; ++j)
      if (j != i) h2 += 0.5 * (a[i] * y[j] + a[j] * y[i]) * G(i, j) / (nd - 1);
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    for (long j = 0; j < n; ++j)
      for (long l = 0; l < n; ++l) {
        if (j == i || l == i || j == l) continue;
        p1 += a[i] * G(i, j) * G(j, l) * y[l];
        p2 += a[j] * G(j, i) * G(i, l) * y[l];
        p3 += a[j] * G(j, l) * G(l, i) * y[i];
      }
    const double h3 = (p1 + p2 + p3) / (3.0 * (nd - 1) * (nd - 2));
    psi[i] = 4.0 * (h2 - i22) - 3.0 * (h3 - bt);
    for (long j = 0; j < n; ++j) {
      if (j == i) continue;
      const double K = 0.5 * (a[i] * y[j] + a[j] * y[i]) * G(i, j);
      k2 += K * K;
    }
  }
  k2 /= nd * (nd - 1);
  double v3 = 0.0;
  for (long i = 0; i < n; ++i) {
    double sa = 0.0, sy = 0.0;
    for (long j = 0; j < n; ++j) {
      sa += a[j] * a[j] * G(i, j) * G(i, j);
      sy += y[j] * y[j] * G(i, j) * G(i, j);
    }
    v3 += sa * sy;
  }
  v3 /= nd * nd * nd;
  const double var = sample_var(psi) / nd + 2.0 / (nd * (nd - 1)) * k2 + 6.0 / (nd * (nd - 1) * (nd - 2)) * v3;
  return std::sqrt(var);
}

struct Instance {
  Eigen::VectorXd a, y;
  Eigen::MatrixXd Z, omega;
};

// Random well-conditioned instance: Omega = B B'/k + I/2.
inline Instance random_instance(std::mt19937_64& gen, int n, int k) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Instance t;
  t.a.resize(n);
  t.y.resize(n);
  t.Z.resize(n, k);
  for (int i = 0; i < n; ++i) {
    t.a[i] = N(gen);
    t.y[i] = N(gen);
    for (int c = 0; c < k; ++c) t.Z(i, c) = U(gen);
  }
  Eigen::MatrixXd B(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) B(r, c) = N(gen);
  t.omega = B * B.transpose() / k + 0.5 * Eigen::MatrixXd::Identity(k, k);
  return t;
}

// 1-D calculus: range of c0 + l t + w t^2 over |t - c| <= rad (w > 0).
inline std::pair<double, double> quadratic_range_1d(double c0, double l, double w, double c, double rad) {
  auto f = [&](double t) { return c0 + l * t + w * t * t; };
  const double lo_t = c - rad, hi_t = c + rad;
  double lo = std::min(f(lo_t), f(hi_t)), hi = std::max(f(lo_t), f(hi_t));
  const double vertex = -l / (2.0 * w);
  if (vertex >= lo_t && vertex <= hi_t) lo = std::min(lo, f(vertex));
  return {lo, hi};
}

// Cox-de Boor recursion on an explicit knot vector.
inline double cox_de_boor(const std::vector<double>& t, int i, int order, double x) {
  if (order == 1) {
    const bool last = t[i + 1] == t.back() && x == t.back() && t[i] < t[i + 1];
    return (x >= t[i] && x < t[i + 1]) || last ? 1.0 : 0.0;
  }
  double v = 0.0;
  const double d1 = t[i + order - 1] - t[i];
  const double d2 = t[i + order] - t[i + 1];
  if (d1 > 0) v += (x - t[i]) / d1 * cox_de_boor(t, i, order - 1, x);
  if (d2 > 0) v += (t[i + order] - x) / d2 * cox_de_boor(t, i + 1, order - 1, x);
  return v;
}

}  // namespace oracle
