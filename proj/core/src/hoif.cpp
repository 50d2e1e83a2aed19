#include "hoifkit/hoif.hpp"

#include "hoifkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace hoifkit {

std::string_view to_string(FunctionalVariant v) {
  return v == FunctionalVariant::cond_variance ? "cond_variance" : "cond_covariance";
}

FunctionalVariant parse_variant(std::string_view name) {
  if (name == "cond_variance" || name == "cond_var") return FunctionalVariant::cond_variance;
  if (name == "cond_covariance" || name == "cond_cov") return FunctionalVariant::cond_covariance;
  throw ConfigError("functional: unknown variant '" + std::string(name) + "' (expected cond_covariance|cond_variance)");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::first_order: return "first_order";
    case KernelKind::oracle_gram: return "oracle_gram";
    case KernelKind::empirical_gram: return "empirical_gram";
    case KernelKind::kbw: return "kbw";
  }
  return "unknown";
}

NuisancePair NuisancePair::cond_covariance(Field p_hat, Field b_hat) {
  return {std::move(p_hat), std::move(b_hat), FunctionalVariant::cond_covariance};
}

NuisancePair NuisancePair::cond_variance(Field p_hat) {
  Field b = p_hat;
  return {std::move(p_hat), std::move(b), FunctionalVariant::cond_variance};
}

Residuals residuals(const Sample& sample, const NuisancePair& nuis) {
  Residuals r;
  r.a = sample.A - nuis.p_hat.eval(sample.X);
  if (nuis.variant == FunctionalVariant::cond_variance) {
    r.y = r.a;
  } else {
    r.y = sample.Y - nuis.b_hat.eval(sample.X);
  }
  return r;
}

UStatResult drml_psi1(const Eigen::Ref<const Eigen::VectorXd>& resid_a, const Eigen::Ref<const Eigen::VectorXd>& resid_y) {
  if (resid_a.size() != resid_y.size()) throw DimensionError("drml_psi1: residual lengths differ");
  const Eigen::Index n = resid_a.size();
  if (n < 2) throw InsufficientDataError("drml_psi1: need n >= 2 (got " + std::to_string(n) + ")");
  const Eigen::ArrayXd s = resid_a.array() * resid_y.array();
  const double mean = s.mean();
  const double var = (s - mean).square().sum() / static_cast<double>(n - 1);
  UStatResult r;
  r.estimate = mean;
  r.se = std::sqrt(var / static_cast<double>(n));
  r.order = 1;
  r.kernel_kind = KernelKind::first_order;
  r.n_used = static_cast<long>(n);
  return r;
}

UStatResult drml_psi1(const Sample& est, const NuisancePair& nuis) {
  const Residuals r = residuals(est, nuis);
  return drml_psi1(r.a, r.y);
}

namespace {

using ConstMat = Eigen::Ref<const Eigen::MatrixXd>;
using ConstVec = Eigen::Ref<const Eigen::VectorXd>;

template <class Fn>
auto with_whitened(const ConstMat& Z, const GramOperator& gram, Fn&& fn) {
  if (gram.is_identity()) return fn(Z);
  Eigen::MatrixXd Q = Z;
  gram.whiten_in_place(Q);
  return fn(ConstMat(Q));
}

void check_inputs(const ConstVec& a, const ConstVec& y, const ConstMat& Z, const GramOperator& gram,
                  Eigen::Index min_n, const char* who) {
  if (a.size() != y.size() || a.size() != Z.rows()) {
    throw DimensionError(std::string(who) + ": residual lengths and rows of Z differ");
  }
  if (Z.cols() != gram.size()) throw DimensionError(std::string(who) + ": columns of Z != Gram size");
  if (a.size() < min_n) {
    throw InsufficientDataError(std::string(who) + ": need n >= " + std::to_string(min_n) + " (got " +
                                std::to_string(a.size()) + ")");
  }
}

bool use_incomplete(const UStatOptions& opt, Eigen::Index n) {
  if (opt.variance == VarianceMode::incomplete) return true;
  return opt.variance == VarianceMode::automatic && n > opt.incomplete_threshold;
}

// M_u = Q' diag(u) Q.
Eigen::MatrixXd weighted_cross(const ConstMat& Q, const Eigen::VectorXd& u) {
  const Eigen::MatrixXd Qu = Q.array().colwise() * u.array();
  Eigen::MatrixXd M = Qu.transpose() * Q;
  return 0.5 * (M + M.transpose());
}

// sum_i q_i' M q_i per row.
Eigen::VectorXd row_quadratic(const ConstMat& Q, const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd QM = Q * M;
  return (QM.array() * Q.array()).rowwise().sum();
}

struct Pieces {
  Eigen::VectorXd Sa, Sy, Gd, QSa, QSy;
  double if22 = 0.0;
};

Pieces basic_pieces(const ConstVec& a, const ConstVec& y, const ConstMat& Q) {
  const auto n = static_cast<double>(a.size());
  Pieces p;
  p.Sa = Q.transpose() * a;
  p.Sy = Q.transpose() * y;
  p.Gd = Q.rowwise().squaredNorm();
  const double diag = (a.array() * y.array() * p.Gd.array()).sum();
  p.if22 = (p.Sa.dot(p.Sy) - diag) / (n * (n - 1.0));
  return p;
}

// h_i = mean_{j != i} K_ij with K the symmetrized order-2 kernel.
Eigen::VectorXd projection_h2(const ConstVec& a, const ConstVec& y, Pieces& p, const ConstMat& Q) {
  const auto n = static_cast<double>(a.size());
  if (p.QSa.size() == 0) {
    p.QSa = Q * p.Sa;
    p.QSy = Q * p.Sy;
  }
  return ((0.5 * (a.array() * p.QSy.array() + y.array() * p.QSa.array())) - a.array() * y.array() * p.Gd.array()) /
         (n - 1.0);
}

double sample_variance(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

// mean over i != j of K_ij^2 over lag pairs (i, i + l mod n), l = 1..L.
double mean_k2_incomplete(const ConstVec& a, const ConstVec& y, const ConstMat& Q, int lags) {
  const Eigen::Index n = a.size();
  const int L = static_cast<int>(std::min<Eigen::Index>(lags, n - 1));
  double acc = 0.0;
  long count = 0;
  for (int l = 1; l <= L; ++l) {
    const Eigen::Index m = n - l;
    const Eigen::VectorXd g_main = (Q.topRows(m).array() * Q.bottomRows(m).array()).rowwise().sum();
    const Eigen::VectorXd g_wrap = (Q.bottomRows(l).array() * Q.topRows(l).array()).rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index j = (i + l) % n;
      const double g = i < m ? g_main[i] : g_wrap[i - m];
      const double k = 0.5 * (a[i] * y[j] + a[j] * y[i]) * g;
      acc += k * k;
      ++count;
    }
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

struct CrossMoments {
  Eigen::MatrixXd Ma2, My2, May;
  bool same = false;
};

CrossMoments cross_moments(const ConstVec& a, const ConstVec& y, const ConstMat& Q) {
  CrossMoments cm;
  cm.same = (a.array() == y.array()).all();
  const Eigen::VectorXd a2 = a.array().square();
  cm.Ma2 = weighted_cross(Q, a2);
  if (cm.same) {
    cm.My2 = cm.Ma2;
    cm.May = cm.Ma2;
  } else {
    cm.My2 = weighted_cross(Q, y.array().square().matrix());
    cm.May = weighted_cross(Q, (a.array() * y.array()).matrix());
  }
  return cm;
}

double mean_k2_exact(const ConstVec& a, const ConstVec& y, const ConstMat& Q, const Eigen::VectorXd& Gd,
                     const CrossMoments* cm) {
  const Eigen::Index n = a.size();
  const Eigen::Index k = Q.cols();
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  if (!cm && n <= 3 * k && n <= 8000) {
    // n x n route: cheaper when n is small relative to k.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    G.selfadjointView<Eigen::Lower>().rankUpdate(Q);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double kv = 0.5 * (a[i] * y[j] + a[j] * y[i]) * G(i, j);
        acc += kv * kv;
      }
    }
    return 2.0 * acc / pairs;
  }
  CrossMoments local;
  if (!cm) {
    local = cross_moments(a, y, Q);
    cm = &local;
  }
  const double all = 0.5 * ((cm->Ma2.array() * cm->My2.array()).sum() + cm->May.array().square().sum());
  const double diag = (a.array().square() * y.array().square() * Gd.array().square()).sum();
  return std::max(0.0, all - diag) / pairs;
}

UStatResult ustat2(const ConstVec& a, const ConstVec& y, const ConstMat& Q, const UStatOptions& opt, KernelKind kind) {
  const Eigen::Index n = a.size();
  Pieces p = basic_pieces(a, y, Q);
  UStatResult r;
  r.estimate = p.if22;
  r.order = 2;
  r.kernel_kind = kind;
  r.n_used = static_cast<long>(n);
  if (opt.variance == VarianceMode::none) return r;

  const auto nd = static_cast<double>(n);
  const Eigen::VectorXd h = projection_h2(a, y, p, Q);
  const bool incomplete = use_incomplete(opt, n);
  const double k2 = incomplete ? mean_k2_incomplete(a, y, Q, opt.incomplete_lags) : mean_k2_exact(a, y, Q, p.Gd, nullptr);
  const double var_lin = 4.0 / nd * sample_variance(h);
  const double var_deg = 2.0 / (nd * (nd - 1.0)) * k2;
  r.se = std::sqrt(std::max(0.0, var_lin + var_deg));
  r.diagnostics["var_linear"] = var_lin;
  r.diagnostics["var_degenerate"] = var_deg;
  r.diagnostics["incomplete_variance"] = incomplete ? 1.0 : 0.0;
  return r;
}

UStatResult ustat3(const ConstVec& a, const ConstVec& y, const ConstMat& Q, const UStatOptions& opt) {
  const Eigen::Index n = a.size();
  const auto nd = static_cast<double>(n);
  const double n3 = nd * (nd - 1.0) * (nd - 2.0);
  Pieces p = basic_pieces(a, y, Q);
  p.QSa = Q * p.Sa;
  p.QSy = Q * p.Sy;

  const Eigen::MatrixXd M = [&] {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Q.cols(), Q.cols());
    m.selfadjointView<Eigen::Lower>().rankUpdate(Q.transpose());
    m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
    return m;
  }();
  const Eigen::VectorXd qMq = row_quadratic(Q, M);
  const Eigen::ArrayXd av = a.array();
  const Eigen::ArrayXd yv = y.array();
  const Eigen::ArrayXd G = p.Gd.array();

  const double B = p.Sa.dot(M * p.Sy) - (av * G * p.QSy.array()).sum() - (yv * G * p.QSa.array()).sum() -
                   (av * yv * qMq.array()).sum() + 2.0 * (av * yv * G.square()).sum();
  const double b_tilde = B / n3;
  const double t3 = p.if22 - b_tilde;

  UStatResult r;
  r.estimate = p.if22 + t3;
  r.order = 3;
  r.kernel_kind = KernelKind::empirical_gram;
  r.n_used = static_cast<long>(n);
  r.diagnostics["if22"] = p.if22;
  r.diagnostics["t3"] = t3;
  if (opt.variance == VarianceMode::none) return r;

  const Eigen::VectorXd h2 = projection_h2(a, y, p, Q);
  const Eigen::VectorXd Ra = Q.transpose() * (G * av).matrix();
  const Eigen::VectorXd Ry = Q.transpose() * (G * yv).matrix();
  const Eigen::ArrayXd QMSa = (Q * (M * p.Sa)).array();
  const Eigen::ArrayXd QMSy = (Q * (M * p.Sy)).array();
  const Eigen::ArrayXd QRa = (Q * Ra).array();
  const Eigen::ArrayXd QRy = (Q * Ry).array();
  const CrossMoments cm = cross_moments(a, y, Q);
  const Eigen::ArrayXd qMayq = row_quadratic(Q, cm.May).array();
  const double denom = (nd - 1.0) * (nd - 2.0);
  const Eigen::ArrayXd pos1 = av * (QMSy - G * p.QSy.array() - yv * qMq.array() - QRy + 2.0 * G.square() * yv) / denom;
  const Eigen::ArrayXd pos3 = yv * (QMSa - G * p.QSa.array() - av * qMq.array() - QRa + 2.0 * G.square() * av) / denom;
  const Eigen::ArrayXd pos2 = (p.QSa.array() * p.QSy.array() - av * G * p.QSy.array() - yv * G * p.QSa.array() - qMayq +
                               2.0 * av * yv * G.square()) /
                              denom;
  const Eigen::ArrayXd h3 = (pos1 + pos2 + pos3) / 3.0;
  const Eigen::VectorXd psi = (4.0 * (h2.array() - p.if22) - 3.0 * (h3 - b_tilde)).matrix();

  const bool incomplete = use_incomplete(opt, n);
  const double k2 = incomplete ? mean_k2_incomplete(a, y, Q, opt.incomplete_lags) : mean_k2_exact(a, y, Q, p.Gd, &cm);
  const Eigen::ArrayXd qa2q = row_quadratic(Q, cm.Ma2).array();
  const Eigen::ArrayXd qy2q = cm.same ? qa2q : row_quadratic(Q, cm.My2).array();
  const double v3 = (qa2q * qy2q).sum() / (nd * nd * nd);

  const double var_lin = sample_variance(psi) / nd;
  const double var_deg = 2.0 / (nd * (nd - 1.0)) * k2;
  const double var_cub = 6.0 / n3 * v3;
  r.se = std::sqrt(std::max(0.0, var_lin + var_deg + var_cub));
  r.diagnostics["var_linear"] = var_lin;
  r.diagnostics["var_degenerate"] = var_deg;
  r.diagnostics["var_cubic"] = var_cub;
  r.diagnostics["incomplete_variance"] = incomplete ? 1.0 : 0.0;
  return r;
}

}  // namespace

UStatResult if22(const ConstVec& resid_a, const ConstVec& resid_y, const ConstMat& Z, const GramOperator& gram,
                 const UStatOptions& options) {
  check_inputs(resid_a, resid_y, Z, gram, 2, "if22");
  const KernelKind kind = gram.kind() == GramKind::empirical ? KernelKind::empirical_gram : KernelKind::oracle_gram;
  return with_whitened(Z, gram, [&](const ConstMat& Q) { return ustat2(resid_a, resid_y, Q, options, kind); });
}

UStatResult if22_to_33(const ConstVec& resid_a, const ConstVec& resid_y, const ConstMat& Z, const GramOperator& emp_gram,
                       const UStatOptions& options) {
  check_inputs(resid_a, resid_y, Z, emp_gram, 3, "if22_to_33");
  return with_whitened(Z, emp_gram, [&](const ConstMat& Q) { return ustat3(resid_a, resid_y, Q, options); });
}

Eigen::VectorXd fit_fhat(const ConstVec& resid_a_sel, const ConstMat& Z_sel, const GramOperator& gram) {
  if (resid_a_sel.size() != Z_sel.rows()) throw DimensionError("fit_fhat: residual length != rows of Z");
  if (Z_sel.cols() != gram.size()) throw DimensionError("fit_fhat: columns of Z != Gram size");
  if (Z_sel.rows() < 1) throw InsufficientDataError("fit_fhat: empty selection split");
  const Eigen::VectorXd m = Z_sel.transpose() * resid_a_sel / static_cast<double>(Z_sel.rows());
  return gram.apply_inverse(m);
}

GramOperator kbw_omega(const ConstMat& betas, const GramOperator& omega_k) {
  if (betas.rows() != omega_k.size()) throw DimensionError("kbw_omega: coefficient rows != Gram size");
  if (betas.cols() < 1) throw DimensionError("kbw_omega: need at least one direction");
  if (betas.isZero(0.0)) throw DegenerateAggregateError("kbw: fitted directions are identically zero");
  const Eigen::MatrixXd omega_f = betas.transpose() * omega_k.apply(betas);
  try {
    return GramOperator::from_matrix(omega_f, GramKind::custom, "kbw");
  } catch (const SingularGramError& e) {
    throw DegenerateAggregateError(std::string("kbw: Omega_f is singular (") + e.what() + ")");
  }
}

UStatResult if22_kbw(const ConstVec& resid_a, const ConstVec& resid_y, const ConstMat& F, const GramOperator& omega_f,
                     const UStatOptions& options) {
  check_inputs(resid_a, resid_y, F, omega_f, 2, "if22_kbw");
  if (F.isZero(0.0)) throw DegenerateAggregateError("kbw: fitted directions vanish on the estimation split");
  return with_whitened(F, omega_f,
                       [&](const ConstMat& Q) { return ustat2(resid_a, resid_y, Q, options, KernelKind::kbw); });
}

KbwDiagnostics kbw_diagnostics(const ConstVec& resid_a_sel, const ConstMat& Z_sel, const GramOperator& gram,
                               const ConstVec& beta_hat, const ConstVec& beta_true, double bias_k) {
  if (resid_a_sel.size() != Z_sel.rows() || Z_sel.cols() != gram.size() || beta_hat.size() != gram.size() ||
      beta_true.size() != gram.size()) {
    throw DimensionError("kbw_diagnostics: inconsistent dimensions");
  }
  const auto n = static_cast<double>(Z_sel.rows());
  KbwDiagnostics d;
  d.bias_k = bias_k;
  const Eigen::VectorXd m = Z_sel.transpose() * resid_a_sel / n;
  const double s = beta_true.dot(m);
  d.delta_num = s * s - bias_k * bias_k;

  UStatOptions none;
  none.variance = VarianceMode::none;
  const double if22_sel = if22(resid_a_sel, resid_a_sel, Z_sel, gram, none).estimate;
  const Eigen::VectorXd zz_plain = Z_sel.rowwise().squaredNorm();
  const Eigen::VectorXd zz_inv =
      gram.is_identity() ? zz_plain : Eigen::VectorXd(gram.whiten(Z_sel).rowwise().squaredNorm());
  const Eigen::ArrayXd r2 = resid_a_sel.array().square();
  const double diag_inv = (r2 * zz_inv.array()).sum() / (n * n);
  const double diag_plain = (r2 * zz_plain.array()).sum() / (n * n);
  d.delta_denom = if22_sel - bias_k + diag_inv;
  d.delta_denom_literal = if22_sel - bias_k + diag_plain;
  const double denom = bias_k + d.delta_denom;
  d.ratio = denom != 0.0 ? (bias_k * bias_k + d.delta_num) / denom : 0.0;
  const Eigen::VectorXd omega_bh = gram.apply(beta_hat);
  const double fh2 = beta_hat.dot(omega_bh);
  const double cross = beta_true.dot(omega_bh);
  d.conditional_mean = fh2 > 0.0 ? cross * cross / fh2 : 0.0;
  return d;
}

double if22_naive(const ConstVec& resid_a, const ConstVec& resid_y, const ConstMat& Z, const GramOperator& gram) {
  check_inputs(resid_a, resid_y, Z, gram, 2, "if22_naive");
  const auto n = static_cast<double>(Z.rows());
  const double work = n * n * static_cast<double>(Z.cols());
  if (work > kNaiveWorkBudget) {
    throw BudgetError("if22_naive: n^2 k = " + std::to_string(work) + " exceeds the naive budget " +
                      std::to_string(kNaiveWorkBudget) + "; use the factorized path");
  }
  const Eigen::MatrixXd W = gram.apply_inverse(Z.transpose());  // k x n
  double acc = 0.0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    for (Eigen::Index j = 0; j < Z.rows(); ++j) {
      if (i == j) continue;
      acc += resid_a[i] * Z.row(i).dot(W.col(j)) * resid_y[j];
    }
  }
  return acc / (n * (n - 1.0));
}

}  // namespace hoifkit
