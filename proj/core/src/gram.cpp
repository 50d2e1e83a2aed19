#include "hoifkit/gram.hpp"

#include "hoifkit/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace hoifkit {

struct GramOperator::Factor {
  Eigen::MatrixXd matrix;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

std::string_view to_string(GramKind kind) {
  switch (kind) {
    case GramKind::exact: return "exact";
    case GramKind::empirical: return "empirical";
    case GramKind::custom: return "custom";
  }
  return "unknown";
}

namespace {

double smallest_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().size() ? es.eigenvalues()[0] : 0.0;
}

}  // namespace

GramOperator GramOperator::identity(int k, GramKind kind, std::string source) {
  if (k < 1) throw DimensionError("gram: k must be >= 1");
  GramOperator op;
  op.k_ = k;
  op.kind_ = kind;
  op.structure_ = GramStructure::identity;
  op.source_ = std::move(source);
  return op;
}

GramOperator GramOperator::from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& matrix, GramKind kind,
                                       std::string source, double ridge, long n_used) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1) {
    throw DimensionError("gram: matrix must be square and non-empty");
  }
  if (!(ridge >= 0.0)) throw ConfigError("gram.ridge: must be >= 0");
  auto factor = std::make_shared<Factor>();
  factor->matrix = 0.5 * (matrix + matrix.transpose());
  if (ridge > 0.0) factor->matrix.diagonal().array() += ridge;
  if (!factor->matrix.allFinite()) throw NumericalError("gram: matrix has non-finite entries");

  factor->llt.compute(factor->matrix);
  const Eigen::Index k = factor->matrix.rows();
  bool singular = factor->llt.info() != Eigen::Success;
  if (!singular) {
    const double max_diag = factor->matrix.diagonal().cwiseAbs().maxCoeff();
    const Eigen::VectorXd piv = Eigen::MatrixXd(factor->llt.matrixL()).diagonal();
    const double min_piv2 = piv.cwiseAbs2().minCoeff();
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, static_cast<double>(k));
    singular = !(max_diag > 0.0) || !(min_piv2 > floor * max_diag);
  }
  if (singular) {
    const double lmin = smallest_eigenvalue(factor->matrix);
    throw SingularGramError("gram: " + std::string(to_string(kind)) + " Gram (" + source +
                                ", k=" + std::to_string(k) + ") is numerically singular; lambda_min ~ " +
                                std::to_string(lmin),
                            lmin);
  }
  GramOperator op;
  op.k_ = static_cast<int>(k);
  op.kind_ = kind;
  op.structure_ = GramStructure::dense;
  op.ridge_ = ridge;
  op.n_used_ = n_used;
  op.source_ = std::move(source);
  op.factor_ = std::move(factor);
  return op;
}

Eigen::MatrixXd GramOperator::matrix() const {
  if (is_identity()) return Eigen::MatrixXd::Identity(k_, k_);
  return factor_->matrix;
}

Eigen::MatrixXd GramOperator::apply(const Eigen::Ref<const Eigen::MatrixXd>& V) const {
  if (V.rows() != k_) throw DimensionError("gram apply: row count != k");
  if (is_identity()) return V;
  return factor_->matrix * V;
}

Eigen::MatrixXd GramOperator::apply_inverse(const Eigen::Ref<const Eigen::MatrixXd>& V) const {
  if (V.rows() != k_) throw DimensionError("gram apply_inverse: row count != k");
  if (is_identity()) return V;
  return factor_->llt.solve(V);
}

Eigen::MatrixXd GramOperator::whiten(const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
  Eigen::MatrixXd Q = Z;
  whiten_in_place(Q);
  return Q;
}

void GramOperator::whiten_in_place(Eigen::MatrixXd& Z) const {
  if (Z.cols() != k_) throw DimensionError("gram whiten: column count != k");
  if (is_identity()) return;
  factor_->llt.matrixU().solveInPlace<Eigen::OnTheRight>(Z);
}

Eigen::VectorXd GramOperator::whiten_vector(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != k_) throw DimensionError("gram whiten_vector: length != k");
  if (is_identity()) return v;
  Eigen::VectorXd out = v;
  factor_->llt.matrixL().solveInPlace(out);
  return out;
}

double GramOperator::inverse_quadratic(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return whiten_vector(v).squaredNorm();
}

GramDiagnostics GramOperator::diagnostics() const {
  GramDiagnostics diag;
  diag.kind = kind_;
  diag.k = k_;
  diag.ridge = ridge_;
  diag.source = source_;
  diag.n_used = n_used_;
  if (is_identity()) {
    diag.lambda_min = diag.lambda_max = diag.cond = 1.0;
    return diag;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(factor_->matrix, Eigen::EigenvaluesOnly);
  diag.lambda_min = es.eigenvalues().minCoeff();
  diag.lambda_max = es.eigenvalues().maxCoeff();
  diag.cond = diag.lambda_min > 0.0 ? diag.lambda_max / diag.lambda_min
                                    : std::numeric_limits<double>::infinity();
  return diag;
}

namespace {

// 1-D Gram of the first m axis functions under one marginal density.
Eigen::MatrixXd axis_gram(const BasisDict& dict, const AxisDensity& g, int points) {
  const std::vector<double> breaks = dict.breakpoints();
  // Piecewise-polynomial splines need order+ nodes per panel to be exact.
  const int min_per_panel = dict.family() == Family::bspline ? dict.order() + 2 : 1;
  const Rule1D rule = axis_rule(breaks, points, min_per_panel);
  const int m = dict.axis_size();
  const Eigen::Index n = static_cast<Eigen::Index>(rule.nodes.size());
  Eigen::MatrixXd V(n, m);
  Eigen::VectorXd w(n);
  std::vector<double> row(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    dict.eval_axis(rule.nodes[i], row);
    for (int j = 0; j < m; ++j) V(i, j) = row[j];
    w[i] = rule.weights[i] * g.pdf(rule.nodes[i]);
  }
  Eigen::MatrixXd G = V.transpose() * w.asDiagonal() * V;
  return G;
}

}  // namespace

Eigen::MatrixXd quadrature_gram(const BasisDict& dict, const Density& density, int quad_points) {
  if (density.dim() != dict.dim()) throw DimensionError("exact_gram: density dimension != basis dimension");
  if (quad_points < 1) throw ConfigError("gram.quad_points: must be >= 1");
  const int k = dict.size();
  const int d = dict.dim();
  std::vector<Eigen::MatrixXd> axes;
  axes.reserve(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) axes.push_back(axis_gram(dict, density.axes[a], quad_points));
  Eigen::MatrixXd omega(k, k);
  for (int i = 0; i < k; ++i) {
    const auto mi = dict.multi_index(i);
    for (int j = 0; j <= i; ++j) {
      const auto mj = dict.multi_index(j);
      double v = 1.0;
      for (int a = 0; a < d; ++a) v *= axes[a](mi[a], mj[a]);
      omega(i, j) = v;
      omega(j, i) = v;
    }
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (!std::isfinite(omega(i, j))) {
        throw NumericalError("exact_gram: non-finite quadrature value at entry (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
      }
    }
  }
  return omega;
}

GramOperator exact_gram(const BasisDict& dict, const Density& density, const GramOptions& options) {
  if (density.dim() != dict.dim()) throw DimensionError("exact_gram: density dimension != basis dimension");
  const std::string source = density.describe();
  if (options.allow_analytic && is_orthonormal(dict.family()) && density.is_uniform() && options.ridge == 0.0) {
    return GramOperator::identity(dict.size(), GramKind::exact, source);
  }
  Eigen::MatrixXd omega = quadrature_gram(dict, density, options.quad_points);
  const int reference_points = options.quad_points == 200 ? 100 : std::max(200, options.quad_points / 2);
  const Eigen::MatrixXd reference = quadrature_gram(dict, density, reference_points);
  const double scale = std::max(1.0, reference.cwiseAbs().maxCoeff());
  const double gap = (omega - reference).cwiseAbs().maxCoeff();
  if (!(gap <= options.guard_tol * scale)) {
    throw NumericalError("exact_gram: quadrature with " + std::to_string(options.quad_points) +
                         " points disagrees with " + std::to_string(reference_points) + " points by " +
                         std::to_string(gap) + " (increase gram.quad_points)");
  }
  return GramOperator::from_matrix(omega, GramKind::exact, source, options.ridge);
}

GramOperator empirical_gram(const Eigen::Ref<const Eigen::MatrixXd>& Z, std::string source, double ridge) {
  const Eigen::Index n = Z.rows();
  const Eigen::Index k = Z.cols();
  if (n <= k) {
    throw PreconditionError("empirical_gram: need n > k (got n=" + std::to_string(n) + ", k=" + std::to_string(k) +
                            ")");
  }
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(k, k);
  omega.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose(), 1.0 / static_cast<double>(n));
  omega.triangularView<Eigen::StrictlyUpper>() = omega.transpose();
  return GramOperator::from_matrix(omega, GramKind::empirical, std::move(source), ridge, static_cast<long>(n));
}

ConditionReport check_condition_sw(const BasisDict& dict, const GramOperator& gram, const SwThresholds& thresholds,
                                   std::span<const double> nuisance_sups) {
  ConditionReport report;
  const GramDiagnostics diag = gram.diagnostics();
  report.lambda_min = diag.lambda_min;
  report.lambda_max = diag.lambda_max;
  report.cond = diag.cond;

  const int d = dict.dim();
  const int k = dict.size();
  long per_axis = 0;
  if (thresholds.scan_points > 0) {
    per_axis = d == 1 ? thresholds.scan_points
                      : std::max(2L, static_cast<long>(std::floor(std::pow(thresholds.scan_points, 1.0 / d))));
  }
  long total = per_axis > 0 ? 1 : 0;
  for (int a = 0; a < d && per_axis > 0; ++a) total *= per_axis;
  report.scan_size = total;
  if (total == 0) {
    report.empty_scan = true;
  } else {
    std::vector<long> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> z(static_cast<std::size_t>(k));
    const double step = per_axis > 1 ? 1.0 / static_cast<double>(per_axis - 1) : 0.0;
    for (long r = 0; r < total; ++r) {
      for (int a = 0; a < d; ++a) x[a] = std::min(1.0, idx[a] * step);
      dict.eval_point(x, z);
      double zz = 0.0;
      for (double v : z) zz += v * v;
      report.sup_zz = std::max(report.sup_zz, zz);
      for (int a = d - 1; a >= 0; --a) {
        if (++idx[a] < per_axis) break;
        idx[a] = 0;
      }
    }
  }
  report.b_constant = report.empty_scan ? 0.0 : report.sup_zz / k;
  report.eigen_pass = report.lambda_min >= thresholds.lambda_min_floor &&
                      report.lambda_max <= thresholds.lambda_max_ceiling;
  report.b_pass = report.b_constant <= thresholds.b_ceiling;
  for (double s : nuisance_sups) report.nuisance_pass = report.nuisance_pass && std::abs(s) <= thresholds.nuisance_bound;
  report.pass = report.eigen_pass && report.b_pass && report.nuisance_pass;
  return report;
}

}  // namespace hoifkit
