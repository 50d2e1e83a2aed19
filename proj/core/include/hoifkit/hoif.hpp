#pragma once

#include "hoifkit/dataset.hpp"
#include "hoifkit/field.hpp"
#include "hoifkit/gram.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <string_view>

namespace hoifkit {

enum class FunctionalVariant { cond_covariance, cond_variance };
/// `first_order` tags the DRML estimate; the others tag U-statistic kernels.
enum class KernelKind { first_order, oracle_gram, empirical_gram, kbw };

std::string_view to_string(FunctionalVariant v);
FunctionalVariant parse_variant(std::string_view name);
std::string_view to_string(KernelKind kind);

/// Nuisance estimates. For cond_variance Y := A and b_hat := p_hat.
struct NuisancePair {
  Field p_hat;
  Field b_hat;
  FunctionalVariant variant = FunctionalVariant::cond_covariance;

  static NuisancePair cond_covariance(Field p_hat, Field b_hat);
  static NuisancePair cond_variance(Field p_hat);
};

struct Residuals {
  Eigen::VectorXd a;  ///< A - p_hat(X)
  Eigen::VectorXd y;  ///< Y - b_hat(X), or A - p_hat(X) for cond_variance
};

Residuals residuals(const Sample& sample, const NuisancePair& nuis);

struct UStatResult {
  double estimate = 0.0;
  double se = 0.0;
  int order = 1;
  KernelKind kernel_kind = KernelKind::first_order;
  long n_used = 0;
  std::map<std::string, double> diagnostics;
};

/// `automatic` uses the exact plug-in up to `incomplete_threshold` records and
/// the lag-pair incomplete variant beyond it.
enum class VarianceMode { automatic, exact, incomplete, none };

struct UStatOptions {
  VarianceMode variance = VarianceMode::automatic;
  long incomplete_threshold = 10000;
  int incomplete_lags = 8;
};

/// psi_1 = mean of (A - p_hat)(Y - b_hat); se = sd / sqrt(n).
/// Throws InsufficientDataError if n < 2.
UStatResult drml_psi1(const Eigen::Ref<const Eigen::VectorXd>& resid_a, const Eigen::Ref<const Eigen::VectorXd>& resid_y);
UStatResult drml_psi1(const Sample& est, const NuisancePair& nuis);

/// Second-order U-statistic
///   (1/(n(n-1))) sum_{i != j} a_i z_i' Omega^{-1} z_j y_j
/// computed as S_a' Omega^{-1} S_y minus the diagonal, O(nk) after whitening
/// (whitening is O(nk^2) for dense operators, free for the identity).
/// se by the order-2 Hoeffding plug-in
///   (4/n) var(h_i) + (2/(n(n-1))) mean_{i != j} K_ij^2.
UStatResult if22(const Eigen::Ref<const Eigen::VectorXd>& resid_a, const Eigen::Ref<const Eigen::VectorXd>& resid_y,
                 const Eigen::Ref<const Eigen::MatrixXd>& Z, const GramOperator& gram, const UStatOptions& options = {});

/// if22 with an empirical (training-split) Gram plus the third-order term
///   T3 = (1/(n(n-1)(n-2))) sum_{distinct} a_1 z_1' Ohat^{-1}(Ohat - z_2 z_2')Ohat^{-1} z_3 y_3
/// by inclusion-exclusion over coincident indices, O(nk^2).
UStatResult if22_to_33(const Eigen::Ref<const Eigen::VectorXd>& resid_a, const Eigen::Ref<const Eigen::VectorXd>& resid_y,
                       const Eigen::Ref<const Eigen::MatrixXd>& Z, const GramOperator& emp_gram,
                       const UStatOptions& options = {});

/// beta_hat = Omega^{-1} (1/n) sum z_i r_i over the selection split.
Eigen::VectorXd fit_fhat(const Eigen::Ref<const Eigen::VectorXd>& resid_a_sel,
                         const Eigen::Ref<const Eigen::MatrixXd>& Z_sel, const GramOperator& gram);

/// Omega_f = B' Omega_k B for the k x m coefficient matrix B of fitted directions,
/// i.e. E_g[f f'] under the density that defines Omega_k.
/// Throws DegenerateAggregateError if Omega_f is singular (e.g. f == 0).
GramOperator kbw_omega(const Eigen::Ref<const Eigen::MatrixXd>& betas, const GramOperator& omega_k);

/// The aggregated statistic: if22 with F (n x m evaluations of f_hat on the
/// estimation split) in place of Z and Omega_f in place of Omega_k.
/// Throws DegenerateAggregateError if F is identically zero.
UStatResult if22_kbw(const Eigen::Ref<const Eigen::VectorXd>& resid_a, const Eigen::Ref<const Eigen::VectorXd>& resid_y,
                     const Eigen::Ref<const Eigen::MatrixXd>& F, const GramOperator& omega_f,
                     const UStatOptions& options = {});

struct KbwDiagnostics {
  double delta_num = 0.0;
  double delta_denom = 0.0;          ///< with z' Omega^{-1} z in the diagonal term
  double delta_denom_literal = 0.0;  ///< with z'z, as displayed without Omega^{-1}
  double bias_k = 0.0;
  double ratio = 0.0;                ///< (bias^2 + delta_num) / (bias + delta_denom)
  double conditional_mean = 0.0;     ///< (beta' Omega beta_hat)^2 / (beta_hat' Omega beta_hat)
};

/// Selection-split diagnostics. `beta_true` holds the coefficients of
/// Pi[p - p_hat | z_k] and `bias_k` the oracle truncated bias (simulation only).
KbwDiagnostics kbw_diagnostics(const Eigen::Ref<const Eigen::VectorXd>& resid_a_sel,
                               const Eigen::Ref<const Eigen::MatrixXd>& Z_sel, const GramOperator& gram,
                               const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                               const Eigen::Ref<const Eigen::VectorXd>& beta_true, double bias_k);

/// Work limit of the naive double loop, in units of n^2 k multiply-adds.
inline constexpr double kNaiveWorkBudget = 4e9;

/// Explicit O(n^2 k) double loop (reference path). Throws BudgetError when
/// n^2 k exceeds kNaiveWorkBudget.
double if22_naive(const Eigen::Ref<const Eigen::VectorXd>& resid_a, const Eigen::Ref<const Eigen::VectorXd>& resid_y,
                  const Eigen::Ref<const Eigen::MatrixXd>& Z, const GramOperator& gram);

}  // namespace hoifkit
