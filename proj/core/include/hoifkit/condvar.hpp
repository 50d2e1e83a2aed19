#pragma once

#include "hoifkit/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace hoifkit {

/// Partition of [0,1]^d into m^d equal cubes. Cell j on an axis is [j/m, (j+1)/m),
/// with the last cell closed at 1.
struct SubcubePlan {
  int d = 1;
  long m = 1;                  ///< cells per axis
  std::uint64_t k_bins = 1;    ///< m^d
  double gamma = 0.0;          ///< log(k_bins) / log(n) as realized
  double edge = 1.0;           ///< 1/m
  /// occupancy[c] = number of bins holding exactly c points (c >= 1);
  /// empty bins number k_bins - sum(occupancy).
  std::vector<long> occupancy;
};

/// m = ceil(n^{gamma/d}). Throws ConfigError unless gamma > 1 (use
/// optimal_subcube_plan for the rate-optimal choice).
SubcubePlan make_subcube_plan(long n, int d, double gamma);
/// k = n^{2/(1 + 4s/d)} realized as m^d with m = ceil(k^{1/d}) (oracle smoothness s).
SubcubePlan optimal_subcube_plan(long n, int d, double s);

struct SubcubeResult {
  double sigma2_hat = 0.0;
  long bins_used = 0;  ///< bins holding two or more points
  SubcubePlan plan;
};

struct SubcubeOptions {
  /// Non-default variant: average all pairs within each bin instead of one random pair.
  bool all_pairs = false;
};

/// Random-design sub-cube estimator of a homoscedastic conditional variance:
/// in every bin with at least two points, one unordered pair drawn uniformly
/// without replacement contributes (Y_i - Y_j)^2 / 2; the estimate averages
/// over such bins. Bins are visited in increasing linear index.
/// Throws EmptyDesignError if no bin holds two points, DomainError for X outside [0,1]^d.
SubcubeResult subcube_variance(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                               SubcubePlan plan, Engine& eng, const SubcubeOptions& options = {});

}  // namespace hoifkit
