#include "hoifkit/condvar.hpp"

#include "hoifkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hoifkit {

namespace {

SubcubePlan plan_from_m(long n, int d, long m) {
  if (m < 1) m = 1;
  SubcubePlan plan;
  plan.d = d;
  plan.m = m;
  const double log_k = d * std::log(static_cast<double>(m));
  if (log_k > 62.0 * std::log(2.0)) throw ConfigError("condvar: m^d exceeds 2^62 bins");
  std::uint64_t k = 1;
  for (int a = 0; a < d; ++a) k *= static_cast<std::uint64_t>(m);
  plan.k_bins = k;
  plan.edge = 1.0 / static_cast<double>(m);
  plan.gamma = n > 1 ? log_k / std::log(static_cast<double>(n)) : 0.0;
  return plan;
}

}  // namespace

SubcubePlan make_subcube_plan(long n, int d, double gamma) {
  if (n < 2) throw ConfigError("condvar: need n >= 2");
  if (d < 1) throw ConfigError("condvar: d must be >= 1");
  if (!(gamma > 1.0)) throw ConfigError("condvar.gamma: must be > 1 (got " + std::to_string(gamma) + ")");
  const double m_real = std::pow(static_cast<double>(n), gamma / d);
  // Guard against ceil of values like 49.000000000001 from pow rounding.
  const long m = static_cast<long>(std::ceil(m_real * (1.0 - 1e-12)));
  return plan_from_m(n, d, m);
}

SubcubePlan optimal_subcube_plan(long n, int d, double s) {
  if (n < 2) throw ConfigError("condvar: need n >= 2");
  if (!(s > 0.0)) throw ConfigError("condvar.s: smoothness must be > 0");
  const double k = std::pow(static_cast<double>(n), 2.0 / (1.0 + 4.0 * s / d));
  const long m = static_cast<long>(std::ceil(std::pow(k, 1.0 / d) * (1.0 - 1e-12)));
  return plan_from_m(n, d, m);
}

SubcubeResult subcube_variance(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& Y,
                               SubcubePlan plan, Engine& eng, const SubcubeOptions& options) {
  const Eigen::Index n = X.rows();
  if (Y.size() != n) throw DimensionError("subcube_variance: rows of X != length of Y");
  if (X.cols() != plan.d) throw DimensionError("subcube_variance: columns of X != plan dimension");
  if (n < 2) throw InsufficientDataError("subcube_variance: need n >= 2");

  std::vector<std::uint64_t> id(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint64_t lin = 0;
    for (int a = plan.d - 1; a >= 0; --a) {
      const double x = X(i, a);
      if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("subcube_variance: row " + std::to_string(i) + " lies outside [0,1]^d", static_cast<long>(i));
      }
      const long cell = std::min(static_cast<long>(std::floor(x * static_cast<double>(plan.m))), plan.m - 1);
      lin = lin * static_cast<std::uint64_t>(plan.m) + static_cast<std::uint64_t>(cell);
    }
    id[static_cast<std::size_t>(i)] = lin;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return id[static_cast<std::size_t>(l)] < id[static_cast<std::size_t>(r)]; });

  SubcubeResult res;
  plan.occupancy.assign(2, 0);
  double acc = 0.0;
  long used = 0;
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    const std::uint64_t bin = id[static_cast<std::size_t>(order[start])];
    while (end < order.size() && id[static_cast<std::size_t>(order[end])] == bin) ++end;
    const std::size_t c = end - start;
    if (plan.occupancy.size() <= c) plan.occupancy.resize(c + 1, 0);
    ++plan.occupancy[c];
    if (c >= 2) {
      if (options.all_pairs) {
        double s = 0.0;
        double ss = 0.0;
        for (std::size_t t = start; t < end; ++t) {
          const double v = Y[order[t]];
          s += v;
          ss += v * v;
        }
        const double cd = static_cast<double>(c);
        acc += (ss - s * s / cd) / (cd - 1.0);
      } else {
        const auto u = uniform_below(eng, c);
        auto v = uniform_below(eng, c - 1);
        if (v >= u) ++v;
        const double diff = Y[order[start + u]] - Y[order[start + v]];
        acc += 0.5 * diff * diff;
      }
      ++used;
    }
    start = end;
  }
  if (used == 0) {
    throw EmptyDesignError("subcube_variance: no sub-cube holds two or more points (k_bins=" +
                           std::to_string(plan.k_bins) + ", n=" + std::to_string(n) + ")");
  }
  res.sigma2_hat = acc / static_cast<double>(used);
  res.bins_used = used;
  res.plan = std::move(plan);
  return res;
}

}  // namespace hoifkit
