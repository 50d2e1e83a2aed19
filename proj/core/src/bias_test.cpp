#include "hoifkit/bias_test.hpp"

#include "hoifkit/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace hoifkit {

double normal_upper_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal quantile: probability must lie in (0,1)");
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(boost::math::complement(standard, p));
}

TestOutcome bias_test(const UStatResult& if_result, const UStatResult& psi1, double alpha, double delta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("test.alpha: must lie in (0,1)");
  if (!(delta >= 0.0)) throw ConfigError("test.delta: must be >= 0");
  if (!(psi1.se > 0.0)) throw DegenerateError("bias_test: standard error of psi1 is zero");
  if (!std::isfinite(if_result.estimate) || !std::isfinite(if_result.se)) {
    throw NumericalError("bias_test: non-finite U-statistic estimate or se");
  }
  TestOutcome t;
  t.alpha = alpha;
  t.delta = delta;
  t.threshold = delta;
  t.if_estimate = if_result.estimate;
  t.if_se = if_result.se;
  t.psi1_se = psi1.se;
  t.z_alpha_half = normal_upper_quantile(alpha / 2.0);
  t.kernel_kind = if_result.kernel_kind;
  t.order = if_result.order;
  t.statistic = std::abs(if_result.estimate) / psi1.se - t.z_alpha_half * if_result.se / psi1.se;
  t.reject = t.statistic > delta;
  return t;
}

}  // namespace hoifkit
