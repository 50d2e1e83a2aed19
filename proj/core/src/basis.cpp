#include "hoifkit/basis.hpp"

#include "hoifkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hoifkit {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Frequencies between exact re-anchoring of the cos/sin rotation recurrence.
constexpr int kFourierAnchor = 16;

void fourier_axis(double x, std::span<double> out) {
  const int m = static_cast<int>(out.size());
  if (m == 0) return;
  out[0] = 1.0;
  const double c1 = std::cos(kTwoPi * x);
  const double s1 = std::sin(kTwoPi * x);
  double c = c1;
  double s = s1;
  for (int freq = 1;; ++freq) {
    if (freq % kFourierAnchor == 0) {
      c = std::cos(kTwoPi * freq * x);
      s = std::sin(kTwoPi * freq * x);
    }
    const int jc = 2 * freq - 1;
    if (jc >= m) break;
    out[jc] = kSqrt2 * c;
    if (jc + 1 >= m) break;
    out[jc + 1] = kSqrt2 * s;
    const double cn = c * c1 - s * s1;
    s = s * c1 + c * s1;
    c = cn;
  }
}

void legendre_axis(double x, std::span<double> out) {
  const int m = static_cast<int>(out.size());
  if (m == 0) return;
  const double t = 2.0 * x - 1.0;
  double p_prev = 1.0;
  double p = t;
  out[0] = 1.0;
  if (m > 1) out[1] = std::sqrt(3.0) * t;
  for (int j = 1; j + 1 < m; ++j) {
    const double p_next = ((2.0 * j + 1.0) * t * p - j * p_prev) / (j + 1.0);
    p_prev = p;
    p = p_next;
    out[j + 1] = std::sqrt(2.0 * (j + 1) + 1.0) * p;
  }
}

double haar_value(int j, double x) {
  if (j == 0) return 1.0;
  int level = 0;
  while ((2 << level) <= j) ++level;
  const int shift = j - (1 << level);
  const double cells = static_cast<double>(1 << level);
  const double scale = std::sqrt(cells);
  const double lo = shift / cells;
  const double mid = (shift + 0.5) / cells;
  const double hi = (shift + 1.0) / cells;
  // Half-open support [lo, hi); the last cell is closed at x = 1.
  const bool last = (shift == (1 << level) - 1);
  if (x < lo) return 0.0;
  if (x < mid) return scale;
  if (x < hi || (last && x <= 1.0)) return -scale;
  return 0.0;
}

void haar_axis(double x, std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = haar_value(static_cast<int>(j), x);
}

void monomial_axis(double x, std::span<double> out) {
  double v = 1.0;
  for (auto& o : out) {
    o = v;
    v *= x;
  }
}

// Cox-de Boor evaluation of the `order` non-zero B-splines at x.
void bspline_axis(double x, int order, const std::vector<double>& knots, std::span<double> out) {
  const int m = static_cast<int>(out.size());
  std::fill(out.begin(), out.end(), 0.0);
  // Span s with knots[s] <= x < knots[s+1], restricted to [order-1, m-1].
  int span = order - 1;
  {
    const auto first = knots.begin() + order;
    const auto last = knots.begin() + m;
    span = static_cast<int>(std::upper_bound(first, last, x) - knots.begin()) - 1;
    span = std::clamp(span, order - 1, m - 1);
  }
  double local[32];
  double left[32];
  double right[32];
  local[0] = 1.0;
  for (int j = 1; j < order; ++j) {
    left[j] = x - knots[span + 1 - j];
    right[j] = knots[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? local[r] / denom : 0.0;
      local[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    local[j] = saved;
  }
  for (int r = 0; r < order; ++r) out[span - order + 1 + r] = local[r];
}

std::vector<int> total_degree_indices(int k, int d, int cap) {
  std::vector<int> result;
  result.reserve(static_cast<std::size_t>(k) * d);
  if (d == 1) {
    for (int j = 0; j < k; ++j) result.push_back(j);
    return result;
  }
  std::vector<int> idx(d, 0);
  int found = 0;
  for (int total = 0; found < k; ++total) {
    // Enumerate compositions of `total` into d parts bounded by cap-1, in
    // lexicographic order of (i_1, ..., i_d).
    std::fill(idx.begin(), idx.end(), 0);
    bool any = false;
    auto recurse = [&](auto&& self, int axis, int remaining) -> void {
      if (found >= k) return;
      if (axis == d - 1) {
        if (remaining < cap) {
          idx[axis] = remaining;
          result.insert(result.end(), idx.begin(), idx.end());
          ++found;
          any = true;
        }
        return;
      }
      for (int v = 0; v <= std::min(remaining, cap - 1); ++v) {
        idx[axis] = v;
        self(self, axis + 1, remaining - v);
        if (found >= k) return;
      }
    };
    recurse(recurse, 0, total);
    if (!any && total > d * cap) break;
  }
  return result;
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::fourier: return "fourier";
    case Family::legendre: return "legendre";
    case Family::bspline: return "bspline";
    case Family::haar: return "haar";
    case Family::monomial: return "monomial";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "fourier") return Family::fourier;
  if (name == "legendre") return Family::legendre;
  if (name == "bspline") return Family::bspline;
  if (name == "haar") return Family::haar;
  if (name == "monomial") return Family::monomial;
  throw ConfigError("basis.family: unknown family '" + std::string(name) +
                    "' (expected fourier|legendre|bspline|haar|monomial)");
}

bool is_orthonormal(Family family) {
  return family == Family::fourier || family == Family::legendre || family == Family::haar;
}

BasisDict BasisDict::make(Family family, int k, int d, BasisOptions options) {
  if (k < 1) throw ConfigError("basis.k: must be >= 1 (got " + std::to_string(k) + ")");
  if (d < 1) throw ConfigError("basis.d: must be >= 1 (got " + std::to_string(d) + ")");
  BasisDict dict;
  dict.family_ = family;
  dict.k_ = k;
  dict.d_ = d;

  int cap = k;  // per-axis 1-D sequence length
  if (family == Family::bspline) {
    const int order = options.order;
    if (order < 1 || order > 20) {
      throw ConfigError("basis.order: bspline order must be in [1, 20] (got " +
                        std::to_string(order) + ")");
    }
    int m = k;
    if (d > 1) {
      m = static_cast<int>(std::lround(std::pow(static_cast<double>(k), 1.0 / d)));
      long long full = 1;
      for (int a = 0; a < d; ++a) full *= m;
      if (full != k) {
        throw ConfigError("basis.k: bspline with d > 1 requires k = m^d for an integer m (got k=" +
                          std::to_string(k) + ", d=" + std::to_string(d) + ")");
      }
    }
    if (m < order) {
      throw ConfigError("basis.k: bspline requires per-axis size >= order (got " +
                        std::to_string(m) + " < " + std::to_string(order) + ")");
    }
    dict.order_ = order;
    cap = m;
    const int interior = m - order;
    dict.knots_.assign(order, 0.0);
    for (int i = 1; i <= interior; ++i) dict.knots_.push_back(static_cast<double>(i) / (interior + 1));
    dict.knots_.insert(dict.knots_.end(), order, 1.0);
  }
  if (family == Family::haar && k > (1 << 24)) {
    throw ConfigError("basis.k: haar dictionaries are limited to 2^24 functions");
  }
  dict.index_ = total_degree_indices(k, d, cap);
  if (static_cast<int>(dict.index_.size()) != k * d) {
    throw ConfigError("basis.k: cannot form " + std::to_string(k) + " tensor functions");
  }
  int max_index = 0;
  for (int v : dict.index_) max_index = std::max(max_index, v);
  dict.axis_size_ = (family == Family::bspline) ? cap : max_index + 1;
  return dict;
}

std::span<const int> BasisDict::multi_index(int j) const {
  return {index_.data() + static_cast<std::size_t>(j) * d_, static_cast<std::size_t>(d_)};
}

void BasisDict::eval_axis(double x, std::span<double> out) const {
  switch (family_) {
    case Family::fourier: fourier_axis(x, out); break;
    case Family::legendre: legendre_axis(x, out); break;
    case Family::haar: haar_axis(x, out); break;
    case Family::monomial: monomial_axis(x, out); break;
    case Family::bspline: bspline_axis(x, order_, knots_, out); break;
  }
}

void BasisDict::eval_point(std::span<const double> x, std::span<double> out) const {
  if (d_ == 1) {
    if (axis_size_ == k_) {
      eval_axis(x[0], out.first(static_cast<std::size_t>(k_)));
    } else {
      std::vector<double> axis(static_cast<std::size_t>(axis_size_));
      eval_axis(x[0], axis);
      for (int j = 0; j < k_; ++j) out[j] = axis[index_[j]];
    }
    return;
  }
  std::vector<double> axis(static_cast<std::size_t>(axis_size_) * d_);
  for (int a = 0; a < d_; ++a) {
    eval_axis(x[a], std::span<double>(axis.data() + static_cast<std::size_t>(a) * axis_size_,
                                      static_cast<std::size_t>(axis_size_)));
  }
  for (int j = 0; j < k_; ++j) {
    double v = 1.0;
    const int* mi = index_.data() + static_cast<std::size_t>(j) * d_;
    for (int a = 0; a < d_; ++a) v *= axis[static_cast<std::size_t>(a) * axis_size_ + mi[a]];
    out[j] = v;
  }
}

void BasisDict::check_domain(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  if (X.cols() != d_) {
    throw DimensionError("basis eval: X has " + std::to_string(X.cols()) + " columns, dictionary d=" +
                         std::to_string(d_));
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index a = 0; a < X.cols(); ++a) {
      const double v = X(i, a);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError("basis eval: row " + std::to_string(i) + " coordinate " + std::to_string(a) +
                              " = " + std::to_string(v) + " is outside [0,1]",
                          static_cast<long>(i));
      }
    }
  }
}

Eigen::MatrixXd BasisDict::eval(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  check_domain(X);
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd Z(n, k_);
  constexpr Eigen::Index kBlock = 256;
  Eigen::MatrixXd buffer(k_, kBlock);
  std::vector<double> x(static_cast<std::size_t>(d_));
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index len = std::min(kBlock, n - start);
    for (Eigen::Index r = 0; r < len; ++r) {
      for (int a = 0; a < d_; ++a) x[a] = X(start + r, a);
      eval_point(x, std::span<double>(buffer.col(r).data(), static_cast<std::size_t>(k_)));
    }
    Z.middleRows(start, len) = buffer.leftCols(len).transpose();
  }
  return Z;
}

Eigen::VectorXd BasisDict::combine(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& coef) const {
  if (coef.size() != k_) throw DimensionError("basis combine: coefficient length != k");
  check_domain(X);
  Eigen::VectorXd out(X.rows());
  Eigen::VectorXd z(k_);
  std::vector<double> x(static_cast<std::size_t>(d_));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (int a = 0; a < d_; ++a) x[a] = X(i, a);
    eval_point(x, std::span<double>(z.data(), static_cast<std::size_t>(k_)));
    out[i] = z.dot(coef);
  }
  return out;
}

Eigen::VectorXd BasisDict::moments(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (w.size() != X.rows()) throw DimensionError("basis moments: weight length != rows of X");
  check_domain(X);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(k_);
  Eigen::VectorXd z(k_);
  std::vector<double> x(static_cast<std::size_t>(d_));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (int a = 0; a < d_; ++a) x[a] = X(i, a);
    eval_point(x, std::span<double>(z.data(), static_cast<std::size_t>(k_)));
    acc.noalias() += w[i] * z;
  }
  return acc;
}

std::vector<double> BasisDict::breakpoints() const {
  switch (family_) {
    case Family::bspline: {
      std::vector<double> b(knots_.begin() + order_ - 1, knots_.end() - order_ + 1);
      return b;
    }
    case Family::haar: {
      int level = 0;
      while ((2 << level) <= axis_size_ - 1) ++level;
      const int cells = axis_size_ > 1 ? (2 << level) : 1;
      std::vector<double> b;
      for (int i = 0; i <= cells; ++i) b.push_back(static_cast<double>(i) / cells);
      return b;
    }
    default: return {0.0, 1.0};
  }
}

std::string BasisDict::describe() const {
  std::string s = std::string(to_string(family_)) + "(k=" + std::to_string(k_) + ",d=" + std::to_string(d_);
  if (family_ == Family::bspline) s += ",order=" + std::to_string(order_);
  return s + ")";
}

}  // namespace hoifkit
