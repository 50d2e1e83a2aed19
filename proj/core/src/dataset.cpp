#include "hoifkit/dataset.hpp"

#include "hoifkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hoifkit {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::select: return "select";
    case Split::estimate: return "estimate";
    case Split::d1: return "d1";
    case Split::d2: return "d2";
  }
  return "unknown";
}

Dataset::Dataset(Eigen::MatrixXd X, Eigen::VectorXd A, Eigen::VectorXd Y)
    : X_(std::move(X)), A_(std::move(A)), Y_(std::move(Y)) {
  if (X_.rows() != A_.size() || Y_.size() != A_.size()) {
    throw DimensionError("dataset: X, A and Y must have the same number of records");
  }
  labels_.assign(static_cast<std::size_t>(A_.size()), Split::train);
}

void Dataset::assign_splits(const std::vector<std::pair<Split, double>>& fractions, Engine& eng) {
  if (fractions.empty()) throw ConfigError("splits: no fractions given");
  double total = 0.0;
  for (const auto& [split, f] : fractions) {
    if (!(f > 0.0)) throw ConfigError("splits: fraction for '" + std::string(to_string(split)) + "' must be > 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("splits: fractions must sum to 1");

  const Eigen::Index n = this->n();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(uniform_below(eng, static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[i], perm[j]);
  }
  Eigen::MatrixXd X(n, X_.cols());
  Eigen::VectorXd A(n), Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = X_.row(perm[i]);
    A[i] = A_[perm[i]];
    Y[i] = Y_[perm[i]];
  }
  X_ = std::move(X);
  A_ = std::move(A);
  Y_ = std::move(Y);

  Eigen::Index start = 0;
  for (std::size_t s = 0; s < fractions.size(); ++s) {
    const Eigen::Index len = (s + 1 == fractions.size())
                                 ? n - start
                                 : static_cast<Eigen::Index>(std::floor(fractions[s].second * n + 1e-9));
    if (len <= 0) {
      throw ConfigError("splits: split '" + std::string(to_string(fractions[s].first)) + "' would be empty (n=" +
                        std::to_string(n) + ")");
    }
    std::fill(labels_.begin() + start, labels_.begin() + start + len, fractions[s].first);
    start += len;
  }
}

Eigen::Index Dataset::count(Split split) const {
  return static_cast<Eigen::Index>(std::count(labels_.begin(), labels_.end(), split));
}

Sample Dataset::select(Split split) const {
  const Eigen::Index m = count(split);
  Sample s{Eigen::MatrixXd(m, X_.cols()), Eigen::VectorXd(m), Eigen::VectorXd(m)};
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (labels_[static_cast<std::size_t>(i)] != split) continue;
    s.X.row(r) = X_.row(i);
    s.A[r] = A_[i];
    s.Y[r] = Y_[i];
    ++r;
  }
  return s;
}

Sample Dataset::all() const { return Sample{X_, A_, Y_}; }

Dataset Dataset::read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("data: cannot open '" + path + "'");
  auto split_line = [](std::string line) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;) out.push_back(tok);
    return out;
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("data: '" + path + "' is empty");
  const auto header = split_line(line);
  int col_a = -1, col_y = -1;
  std::vector<int> col_x;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[c];
    if (h == "A") col_a = c;
    else if (h == "Y") col_y = c;
    else if (h.size() > 1 && h[0] == 'X') {
      const int idx = std::stoi(h.substr(1));
      if (idx < 1) throw ConfigError("data: bad column name '" + h + "'");
      if (static_cast<int>(col_x.size()) < idx) col_x.resize(idx, -1);
      col_x[idx - 1] = c;
    }
  }
  if (col_a < 0) throw ConfigError("data: missing column 'A'");
  if (col_x.empty() || std::find(col_x.begin(), col_x.end(), -1) != col_x.end()) {
    throw ConfigError("data: covariate columns must be X1..Xd without gaps");
  }
  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_line(line);
    if (tok.empty()) continue;
    if (tok.size() != header.size()) {
      throw ConfigError("data: line " + std::to_string(line_no) + " has " + std::to_string(tok.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> v(tok.size());
    for (std::size_t c = 0; c < tok.size(); ++c) v[c] = std::stod(tok[c]);
    rows.push_back(std::move(v));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const int d = static_cast<int>(col_x.size());
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd A(n), Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    A[i] = r[col_a];
    Y[i] = col_y >= 0 ? r[col_y] : r[col_a];
    for (int a = 0; a < d; ++a) X(i, a) = r[col_x[a]];
  }
  return Dataset(std::move(X), std::move(A), std::move(Y));
}

}  // namespace hoifkit
