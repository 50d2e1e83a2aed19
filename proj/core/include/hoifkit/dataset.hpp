#pragma once

#include "hoifkit/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hoifkit {

enum class Split : std::uint8_t { train, select, estimate, d1, d2 };

std::string_view to_string(Split split);

/// Records (A, Y, X) belonging to one split, copied out of a Dataset.
struct Sample {
  Eigen::MatrixXd X;
  Eigen::VectorXd A;
  Eigen::VectorXd Y;

  Eigen::Index size() const noexcept { return A.size(); }
};

/// n records of (A, Y, X) with split labels.
class Dataset {
 public:
  Dataset() = default;
  /// Throws DimensionError on inconsistent sizes. All records start in `train`.
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd A, Eigen::VectorXd Y);

  Eigen::Index n() const noexcept { return A_.size(); }
  int d() const noexcept { return static_cast<int>(X_.cols()); }
  const Eigen::MatrixXd& X() const noexcept { return X_; }
  const Eigen::VectorXd& A() const noexcept { return A_; }
  const Eigen::VectorXd& Y() const noexcept { return Y_; }
  const std::vector<Split>& labels() const noexcept { return labels_; }

  /// Shuffle record order with `eng`, then label consecutive blocks by the
  /// given fractions (rounded down; the last split takes the remainder).
  /// Throws ConfigError if fractions do not sum to 1 or a split would be empty.
  void assign_splits(const std::vector<std::pair<Split, double>>& fractions, Engine& eng);

  Eigen::Index count(Split split) const;
  Sample select(Split split) const;
  Sample all() const;

  /// Plain numeric table with a header row naming columns A, Y (optional) and
  /// X1..Xd; comma or whitespace separated. Missing Y is set to A.
  static Dataset read_table(const std::string& path);

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd A_;
  Eigen::VectorXd Y_;
  std::vector<Split> labels_;
};

}  // namespace hoifkit
