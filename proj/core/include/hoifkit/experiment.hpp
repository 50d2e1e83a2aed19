#pragma once

#include "hoifkit/basis.hpp"
#include "hoifkit/error.hpp"
#include "hoifkit/hoif.hpp"
#include "hoifkit/simlab.hpp"
#include "hoifkit/universal.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hoifkit {

inline constexpr std::string_view kSchemaVersion = "1";
inline constexpr std::string_view kVersion = "0.1.0";

/// Rule for a basis size as a function of the total sample size n and the
/// nuisance size k*:
///   fixed:v        k = v
///   n_over_log3    k = ceil(n / ln(n)^3)
///   n_over:c       k = ceil(n / c)
///   n_pow:e        k = ceil(n^e)
///   window:t       k = ceil(k* (W/k*)^t) with W = k*^2 / sqrt(n)  (t in (0,1) lies inside the window)
///   window_mult:c  k = ceil(c W)
struct KRule {
  enum class Kind { fixed, n_over_log3, n_over, n_pow, window, window_mult };
  Kind kind = Kind::fixed;
  double value = 40.0;

  static KRule parse(std::string_view text);  ///< Throws ConfigError.
  std::string describe() const;
  int resolve(long n, int kstar) const;
};

enum class ExperimentKind { bias, universal, condvar };
enum class NuisanceMode {
  fit,    ///< least squares on the train split of every replication
  truth,  ///< p_hat = p, b_hat = b (exact null)
  fixed   ///< fitted once on an independent training sample, shared by all replications
};

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);
std::string_view to_string(NuisanceMode mode);
NuisanceMode parse_nuisance_mode(std::string_view name);

struct ExperimentConfig {
  std::string id = "experiment";
  ExperimentKind kind = ExperimentKind::bias;
  FunctionalVariant variant = FunctionalVariant::cond_variance;
  Noise noise = Noise::gaussian;
  std::vector<long> n_grid{1000};
  int d = 1;
  TruthSpec truth;    ///< p
  TruthSpec truth_b;  ///< b (cond_covariance)
  double rho = 0.5;   ///< gaussian cond_covariance noise correlation

  NuisanceMode nuisance = NuisanceMode::fit;
  Family nuisance_family = Family::fourier;
  double kstar_exponent = 0.0;  ///< k* = ceil(n^e); 0 means e = 1/(1+2s)
  long fixed_train_size = 0;    ///< fixed mode; 0 means the train fraction of n

  Family test_family = Family::fourier;
  KRule k_test;
  KRule k_kbw{KRule::Kind::window, 0.5};
  std::vector<std::string> statistics{"chi_k"};  ///< subset of chi_k, chi_33, kbw
  double frac_train = 0.5;
  double frac_select = 0.0;
  double frac_estimate = 0.5;
  double alpha = 0.05;
  double delta = 0.0;
  VarianceMode variance = VarianceMode::automatic;

  // universal
  double frac_d1 = 0.5;  ///< share of records in D1 (the rest form D2)
  bool profile = true;
  bool wald = true;

  // condvar
  double condvar_s = 0.3;
  int condvar_levels = 20;
  double condvar_amplitude = 1.0;
  double sigma = 1.0;
  double gamma = 0.0;  ///< 0 selects the rate-optimal bin count
  bool all_pairs = false;

  long reps = 100;
  std::uint64_t seed = 1;
  double max_failure_rate = 0.01;
  int quad_points = 200;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Canonical text of every field, defaults included; hashed for provenance.
std::string canonical_text(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

struct Metric {
  std::string name;
  long k = 0;  ///< basis size (or bin count) the metric refers to
  double value = 0.0;
};

struct RepRecord {
  long n = 0;
  long rep = 0;
  bool ok = true;
  std::string error;
  std::vector<Metric> metrics;
};

struct AggregateRow {
  long n = 0;
  long k = 0;
  std::string statistic;
  double value = 0.0;
  double mc_se = 0.0;
  long n_reps = 0;
};

struct ExperimentResult {
  std::string experiment_id;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string version{kVersion};
  std::vector<RepRecord> records;
  std::vector<AggregateRow> aggregate;
  long failures = 0;

  /// Aggregate value for (n, statistic); throws PreconditionError if absent.
  const AggregateRow& row(long n, std::string_view statistic) const;
};

/// Raised when more than max_failure_rate of replications fail.
class ExperimentAborted : public Error {
 public:
  using Error::Error;
};

/// Runs reps x n_grid replications on `threads` workers (0 = hardware
/// concurrency). Replication r at size n draws from streams keyed by
/// (seed, r, purpose/n), and results are folded in (n, r) order, so the output
/// does not depend on the worker count.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);

/// Aggregate table from per-replication records: per (n, metric) the mean over
/// successful replications with mc_se = sd / sqrt(reps). Metrics named
/// "*sq_error" also yield "*rmse" (delta-method se) and, across n, an
/// "*rmse_slope" row at n = 0 holding the log-log slope of rmse on n.
std::vector<AggregateRow> aggregate_records(const std::vector<RepRecord>& records);

/// One JSON object per replication:
///   {"schema", "experiment_id", "n", "rep", "ok", "error", "metrics": [{"name", "k", "value"}, ...]}
void write_records_jsonl(std::ostream& out, const ExperimentResult& result);
/// experiment_id,n,k,statistic_name,value,mc_se,n_reps
void write_aggregate_csv(std::ostream& out, const ExperimentResult& result);

/// Runs fn(i) for i in [0, count) on up to `threads` workers; exceptions are rethrown after joining.
void parallel_for(long count, int threads, const std::function<void(long)>& fn);

}  // namespace hoifkit
