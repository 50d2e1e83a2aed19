#include "hoifkit/experiment.hpp"

#include "hoifkit/bias_test.hpp"
#include "hoifkit/condvar.hpp"
#include "hoifkit/projection.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace hoifkit {

namespace {

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string exact_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int ceil_int(double x) { return std::max(1, static_cast<int>(std::ceil(x - 1e-9))); }

}  // namespace

KRule KRule::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string head(text.substr(0, colon));
  const std::string tail = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
  auto value = [&](const char* what) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tail, &used);
      if (used != tail.size() || !(v > 0.0)) throw std::invalid_argument("bad");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("k rule '" + std::string(text) + "': " + what + " needs a positive number");
    }
  };
  KRule r;
  if (colon == std::string_view::npos && !head.empty() && std::isdigit(static_cast<unsigned char>(head[0]))) {
    r.kind = Kind::fixed;
    try {
      std::size_t used = 0;
      r.value = std::stod(head, &used);
      if (used != head.size() || r.value < 1.0) throw std::invalid_argument("bad");
    } catch (const std::exception&) {
      throw ConfigError("k rule '" + std::string(text) + "': fixed size must be an integer >= 1");
    }
    return r;
  }
  if (head == "fixed") {
    r.kind = Kind::fixed;
    r.value = value("fixed");
  } else if (head == "n_over_log3") {
    r.kind = Kind::n_over_log3;
    r.value = 0.0;
  } else if (head == "n_over") {
    r.kind = Kind::n_over;
    r.value = value("n_over");
  } else if (head == "n_pow") {
    r.kind = Kind::n_pow;
    r.value = value("n_pow");
  } else if (head == "window") {
    r.kind = Kind::window;
    r.value = value("window");
  } else if (head == "window_mult") {
    r.kind = Kind::window_mult;
    r.value = value("window_mult");
  } else {
    throw ConfigError("k rule '" + std::string(text) +
                      "': expected fixed:v, n_over_log3, n_over:c, n_pow:e, window:t or window_mult:c");
  }
  return r;
}

std::string KRule::describe() const {
  switch (kind) {
    case Kind::fixed: return "fixed:" + number(value);
    case Kind::n_over_log3: return "n_over_log3";
    case Kind::n_over: return "n_over:" + number(value);
    case Kind::n_pow: return "n_pow:" + number(value);
    case Kind::window: return "window:" + number(value);
    case Kind::window_mult: return "window_mult:" + number(value);
  }
  return "?";
}

int KRule::resolve(long n, int kstar) const {
  const auto nd = static_cast<double>(n);
  const double w = static_cast<double>(kstar) * kstar / std::sqrt(nd);
  switch (kind) {
    case Kind::fixed: return ceil_int(value);
    case Kind::n_over_log3: return ceil_int(nd / std::pow(std::log(nd), 3.0));
    case Kind::n_over: return ceil_int(nd / value);
    case Kind::n_pow: return ceil_int(std::pow(nd, value));
    case Kind::window: return ceil_int(kstar * std::pow(w / kstar, value));
    case Kind::window_mult: return ceil_int(value * w);
  }
  return 1;
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::bias: return "bias";
    case ExperimentKind::universal: return "universal";
    case ExperimentKind::condvar: return "condvar";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "bias") return ExperimentKind::bias;
  if (name == "universal") return ExperimentKind::universal;
  if (name == "condvar") return ExperimentKind::condvar;
  throw ConfigError("kind: unknown experiment kind '" + std::string(name) + "' (expected bias|universal|condvar)");
}

std::string_view to_string(NuisanceMode mode) {
  switch (mode) {
    case NuisanceMode::fit: return "fit";
    case NuisanceMode::truth: return "truth";
    case NuisanceMode::fixed: return "fixed";
  }
  return "?";
}

NuisanceMode parse_nuisance_mode(std::string_view name) {
  if (name == "fit") return NuisanceMode::fit;
  if (name == "truth") return NuisanceMode::truth;
  if (name == "fixed") return NuisanceMode::fixed;
  throw ConfigError("nuisance.mode: unknown mode '" + std::string(name) + "' (expected fit|truth|fixed)");
}

namespace {

bool wants(const ExperimentConfig& c, std::string_view stat) {
  return std::find(c.statistics.begin(), c.statistics.end(), stat) != c.statistics.end();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (id.empty()) throw ConfigError("id: must not be empty");
  if (n_grid.empty()) throw ConfigError("n: grid must not be empty");
  for (long n : n_grid)
    if (n < 4) throw ConfigError("n: every sample size must be >= 4");
  if (d < 1) throw ConfigError("d: must be >= 1");
  if (reps < 1) throw ConfigError("reps: must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha: must lie in (0,1)");
  if (!(delta >= 0.0)) throw ConfigError("delta: must be >= 0");
  if (!(max_failure_rate >= 0.0 && max_failure_rate < 1.0)) throw ConfigError("max_failure_rate: must lie in [0,1)");
  if (quad_points < 2) throw ConfigError("quad_points: must be >= 2");
  if (!(truth.s > 0.0 && truth.s < 1.0)) throw ConfigError("truth.s: must lie in (0,1)");
  if (truth.J < 1) throw ConfigError("truth.J: must be >= 1");
  if (truth.d != d) throw ConfigError("truth.d: must equal d");
  if (variant == FunctionalVariant::cond_covariance && truth_b.d != d) throw ConfigError("truth_b.d: must equal d");
  if (!(kstar_exponent >= 0.0 && kstar_exponent < 1.0)) throw ConfigError("nuisance.kstar_exponent: must lie in [0,1)");

  if (kind == ExperimentKind::bias) {
    for (const auto& s : statistics)
      if (s != "chi_k" && s != "chi_33" && s != "kbw")
        throw ConfigError("statistics: unknown statistic '" + s + "' (expected chi_k|chi_33|kbw)");
    const double sum = frac_train + frac_select + frac_estimate;
    if (frac_train < 0.0 || frac_select < 0.0 || !(frac_estimate > 0.0) || std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("split: fractions must be non-negative, estimate > 0, and sum to 1");
    if (nuisance == NuisanceMode::fit && !(frac_train > 0.0))
      throw ConfigError("split.train: must be > 0 when nuisances are fitted");
    if (wants(*this, "chi_33") && !(frac_train > 0.0)) throw ConfigError("split.train: chi_33 needs a training split");
    if (wants(*this, "kbw") && !(frac_select > 0.0)) throw ConfigError("split.select: kbw needs a selection split");
  } else if (kind == ExperimentKind::universal) {
    if (!(frac_d1 > 0.0 && frac_d1 < 1.0)) throw ConfigError("split.d1: must lie in (0,1)");
  } else {
    if (!(condvar_s > 0.0 && condvar_s < 1.0)) throw ConfigError("condvar.s: must lie in (0,1)");
    if (condvar_levels < 1) throw ConfigError("condvar.levels: must be >= 1");
    if (!(sigma > 0.0)) throw ConfigError("condvar.sigma: must be > 0");
    if (gamma != 0.0 && !(gamma > 1.0)) throw ConfigError("condvar.gamma: must be > 1 (or 0 for the optimal rule)");
  }
}

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream o;
  auto truth = [&](const char* key, const TruthSpec& t) {
    o << key << ".s=" << exact_number(t.s) << '\n'
      << key << ".J=" << t.J << '\n'
      << key << ".amplitude=" << exact_number(t.amplitude) << '\n'
      << key << ".family=" << to_string(t.family) << '\n'
      << key << ".offset=" << exact_number(t.offset) << '\n'
      << key << ".sign=" << to_string(t.sign) << '\n'
      << key << ".d=" << t.d << '\n';
  };
  o << "schema=" << kSchemaVersion << '\n'
    << "id=" << c.id << '\n'
    << "kind=" << to_string(c.kind) << '\n'
    << "variant=" << to_string(c.variant) << '\n'
    << "noise=" << to_string(c.noise) << '\n'
    << "n=";
  for (std::size_t i = 0; i < c.n_grid.size(); ++i) o << (i ? "," : "") << c.n_grid[i];
  o << "\nd=" << c.d << '\n';
  truth("truth", c.truth);
  truth("truth_b", c.truth_b);
  o << "rho=" << exact_number(c.rho) << '\n'
    << "nuisance.mode=" << to_string(c.nuisance) << '\n'
    << "nuisance.family=" << to_string(c.nuisance_family) << '\n'
    << "nuisance.kstar_exponent=" << exact_number(c.kstar_exponent) << '\n'
    << "nuisance.fixed_train_size=" << c.fixed_train_size << '\n'
    << "test.family=" << to_string(c.test_family) << '\n'
    << "test.k=" << c.k_test.describe() << '\n'
    << "test.k_kbw=" << c.k_kbw.describe() << '\n'
    << "statistics=";
  for (std::size_t i = 0; i < c.statistics.size(); ++i) o << (i ? "," : "") << c.statistics[i];
  o << "\nsplit.train=" << exact_number(c.frac_train) << '\n'
    << "split.select=" << exact_number(c.frac_select) << '\n'
    << "split.estimate=" << exact_number(c.frac_estimate) << '\n'
    << "split.d1=" << exact_number(c.frac_d1) << '\n'
    << "alpha=" << exact_number(c.alpha) << '\n'
    << "delta=" << exact_number(c.delta) << '\n'
    << "variance=" << static_cast<int>(c.variance) << '\n'
    << "universal.profile=" << c.profile << '\n'
    << "universal.wald=" << c.wald << '\n'
    << "condvar.s=" << exact_number(c.condvar_s) << '\n'
    << "condvar.levels=" << c.condvar_levels << '\n'
    << "condvar.amplitude=" << exact_number(c.condvar_amplitude) << '\n'
    << "condvar.sigma=" << exact_number(c.sigma) << '\n'
    << "condvar.gamma=" << exact_number(c.gamma) << '\n'
    << "condvar.all_pairs=" << c.all_pairs << '\n'
    << "reps=" << c.reps << '\n'
    << "seed=" << c.seed << '\n'
    << "max_failure_rate=" << exact_number(c.max_failure_rate) << '\n'
    << "quad_points=" << c.quad_points << '\n';
  return o.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a(canonical_text(config)); }

const AggregateRow& ExperimentResult::row(long n, std::string_view statistic) const {
  for (const auto& r : aggregate)
    if (r.n == n && r.statistic == statistic) return r;
  throw PreconditionError("experiment: no aggregate row for n=" + std::to_string(n) + " statistic " +
                          std::string(statistic));
}

void parallel_for(long count, int threads, const std::function<void(long)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<long>(threads, std::max(1L, count)));
  if (threads == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex mu;
  std::exception_ptr first;
  auto worker = [&] {
    for (long i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

namespace {

// Everything that depends on n but not on the replication.
struct Context {
  long n = 0;
  int kstar = 0;
  Density density;
  Field p;
  Field b;
  BasisDict nuis_basis;

  int k_test = 0;
  BasisDict test_basis;
  GramOperator test_gram;
  int k_kbw = 0;
  BasisDict kbw_basis;
  GramOperator kbw_gram;

  std::optional<NuisancePair> fixed_nuis;
  std::optional<OracleBias> fixed_oracle;
  std::optional<OracleBias> fixed_oracle_kbw;

  SieveModel model;
  QuadraticFunctional qf;
  double psi_tilde = 0.0;
  Eigen::VectorXd theta_tilde;

  SubcubePlan plan;
  Field regression;
};

class RepRunner {
 public:
  RepRunner(const ExperimentConfig& c, const Context& ctx, long rep) : c_(c), ctx_(ctx), rep_(rep) {}

  std::vector<Metric> run() {
    switch (c_.kind) {
      case ExperimentKind::bias: bias(); break;
      case ExperimentKind::universal: universal(); break;
      case ExperimentKind::condvar: condvar(); break;
    }
    return std::move(out_);
  }

 private:
  Engine engine(std::string_view purpose) const {
    return make_engine(c_.seed, static_cast<std::uint64_t>(rep_), std::string(purpose) + "/n=" + std::to_string(ctx_.n));
  }
  void put(std::string name, long k, double v) { out_.push_back({std::move(name), k, v}); }

  DataModel data_model() const {
    DataModel m;
    m.noise = c_.noise;
    m.variant = c_.variant;
    m.p = ctx_.p;
    m.b = ctx_.b;
    m.rho = c_.rho;
    return m;
  }

  void test_metrics(const std::string& prefix, long k, const UStatResult& u, const UStatResult& psi1) {
    const TestOutcome t = bias_test(u, psi1, c_.alpha, c_.delta);
    put(prefix + ".estimate", k, u.estimate);
    put(prefix + ".se", k, u.se);
    put(prefix + ".statistic", k, t.statistic);
    put(prefix + ".reject", k, t.reject ? 1.0 : 0.0);
  }

  void oracle_metrics(const std::string& prefix, long k, const OracleBias& o, long n_est) {
    put(prefix + ".bias_k", k, o.bias_k);
    put(prefix + ".bias_inf", k, o.bias_inf);
    put(prefix + ".tb_k", k, o.tb_k);
    const double ratio = power_condition_ratio(o, c_.variant, static_cast<int>(k), n_est);
    put(prefix + ".power_ratio", k, ratio);
    put(prefix + ".power_condition", k, ratio >= 10.0 ? 1.0 : 0.0);
  }

  void bias() {
    Engine data_eng = engine("data");
    Dataset data = gen_data(ctx_.n, c_.d, data_model(), data_eng);
    std::vector<std::pair<Split, double>> fr;
    if (c_.frac_train > 0.0) fr.emplace_back(Split::train, c_.frac_train);
    if (c_.frac_select > 0.0) fr.emplace_back(Split::select, c_.frac_select);
    fr.emplace_back(Split::estimate, c_.frac_estimate);
    Engine split_eng = engine("split");
    data.assign_splits(fr, split_eng);

    const Sample est = data.select(Split::estimate);
    const long n_est = static_cast<long>(est.size());
    std::optional<Sample> train;
    if (c_.frac_train > 0.0) train = data.select(Split::train);

    NuisancePair nuis;
    if (c_.nuisance == NuisanceMode::truth) {
      nuis = c_.variant == FunctionalVariant::cond_variance ? NuisancePair::cond_variance(ctx_.p)
                                                             : NuisancePair::cond_covariance(ctx_.p, ctx_.b);
    } else if (c_.nuisance == NuisanceMode::fixed) {
      nuis = *ctx_.fixed_nuis;
    } else {
      nuis = fit_nuisance(*train, ctx_.nuis_basis, c_.variant);
    }
    const bool oracle = c_.nuisance != NuisanceMode::truth;
    const Field& b = c_.variant == FunctionalVariant::cond_variance ? ctx_.p : ctx_.b;

    const Residuals r = residuals(est, nuis);
    const UStatResult psi1 = drml_psi1(r.a, r.y);
    put("psi1.estimate", ctx_.kstar, psi1.estimate);
    put("psi1.se", ctx_.kstar, psi1.se);

    UStatOptions uopt;
    uopt.variance = c_.variance;

    if (wants(c_, "chi_k") || wants(c_, "chi_33")) {
      const long k = ctx_.k_test;
      const Eigen::MatrixXd Z = ctx_.test_basis.eval(est.X);
      if (wants(c_, "chi_k")) test_metrics("chi_k", k, if22(r.a, r.y, Z, ctx_.test_gram, uopt), psi1);
      if (wants(c_, "chi_33")) {
        const GramOperator emp = empirical_gram(ctx_.test_basis.eval(train->X), "train");
        const UStatResult u = if22_to_33(r.a, r.y, Z, emp, uopt);
        test_metrics("chi_33", k, u, psi1);
        put("chi_33.t3", k, u.diagnostics.at("t3"));
      }
      if (oracle) {
        const OracleBias o = ctx_.fixed_oracle ? *ctx_.fixed_oracle
                                               : oracle_bias(ctx_.p, nuis.p_hat, b, nuis.b_hat, ctx_.test_basis,
                                                             ctx_.test_gram, ctx_.density, c_.quad_points);
        oracle_metrics("oracle", k, o, n_est);
      }
    }

    if (wants(c_, "kbw")) {
      const long k = ctx_.k_kbw;
      const Sample sel = data.select(Split::select);
      const Residuals rs = residuals(sel, nuis);
      const Eigen::MatrixXd Zs = ctx_.kbw_basis.eval(sel.X);
      const Eigen::VectorXd beta_hat = fit_fhat(rs.a, Zs, ctx_.kbw_gram);
      const GramOperator omega_f = kbw_omega(beta_hat, ctx_.kbw_gram);
      const Eigen::MatrixXd F = ctx_.kbw_basis.combine(est.X, beta_hat);
      test_metrics("kbw", k, if22_kbw(r.a, r.y, F, omega_f, uopt), psi1);
      if (oracle) {
        const OracleBias o = ctx_.fixed_oracle_kbw ? *ctx_.fixed_oracle_kbw
                                                   : oracle_bias(ctx_.p, nuis.p_hat, b, nuis.b_hat, ctx_.kbw_basis,
                                                                 ctx_.kbw_gram, ctx_.density, c_.quad_points);
        oracle_metrics("kbw_oracle", k, o, n_est);
        const KbwDiagnostics dg = kbw_diagnostics(rs.a, Zs, ctx_.kbw_gram, beta_hat, o.beta_p, o.bias_k);
        put("kbw.delta_num", k, dg.delta_num);
        put("kbw.delta_denom", k, dg.delta_denom);
        put("kbw.ratio", k, dg.ratio);
        put("kbw.conditional_mean", k, dg.conditional_mean);
      }
    }
  }

  void universal() {
    const long k = ctx_.k_test;
    Engine data_eng = engine("data");
    Dataset data = gen_data(ctx_.n, c_.d, data_model(), data_eng);
    Engine split_eng = engine("split");
    data.assign_splits({{Split::d1, c_.frac_d1}, {Split::d2, 1.0 - c_.frac_d1}}, split_eng);
    const Sample d1 = data.select(Split::d1);
    const Sample d2 = data.select(Split::d2);

    const Eigen::VectorXd theta1 = split_mle(d1, ctx_.model);
    const Ellipsoid ell = confidence_set(d2, ctx_.model, theta1, c_.alpha);
    const Interval plug = plugin_interval(ell, ctx_.qf);
    const double slack = 1e-9 * std::max(1.0, std::abs(ctx_.psi_tilde));
    put("plugin.lo", k, plug.lo);
    put("plugin.hi", k, plug.hi);
    put("plugin.length", k, plug.length());
    put("plugin.cover", k, plug.contains(ctx_.psi_tilde) ? 1.0 : 0.0);
    put("set.cover", k, ell.contains(ctx_.theta_tilde) ? 1.0 : 0.0);
    if (c_.profile) {
      const ProfileResult prof = profile_interval(ell, ctx_.qf);
      put("profile.length", k, prof.interval.length());
      put("profile.cover", k, prof.interval.contains(ctx_.psi_tilde) ? 1.0 : 0.0);
      const bool subset = prof.interval.lo <= plug.lo + slack && plug.hi <= prof.interval.hi + slack;
      put("subset.violation", k, subset ? 0.0 : 1.0);
    }
    const LengthBound lb = length_lower_bound(theta1, ctx_.theta_tilde, ctx_.qf, c_.alpha);
    put("lower_bound.full", k, lb.full);
    put("lower_bound.displayed", k, lb.displayed);
    if (c_.wald) {
      UStatOptions uopt;
      uopt.variance = c_.variance;
      const QuadraticHoif h = quadratic_hoif(data.all(), ctx_.model, ctx_.qf, uopt);
      const Interval w = hoif_wald_interval(h.psi1, h.if22, c_.alpha);
      put("wald.length", k, w.length());
      put("wald.cover", k, w.contains(ctx_.psi_tilde) ? 1.0 : 0.0);
    }
  }

  void condvar() {
    Engine data_eng = engine("data");
    Eigen::MatrixXd X(ctx_.n, c_.d);
    for (long i = 0; i < ctx_.n; ++i)
      for (int a = 0; a < c_.d; ++a) X(i, a) = uniform01(data_eng);
    Eigen::VectorXd Y = ctx_.regression.eval(X);
    for (long i = 0; i < ctx_.n; ++i) Y[i] += c_.sigma * standard_normal(data_eng);
    Engine pair_eng = engine("pairs");
    SubcubeOptions opt;
    opt.all_pairs = c_.all_pairs;
    const SubcubeResult res = subcube_variance(X, Y, ctx_.plan, pair_eng, opt);
    const auto k = static_cast<long>(ctx_.plan.k_bins);
    const double err = res.sigma2_hat - c_.sigma * c_.sigma;
    put("sigma2_hat", k, res.sigma2_hat);
    put("bins_used", k, static_cast<double>(res.bins_used));
    put("sq_error", k, err * err);
  }

  const ExperimentConfig& c_;
  const Context& ctx_;
  long rep_;
  std::vector<Metric> out_;
};

Context make_context(const ExperimentConfig& c, long n) {
  Context ctx;
  ctx.n = n;
  ctx.density = Density::uniform(c.d);
  const double e = c.kstar_exponent > 0.0 ? c.kstar_exponent : 1.0 / (1.0 + 2.0 * c.truth.s);
  ctx.kstar = ceil_int(std::pow(static_cast<double>(n), e));
  GramOptions gopt;
  gopt.quad_points = c.quad_points;

  if (c.kind == ExperimentKind::condvar) {
    ctx.regression = weierstrass(c.condvar_s, c.condvar_levels, c.condvar_amplitude);
    ctx.plan = c.gamma > 0.0 ? make_subcube_plan(n, c.d, c.gamma) : optimal_subcube_plan(n, c.d, c.condvar_s);
    return ctx;
  }

  ctx.p = gen_truth(c.truth);
  if (c.variant == FunctionalVariant::cond_covariance) ctx.b = gen_truth(c.truth_b);
  if (c.noise == Noise::bernoulli) {
    check_probability_range(ctx.p, c.d);
    if (c.variant == FunctionalVariant::cond_covariance) check_probability_range(ctx.b, c.d);
  }

  ctx.k_test = c.k_test.resolve(n, ctx.kstar);
  if (c.kind == ExperimentKind::universal) {
    ctx.model = SieveModel::make(BasisDict::make(c.test_family, ctx.k_test, c.d), Field::constant(0.0), c.noise,
                                 ctx.density, gopt);
    ctx.qf = make_quadratic_functional(ctx.model, c.quad_points);
    ctx.theta_tilde = kl_projection_oracle(ctx.p, ctx.model, c.quad_points);
    ctx.psi_tilde = psi_value(ctx.theta_tilde, ctx.qf);
    return ctx;
  }

  ctx.nuis_basis = BasisDict::make(c.nuisance_family, ctx.kstar, c.d);
  if (wants(c, "chi_k") || wants(c, "chi_33")) {
    ctx.test_basis = BasisDict::make(c.test_family, ctx.k_test, c.d);
    ctx.test_gram = exact_gram(ctx.test_basis, ctx.density, gopt);
  }
  if (wants(c, "kbw")) {
    ctx.k_kbw = c.k_kbw.resolve(n, ctx.kstar);
    ctx.kbw_basis = BasisDict::make(c.test_family, ctx.k_kbw, c.d);
    ctx.kbw_gram = exact_gram(ctx.kbw_basis, ctx.density, gopt);
  }
  if (c.nuisance == NuisanceMode::fixed) {
    const long n_tr = c.fixed_train_size > 0 ? c.fixed_train_size
                                             : static_cast<long>(std::floor(c.frac_train * static_cast<double>(n)));
    DataModel m;
    m.noise = c.noise;
    m.variant = c.variant;
    m.p = ctx.p;
    m.b = ctx.b;
    m.rho = c.rho;
    Engine eng = make_engine(c.seed, 0, "fixed-nuisance/n=" + std::to_string(n));
    const Dataset tr = gen_data(n_tr, c.d, m, eng);
    ctx.fixed_nuis = fit_nuisance(tr.all(), ctx.nuis_basis, c.variant);
    const Field& b = c.variant == FunctionalVariant::cond_variance ? ctx.p : ctx.b;
    if (ctx.test_basis.size() > 0)
      ctx.fixed_oracle = oracle_bias(ctx.p, ctx.fixed_nuis->p_hat, b, ctx.fixed_nuis->b_hat, ctx.test_basis,
                                     ctx.test_gram, ctx.density, c.quad_points);
    if (ctx.kbw_basis.size() > 0)
      ctx.fixed_oracle_kbw = oracle_bias(ctx.p, ctx.fixed_nuis->p_hat, b, ctx.fixed_nuis->b_hat, ctx.kbw_basis,
                                         ctx.kbw_gram, ctx.density, c.quad_points);
  }
  return ctx;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::vector<AggregateRow> aggregate_records(const std::vector<RepRecord>& records) {
  std::vector<long> ns;
  for (const auto& r : records)
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);

  std::vector<AggregateRow> rows;
  std::map<std::string, std::vector<std::pair<double, double>>> rmse_by_name;  // name -> (n, rmse)
  std::vector<std::string> rmse_order;
  for (long n : ns) {
    std::vector<std::string> names;
    std::map<std::string, long> ks;
    std::map<std::string, std::vector<double>> values;
    for (const auto& r : records) {
      if (r.n != n || !r.ok) continue;
      for (const auto& m : r.metrics) {
        auto [it, fresh] = ks.emplace(m.name, m.k);
        if (fresh) names.push_back(m.name);
        values[m.name].push_back(m.value);
      }
    }
    for (const auto& name : names) {
      const auto& v = values[name];
      const auto cnt = static_cast<double>(v.size());
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= cnt;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double se = v.size() > 1 ? std::sqrt(ss / (cnt - 1.0) / cnt) : 0.0;
      rows.push_back({n, ks[name], name, mean, se, static_cast<long>(v.size())});
      if (ends_with(name, "sq_error")) {
        const std::string base = name.substr(0, name.size() - std::string_view("sq_error").size());
        const double rmse = std::sqrt(mean);
        rows.push_back({n, ks[name], base + "rmse", rmse, rmse > 0.0 ? se / (2.0 * rmse) : 0.0,
                        static_cast<long>(v.size())});
        if (!rmse_by_name.count(base)) rmse_order.push_back(base);
        rmse_by_name[base].emplace_back(static_cast<double>(n), rmse);
      }
    }
  }
  for (const auto& base : rmse_order) {
    const auto& pts = rmse_by_name[base];
    if (pts.size() < 2) continue;
    std::vector<double> x, y;
    for (const auto& [n, v] : pts) {
      x.push_back(n);
      y.push_back(v);
    }
    rows.push_back({0, 0, base + "rmse_slope", loglog_slope(x, y), 0.0, static_cast<long>(pts.size())});
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  ExperimentResult result;
  result.experiment_id = config.id;
  result.config_hash = config_hash(config);
  result.seed = config.seed;

  std::vector<Context> contexts;
  contexts.reserve(config.n_grid.size());
  for (long n : config.n_grid) contexts.push_back(make_context(config, n));

  const long total = config.reps * static_cast<long>(config.n_grid.size());
  result.records.resize(static_cast<std::size_t>(total));
  parallel_for(total, threads, [&](long t) {
    const auto& ctx = contexts[static_cast<std::size_t>(t / config.reps)];
    RepRecord& rec = result.records[static_cast<std::size_t>(t)];
    rec.n = ctx.n;
    rec.rep = t % config.reps;
    try {
      rec.metrics = RepRunner(config, ctx, rec.rep).run();
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
      rec.metrics.clear();
    }
  });

  std::string first_error;
  for (const auto& r : result.records) {
    if (r.ok) continue;
    if (result.failures++ == 0) first_error = r.error;
  }
  if (static_cast<double>(result.failures) > config.max_failure_rate * static_cast<double>(total))
    throw ExperimentAborted("experiment '" + config.id + "': " + std::to_string(result.failures) + " of " +
                            std::to_string(total) + " replications failed; first: " + first_error);
  result.aggregate = aggregate_records(result.records);
  return result;
}

void write_records_jsonl(std::ostream& out, const ExperimentResult& result) {
  for (const auto& r : result.records) {
    nlohmann::ordered_json j;
    j["schema"] = kSchemaVersion;
    j["experiment_id"] = result.experiment_id;
    j["n"] = r.n;
    j["rep"] = r.rep;
    j["ok"] = r.ok;
    j["error"] = r.error;
    nlohmann::ordered_json ms = nlohmann::ordered_json::array();
    for (const auto& m : r.metrics) ms.push_back({{"name", m.name}, {"k", m.k}, {"value", m.value}});
    j["metrics"] = std::move(ms);
    out << j.dump() << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const ExperimentResult& result) {
  out << "experiment_id,n,k,statistic_name,value,mc_se,n_reps\n";
  for (const auto& r : result.aggregate)
    out << result.experiment_id << ',' << r.n << ',' << r.k << ',' << r.statistic << ',' << number(r.value) << ','
        << number(r.mc_se) << ',' << r.n_reps << '\n';
}

}  // namespace hoifkit
