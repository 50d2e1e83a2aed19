#include "hoifkit/cli/app.hpp"

#include "hoifkit/bias_test.hpp"
#include "hoifkit/cli/config.hpp"
#include "hoifkit/error.hpp"
#include "hoifkit/experiment.hpp"
#include "hoifkit/gram.hpp"
#include "hoifkit/universal.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

namespace hoifkit::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void atomic_write(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + tmp.string() + "' for writing");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw Error("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, target);
}

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunRecord {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string start;
  std::vector<std::string> outputs;

  json to_json() const {
    return json{{"command", command},         {"config_hash", hex(config_hash)}, {"seed", seed},
                {"start", start},             {"end", utc_now()},                {"version", kVersion},
                {"outputs", outputs}};
  }
  void write(const std::string& path) {
    atomic_write(path, to_json().dump(2) + "\n");
  }
};

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  bool dry_run = false;
  int threads = 0;
  std::string out_dir;
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
  auto* opt = sub->add_option("config", c.config, "YAML config file");
  if (config_required) opt->required();
  sub->add_option("--set", c.overrides, "Override a config key, e.g. --set test.alpha=0.1")->take_all();
  sub->add_flag("--dry-run", c.dry_run, "Validate and print the resolved config without computing");
  sub->add_option("--threads", c.threads, "Worker threads (default: logical cores)");
  sub->add_option("--out", c.out_dir, "Output directory");
}

YAML::Node resolved(const Common& c) {
  YAML::Node root = c.config.empty() ? YAML::Node(YAML::NodeType::Map) : load_yaml(c.config);
  apply_overrides(root, c.overrides);
  return root;
}

json outcome_json(const TestOutcome& t) {
  return json{{"statistic", t.statistic},
              {"threshold", t.threshold},
              {"reject", t.reject},
              {"alpha", t.alpha},
              {"delta", t.delta},
              {"components",
               {{"if_estimate", t.if_estimate},
                {"if_se", t.if_se},
                {"psi1_se", t.psi1_se},
                {"z_alpha_half", t.z_alpha_half}}},
              {"kernel_kind", to_string(t.kernel_kind)},
              {"order", t.order}};
}

int cmd_test_bias(const Common& c, std::ostream& out) {
  const DataTestConfig cfg = parse_data_test_config(resolved(c));
  if (c.dry_run) {
    out << cfg.canonical();
    return kOk;
  }
  RunRecord rr{"test-bias", fnv1a(cfg.canonical()), cfg.seed, utc_now(), {}};
  Dataset ds = Dataset::read_table(cfg.data);
  std::vector<std::pair<Split, double>> fr{{Split::train, cfg.frac_train}};
  if (cfg.frac_select > 0.0) fr.emplace_back(Split::select, cfg.frac_select);
  fr.emplace_back(Split::estimate, cfg.frac_estimate);
  Engine eng = make_engine(cfg.seed, 0, "split");
  ds.assign_splits(fr, eng);

  const Sample train = ds.select(Split::train);
  const Sample est = ds.select(Split::estimate);
  const NuisancePair nuis = fit_nuisance(train, BasisDict::make(cfg.nuisance_family, cfg.nuisance_k, ds.d()), cfg.variant);
  const Residuals r = residuals(est, nuis);
  const UStatResult psi1 = drml_psi1(r.a, r.y);
  const BasisDict basis = BasisDict::make(cfg.test_family, cfg.k, ds.d());
  const Density density = Density::uniform(ds.d());

  UStatResult u;
  if (cfg.statistic == "kbw") {
    const Sample sel = ds.select(Split::select);
    const GramOperator gram = exact_gram(basis, density);
    const Eigen::VectorXd beta = fit_fhat(residuals(sel, nuis).a, basis.eval(sel.X), gram);
    u = if22_kbw(r.a, r.y, basis.combine(est.X, beta), kbw_omega(beta, gram));
  } else if (cfg.statistic == "chi_33") {
    u = if22_to_33(r.a, r.y, basis.eval(est.X), empirical_gram(basis.eval(train.X), "train"));
  } else {
    u = if22(r.a, r.y, basis.eval(est.X), exact_gram(basis, density));
  }
  const TestOutcome t = bias_test(u, psi1, cfg.alpha, cfg.delta);
  json j = outcome_json(t);
  j["psi1"] = psi1.estimate;
  j["n_estimate"] = est.size();
  if (!c.out_dir.empty()) {
    const std::string path = (fs::path(c.out_dir) / "test_bias.json").string();
    atomic_write(path, j.dump() + "\n");
    rr.outputs.push_back(path);
    rr.write((fs::path(c.out_dir) / "test_bias.run.json").string());
  }
  out << j.dump() << '\n';
  return t.reject ? kRejected : kOk;
}

ExperimentResult run_and_save(const ExperimentConfig& cfg, const Common& c, const std::string& command,
                              RunRecord& rr) {
  rr = RunRecord{command, config_hash(cfg), cfg.seed, utc_now(), {}};
  ExperimentResult res = run_experiment(cfg, c.threads);
  const fs::path dir = c.out_dir.empty() ? fs::path("results") : fs::path(c.out_dir);
  std::ostringstream rec, agg;
  write_records_jsonl(rec, res);
  write_aggregate_csv(agg, res);
  const std::string rec_path = (dir / (cfg.id + ".records.jsonl")).string();
  const std::string agg_path = (dir / (cfg.id + ".aggregate.csv")).string();
  atomic_write(rec_path, rec.str());
  atomic_write(agg_path, agg.str());
  rr.outputs = {rec_path, agg_path};
  return res;
}

int cmd_run_experiment(const Common& c, std::ostream& out) {
  const ExperimentConfig cfg = parse_experiment_config(resolved(c));
  if (c.dry_run) {
    out << canonical_text(cfg);
    return kOk;
  }
  RunRecord rr;
  const ExperimentResult res = run_and_save(cfg, c, "run-experiment", rr);
  const fs::path dir = c.out_dir.empty() ? fs::path("results") : fs::path(c.out_dir);
  rr.write((dir / (cfg.id + ".run.json")).string());
  out << json{{"experiment_id", res.experiment_id}, {"config_hash", hex(res.config_hash)},
              {"records", res.records.size()},     {"failures", res.failures},
              {"outputs", rr.outputs}}
             .dump()
      << '\n';
  return kOk;
}

int cmd_condvar_rate(const Common& c, std::ostream& out) {
  YAML::Node root = resolved(c);
  if (!root["kind"]) root["kind"] = "condvar";
  const ExperimentConfig cfg = parse_experiment_config(root);
  if (cfg.kind != ExperimentKind::condvar) throw ConfigError("kind: condvar-rate needs kind: condvar");
  if (c.dry_run) {
    out << canonical_text(cfg);
    return kOk;
  }
  RunRecord rr;
  const ExperimentResult res = run_and_save(cfg, c, "condvar-rate", rr);
  double slope = 0.0;
  for (const auto& row : res.aggregate)
    if (row.statistic == "rmse_slope") slope = row.value;
  std::ostringstream csv;
  csv << "n,k,rmse,slope_fit\n";
  char buf[128];
  for (const auto& row : res.aggregate) {
    if (row.statistic != "rmse") continue;
    std::snprintf(buf, sizeof buf, "%ld,%ld,%.10g,%.10g\n", row.n, row.k, row.value, slope);
    csv << buf;
  }
  const fs::path dir = c.out_dir.empty() ? fs::path("results") : fs::path(c.out_dir);
  const std::string path = (dir / (cfg.id + ".condvar.csv")).string();
  atomic_write(path, csv.str());
  rr.outputs.push_back(path);
  rr.write((dir / (cfg.id + ".run.json")).string());
  out << json{{"experiment_id", cfg.id}, {"slope_fit", slope}, {"failures", res.failures}, {"outputs", rr.outputs}}.dump()
      << '\n';
  return kOk;
}

int cmd_universal_ci(const Common& c, std::ostream& out) {
  const UniversalCiConfig cfg = parse_universal_ci_config(resolved(c));
  if (c.dry_run) {
    out << cfg.canonical();
    return kOk;
  }
  RunRecord rr{"universal-ci", fnv1a(cfg.canonical()), cfg.seed, utc_now(), {}};
  Dataset ds = Dataset::read_table(cfg.data);
  Engine eng = make_engine(cfg.seed, 0, "split");
  ds.assign_splits({{Split::d1, cfg.frac_d1}, {Split::d2, 1.0 - cfg.frac_d1}}, eng);
  const SieveModel model =
      SieveModel::make(BasisDict::make(cfg.family, cfg.k, ds.d()), Field::constant(0.0), cfg.noise,
                       Density::uniform(ds.d()));
  const QuadraticFunctional qf = make_quadratic_functional(model);
  const Eigen::VectorXd theta1 = split_mle(ds.select(Split::d1), model);
  const Ellipsoid ell = confidence_set(ds.select(Split::d2), model, theta1, cfg.alpha);
  const Interval plug = plugin_interval(ell, qf);
  const ProfileResult prof = profile_interval(ell, qf);
  const QuadraticHoif h = quadratic_hoif(ds.all(), model, qf);
  const Interval wald = hoif_wald_interval(h.psi1, h.if22, cfg.alpha);
  // The projection is unknown for real data; the D2 fit stands in for it.
  const LengthBound lb = length_lower_bound(theta1, ell.center, qf, cfg.alpha);
  json j{{"plugin", {plug.lo, plug.hi}},
         {"profile", {prof.interval.lo, prof.interval.hi}},
         {"hoif_wald", {wald.lo, wald.hi}},
         {"lower_bound", lb.full},
         {"profile_unimodal", prof.unimodal},
         {"profile_disconnected", prof.disconnected}};
  if (!c.out_dir.empty()) {
    const std::string path = (fs::path(c.out_dir) / "universal_ci.json").string();
    atomic_write(path, j.dump() + "\n");
    rr.outputs.push_back(path);
    rr.write((fs::path(c.out_dir) / "universal_ci.run.json").string());
  }
  out << j.dump() << '\n';
  return kOk;
}

struct BasisArgs {
  std::string family = "fourier";
  int k = 8;
  int d = 1;
  int order = 4;
  int quad_points = 200;
  int scan_points = 100000;
};

int cmd_check_basis(const Common& c, BasisArgs a, std::ostream& out) {
  if (!c.config.empty() || !c.overrides.empty()) {
    YAML::Node root = resolved(c);
    auto get = [&](const char* key, auto& v) {
      if (!root[key]) return;
      try {
        v = root[key].as<std::remove_reference_t<decltype(v)>>();
      } catch (const YAML::Exception&) {
        throw ConfigError(std::string(key) + ": cannot convert value");
      }
    };
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (key != "family" && key != "k" && key != "d" && key != "order" && key != "quad_points" &&
          key != "scan_points")
        throw ConfigError(key + ": unknown key");
    }
    get("family", a.family);
    get("k", a.k);
    get("d", a.d);
    get("order", a.order);
    get("quad_points", a.quad_points);
    get("scan_points", a.scan_points);
  }
  const BasisDict dict = BasisDict::make(parse_family(a.family), a.k, a.d, BasisOptions{a.order});
  if (c.dry_run) {
    out << dict.describe() << '\n';
    return kOk;
  }
  GramOptions gopt;
  gopt.quad_points = a.quad_points;
  const GramOperator g = exact_gram(dict, Density::uniform(a.d), gopt);
  const GramDiagnostics dg = g.diagnostics();
  SwThresholds th;
  th.scan_points = a.scan_points;
  const ConditionReport rep = check_condition_sw(dict, g, th);
  const bool identity = g.is_identity() || (g.matrix() - Eigen::MatrixXd::Identity(a.k, a.k)).cwiseAbs().maxCoeff() < 1e-10;
  out << json{{"basis", dict.describe()},
              {"gram",
               {{"identity", identity},
                {"analytic", g.is_identity()},
                {"lambda_min", dg.lambda_min},
                {"lambda_max", dg.lambda_max},
                {"cond", dg.cond}}},
              {"condition_sw",
               {{"pass", rep.pass},
                {"eigen_pass", rep.eigen_pass},
                {"b_pass", rep.b_pass},
                {"b_constant", rep.b_constant},
                {"sup_zz", rep.sup_zz},
                {"scan_size", rep.scan_size},
                {"empty_scan", rep.empty_scan}}}}
             .dump()
      << '\n';
  return kOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hoifkit: higher-order influence function bias tests, universal intervals and simulations"};
  app.require_subcommand(1);
  Common tb, re, uc, cr, cb;
  BasisArgs ba;
  auto* s_tb = app.add_subcommand("test-bias", "Bias test on a data table; exit 3 on rejection");
  add_common(s_tb, tb);
  auto* s_re = app.add_subcommand("run-experiment", "Monte Carlo experiment from a config");
  add_common(s_re, re);
  auto* s_uc = app.add_subcommand("universal-ci", "Plug-in, profile and HOIF Wald intervals for a data table");
  add_common(s_uc, uc);
  auto* s_cr = app.add_subcommand("condvar-rate", "Sub-cube variance RMSE over an n grid");
  add_common(s_cr, cr);
  auto* s_cb = app.add_subcommand("check-basis", "Gram and condition report for a basis");
  add_common(s_cb, cb, false);
  s_cb->add_option("--family", ba.family, "Basis family");
  s_cb->add_option("--k", ba.k, "Number of basis functions");
  s_cb->add_option("--d", ba.d, "Dimension");
  s_cb->add_option("--order", ba.order, "B-spline order");
  s_cb->add_option("--quad-points", ba.quad_points, "Quadrature nodes per axis");
  s_cb->add_option("--scan-points", ba.scan_points, "Lattice points for the sup scan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kConfigError;
  }

  try {
    if (s_tb->parsed()) return cmd_test_bias(tb, out);
    if (s_re->parsed()) return cmd_run_experiment(re, out);
    if (s_uc->parsed()) return cmd_universal_ci(uc, out);
    if (s_cr->parsed()) return cmd_condvar_rate(cr, out);
    if (s_cb->parsed()) return cmd_check_basis(cb, ba, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  err << app.help();
  return kConfigError;
}

}  // namespace hoifkit::cli
