#include "hoifkit/cli/config.hpp"

#include "hoifkit/error.hpp"

#include <set>
#include <sstream>

namespace hoifkit::cli {

YAML::Node load_yaml(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("config: cannot read '" + path + "'");
  } catch (const YAML::Exception& e) {
    throw ConfigError("config: malformed YAML in '" + path + "': " + e.what());
  }
}

void apply_overrides(YAML::Node& root, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set '" + a + "': expected key=value");
    const std::string key = a.substr(0, eq);
    YAML::Node value;
    try {
      value = YAML::Load(a.substr(eq + 1));
    } catch (const YAML::Exception& e) {
      throw ConfigError(key + ": cannot parse override value: " + e.what());
    }
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    // Walk with fresh handles; yaml-cpp node assignment rebinds rather than copies.
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      YAML::Node next = chain.back()[parts[i]];
      if (!next.IsDefined() || next.IsNull()) {
        chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
        next = chain.back()[parts[i]];
      }
      if (!next.IsMap()) throw ConfigError(key + ": '" + parts[i] + "' is not a table");
      chain.push_back(next);
    }
    chain.back()[parts.back()] = value;
  }
}

namespace {

class Table {
 public:
  Table(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(where("") + ": expected a table");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key].IsDefined(); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key) || node_[key].IsNull()) return fallback;
    try {
      return node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": cannot convert '" + YAML::Dump(node_[key]) + "'");
    }
  }

  std::vector<long> get_longs(const std::string& key, std::vector<long> fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const YAML::Node v = node_[key];
    try {
      if (v.IsSequence()) return v.as<std::vector<long>>();
      return {v.as<long>()};
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": expected an integer or a list of integers");
    }
  }

  std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    const YAML::Node v = node_[key];
    try {
      if (v.IsSequence()) return v.as<std::vector<std::string>>();
      return {v.as<std::string>()};
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": expected a string or a list of strings");
    }
  }

  template <class Fn>
  auto parsed(const std::string& key, const std::string& fallback, Fn&& parse) {
    const std::string text = get<std::string>(key, fallback);
    try {
      return parse(text);
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  Table sub(const std::string& key) {
    used_.insert(key);
    return Table(has(key) ? node_[key] : YAML::Node(), where(key));
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(where(key) + ": unknown key");
    }
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

TruthSpec read_truth(Table t, const TruthSpec& defaults, int d) {
  TruthSpec s = defaults;
  s.s = t.get("s", s.s);
  s.J = t.get("J", s.J);
  s.amplitude = t.get("amplitude", s.amplitude);
  s.family = t.parsed("family", std::string(to_string(s.family)), parse_family);
  s.offset = t.get("offset", s.offset);
  s.sign = t.parsed("sign", std::string(to_string(s.sign)), parse_sign);
  s.d = d;
  t.finish();
  return s;
}

VarianceMode parse_variance(const std::string& s) {
  if (s == "automatic") return VarianceMode::automatic;
  if (s == "exact") return VarianceMode::exact;
  if (s == "incomplete") return VarianceMode::incomplete;
  if (s == "none") return VarianceMode::none;
  throw ConfigError("unknown variance mode '" + s + "' (expected automatic|exact|incomplete|none)");
}

}  // namespace

ExperimentConfig parse_experiment_config(const YAML::Node& root) {
  ExperimentConfig c;
  Table t(root, "");
  c.id = t.get<std::string>("id", c.id);
  c.kind = t.parsed("kind", "bias", parse_experiment_kind);
  c.variant = t.parsed("variant", std::string(to_string(c.variant)), parse_variant);
  c.noise = t.parsed("noise", "gaussian", parse_noise);
  c.n_grid = t.get_longs("n", c.n_grid);
  c.d = t.get("d", c.d);
  c.truth = read_truth(t.sub("truth"), c.truth, c.d);
  c.truth_b = read_truth(t.sub("truth_b"), c.truth_b, c.d);
  c.rho = t.get("rho", c.rho);

  {
    Table n = t.sub("nuisance");
    c.nuisance = n.parsed("mode", "fit", parse_nuisance_mode);
    c.nuisance_family = n.parsed("family", "fourier", parse_family);
    c.kstar_exponent = n.get("kstar_exponent", c.kstar_exponent);
    c.fixed_train_size = n.get("fixed_train_size", c.fixed_train_size);
    n.finish();
  }
  {
    Table s = t.sub("test");
    c.test_family = s.parsed("family", "fourier", parse_family);
    c.k_test = s.parsed("k", c.k_test.describe(), KRule::parse);
    c.k_kbw = s.parsed("k_kbw", c.k_kbw.describe(), KRule::parse);
    c.statistics = s.get_strings("statistics", c.statistics);
    c.alpha = s.get("alpha", c.alpha);
    c.delta = s.get("delta", c.delta);
    c.variance = s.parsed("variance", "automatic", parse_variance);
    s.finish();
  }
  {
    Table s = t.sub("split");
    c.frac_train = s.get("train", c.frac_train);
    c.frac_select = s.get("select", c.frac_select);
    c.frac_estimate = s.get("estimate", c.frac_estimate);
    c.frac_d1 = s.get("d1", c.frac_d1);
    s.finish();
  }
  {
    Table u = t.sub("universal");
    c.profile = u.get("profile", c.profile);
    c.wald = u.get("wald", c.wald);
    u.finish();
  }
  {
    Table v = t.sub("condvar");
    c.condvar_s = v.get("s", c.condvar_s);
    c.condvar_levels = v.get("levels", c.condvar_levels);
    c.condvar_amplitude = v.get("amplitude", c.condvar_amplitude);
    c.sigma = v.get("sigma", c.sigma);
    c.gamma = v.get("gamma", c.gamma);
    c.all_pairs = v.get("all_pairs", c.all_pairs);
    v.finish();
  }
  c.reps = t.get("reps", c.reps);
  c.seed = t.get("seed", c.seed);
  c.max_failure_rate = t.get("max_failure_rate", c.max_failure_rate);
  c.quad_points = t.get("quad_points", c.quad_points);
  t.finish();
  c.validate();
  return c;
}

std::string DataTestConfig::canonical() const {
  std::ostringstream o;
  o << "data=" << data << "\nvariant=" << to_string(variant) << "\nseed=" << seed << "\nsplit.train=" << frac_train
    << "\nsplit.select=" << frac_select << "\nsplit.estimate=" << frac_estimate
    << "\nnuisance.family=" << to_string(nuisance_family) << "\nnuisance.k=" << nuisance_k
    << "\ntest.statistic=" << statistic << "\ntest.family=" << to_string(test_family) << "\ntest.k=" << k
    << "\ntest.alpha=" << alpha << "\ntest.delta=" << delta << '\n';
  return o.str();
}

DataTestConfig parse_data_test_config(const YAML::Node& root) {
  DataTestConfig c;
  Table t(root, "");
  c.data = t.get<std::string>("data", "");
  if (c.data.empty()) throw ConfigError("data: a data file path is required");
  c.variant = t.parsed("variant", "cond_variance", parse_variant);
  c.seed = t.get("seed", c.seed);
  {
    Table s = t.sub("split");
    c.frac_train = s.get("train", c.frac_train);
    c.frac_select = s.get("select", c.frac_select);
    c.frac_estimate = s.get("estimate", c.frac_estimate);
    s.finish();
  }
  {
    Table n = t.sub("nuisance");
    c.nuisance_family = n.parsed("family", "fourier", parse_family);
    c.nuisance_k = n.get("k", c.nuisance_k);
    n.finish();
  }
  {
    Table s = t.sub("test");
    c.statistic = s.get<std::string>("statistic", c.statistic);
    c.test_family = s.parsed("family", "fourier", parse_family);
    c.k = s.get("k", c.k);
    c.alpha = s.get("alpha", c.alpha);
    c.delta = s.get("delta", c.delta);
    s.finish();
  }
  t.finish();
  if (c.statistic != "chi_k" && c.statistic != "chi_33" && c.statistic != "kbw")
    throw ConfigError("test.statistic: expected chi_k|chi_33|kbw");
  if (c.k < 1) throw ConfigError("test.k: must be >= 1");
  if (c.nuisance_k < 1) throw ConfigError("nuisance.k: must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("test.alpha: must lie in (0,1)");
  if (!(c.delta >= 0.0)) throw ConfigError("test.delta: must be >= 0");
  if (c.statistic == "kbw" && !(c.frac_select > 0.0)) throw ConfigError("split.select: kbw needs a selection split");
  return c;
}

std::string UniversalCiConfig::canonical() const {
  std::ostringstream o;
  o << "data=" << data << "\nbasis.family=" << to_string(family) << "\nbasis.k=" << k << "\nnoise=" << to_string(noise)
    << "\nalpha=" << alpha << "\nsplit.d1=" << frac_d1 << "\nseed=" << seed << '\n';
  return o.str();
}

UniversalCiConfig parse_universal_ci_config(const YAML::Node& root) {
  UniversalCiConfig c;
  Table t(root, "");
  c.data = t.get<std::string>("data", "");
  if (c.data.empty()) throw ConfigError("data: a data file path is required");
  {
    Table b = t.sub("basis");
    c.family = b.parsed("family", "fourier", parse_family);
    c.k = b.get("k", c.k);
    b.finish();
  }
  c.noise = t.parsed("noise", "gaussian", parse_noise);
  c.alpha = t.get("alpha", c.alpha);
  {
    Table s = t.sub("split");
    c.frac_d1 = s.get("d1", c.frac_d1);
    s.finish();
  }
  c.seed = t.get("seed", c.seed);
  t.finish();
  if (c.k < 1) throw ConfigError("basis.k: must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha: must lie in (0,1)");
  if (!(c.frac_d1 > 0.0 && c.frac_d1 < 1.0)) throw ConfigError("split.d1: must lie in (0,1)");
  return c;
}

}  // namespace hoifkit::cli
