#pragma once

#include "hoifkit/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <string>
#include <vector>

namespace hoifkit::cli {

/// Parses a YAML file. Throws ConfigError on syntax errors.
YAML::Node load_yaml(const std::string& path);

/// Applies "a.b.c=value" overrides; the value is parsed as YAML (so lists work).
void apply_overrides(YAML::Node& root, const std::vector<std::string>& assignments);

/// Strict reader: every key must be known. Errors name the full key path.
ExperimentConfig parse_experiment_config(const YAML::Node& root);

/// Settings shared by the data-driven subcommands.
struct DataTestConfig {
  std::string data;
  FunctionalVariant variant = FunctionalVariant::cond_variance;
  std::uint64_t seed = 1;
  double frac_train = 0.5;
  double frac_select = 0.0;
  double frac_estimate = 0.5;
  Family nuisance_family = Family::fourier;
  int nuisance_k = 10;
  std::string statistic = "chi_k";
  Family test_family = Family::fourier;
  int k = 20;
  double alpha = 0.05;
  double delta = 0.0;

  std::string canonical() const;
};

DataTestConfig parse_data_test_config(const YAML::Node& root);

struct UniversalCiConfig {
  std::string data;
  Family family = Family::fourier;
  int k = 10;
  Noise noise = Noise::gaussian;
  double alpha = 0.1;
  double frac_d1 = 0.5;
  std::uint64_t seed = 1;

  std::string canonical() const;
};

UniversalCiConfig parse_universal_ci_config(const YAML::Node& root);

}  // namespace hoifkit::cli
