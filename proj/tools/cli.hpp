#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ghk/chaos.hpp"
#include "ghk/fracfilter.hpp"
#include "ghk/io.hpp"
#include "ghk/limits.hpp"

namespace ghk::cli {

inline const std::vector<std::string> kKinds = {"validate", "simulate",     "acf",      "scaling",     "clt",
                                                "filter",   "limit-kernel", "spectral", "multivariate"};

/// Fully resolved experiment: every field has a value once resolve() returns.
struct ExperimentConfig {
  std::string kind;
  std::optional<std::string> preset;
  std::optional<ChaosConfig> chaos;
  std::optional<FilterSpec> filter;
  std::vector<MixedComponent> components;  // multivariate only
  std::vector<long> N;
  long reps = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::optional<double> tol;
  long lags = 200;
  long n_min = 50;
  double t = 1.0;
  double window = -1.0;
  SimMode mode = SimMode::Auto;
  long max_reps = 1'000'000;
};

// Keys mirror the long flag names (without the leading dashes). Unknown keys are a schema error.
ExperimentConfig resolve(const std::string& kind, const io::json& settings);
io::json config_to_json(const ExperimentConfig& c);

struct RunOutput {
  io::json report;
  bool passed = true;
};

// Runs the experiment and writes report.json, resolved_config.json and the CSV series into c.out.
RunOutput run(const ExperimentConfig& c);

// Entry point shared by the executable and the tests. Exit codes: 0 ok, 1 a criterion failed,
// 2 schema or input error, 3 numerical failure, 4 resource cap.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ghk::cli
