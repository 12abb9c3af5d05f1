#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shearflame/effective.hpp"
#include "shearflame/fields.hpp"
#include "shearflame/profiles.hpp"

namespace shearflame::cli {

struct ARange {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

// Keys are the field names; a config file is `key = value` lines with `#`
// comments. Lists are comma separated, ranges lo:hi[:k].
struct RunConfig {
  int n = 2;
  int grid_N = 32;
  std::string profile = "cellular";  // cellular | constant:C | counterexample[:a] | csv:PATH
  std::vector<double> P;             // empty: e_{n+1}
  double d = 0.2;
  double A = 0.0;
  std::optional<ARange> A_range;
  std::string cutoff = "on";         // on | off | both
  std::vector<double> schedule = default_schedule();
  double lambda = 0.01;              // cell-solve
  double T = 16.0;                   // evolve / long-time estimate
  std::string method = "discount";   // discount | longtime
  double tol = 1e-6;
  long long max_iter = 2'000'000;
  double tol_A = 0.01;
  double theta_u = kDefaultUniformityThreshold;
  std::vector<double> probe_factors = {0.5, 2.0};
  int figure2_points = 16;
  double psi_amplitude = 0.0;        // 0: twice the minimal sign-changing amplitude
  bool strict = false;               // bifurcate: exit 4 unless the verdicts are consistent
  bool deterministic = true;
  std::string out = "out";
  int jobs = 1;

  Direction direction() const;
  std::vector<bool> cutoff_variants() const;
  EstimateOptions estimate_options() const;
};

/// Reads `key = value` lines. Throws Error(kConfig) on malformed lines.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Applies key/value pairs in order, then validates. Throws Error(kConfig)
/// naming the offending key.
RunConfig make_config(const std::vector<std::pair<std::string, std::string>>& entries);

void validate(const RunConfig& config);

/// Builds the profile on a fresh grid per the `profile` key.
ShearProfile build_profile(const RunConfig& config);

/// Flat key = value echo of every field except `out` and `jobs`, which do
/// not affect results.
std::string echo(const RunConfig& config);

}  // namespace shearflame::cli
