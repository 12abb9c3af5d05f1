#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shearflame/effective.hpp"

namespace shearflame {

enum class Verdict { kHomogenizes, kFails, kInconclusive };

const char* to_string(Verdict verdict) noexcept;

struct SweepRow {
  double A = 0.0;
  std::optional<double> hbar;       ///< non-cutoff value; empty if invalid or not requested
  std::optional<double> hbar_plus;  ///< cutoff value; empty if invalid
  double a_force = 0.0;             ///< A F(P)
  bool homogenized_cutoff = false;
  double uniformity = 0.0;          ///< cutoff estimate's final oscillation
  std::optional<EffectiveEstimate> cutoff;
  std::optional<EffectiveEstimate> non_cutoff;
};

struct SweepCurve {
  Direction dir;
  double d = 0.0;
  int grid_n = 0;
  std::vector<double> schedule;
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  EstimateOptions estimate;
  std::vector<double> schedule = default_schedule();
  /// Worker threads; results do not depend on this.
  int jobs = 1;
};

/// Cutoff (and optionally non-cutoff) estimates along an increasing A grid
/// that starts at 0. Invalid estimates stay empty; nothing is interpolated.
SweepCurve sweep_A(const Direction& dir, double d, const ShearProfile& f,
                   const std::vector<double>& a_grid, bool both_variants,
                   const SweepOptions& options = {});

/// Grid for the Figure-2 style curve: 0, then `points` log-spaced values
/// from a1 / 4 to a_max.
std::vector<double> knee_grid(double a1, double a_max, int points = 16);

/// CSV `A,H_bar,H_bar_plus,A_F,homogenized,uniformity`, `invalid` for
/// missing estimates, 17 significant digits.
std::string to_csv(const SweepCurve& curve);

struct A1Evaluation {
  double A = 0.0;
  double g = 0.0;  ///< non-cutoff value - A F(P)
  EffectiveEstimate estimate;
};

struct A1Result {
  double a1 = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<A1Evaluation> evaluations;  ///< in evaluation order
};

/// Root of g(A) = Hbar(A) - A F(P) inside [a_lo, a_hi], bracketed to width
/// <= tol_a. Throws kNoSignChange unless g(a_lo) > 0 > g(a_hi), and
/// kDivergence if an estimate along the way is invalid.
A1Result find_A1(const Direction& dir, double d, const ShearProfile& f, double a_lo, double a_hi,
                 double tol_a, const SweepOptions& options = {});

struct FailureDiagnostics {
  double A = 0.0;
  std::vector<double> uniformity_series;  ///< oscillation of lambda v_lambda per lambda
  Verdict verdict = Verdict::kInconclusive;
  EffectiveEstimate estimate;
};

/// Verdict from a uniformity series: fails if non-decreasing and ending
/// >= theta_u, homogenizes if decreasing and ending < theta_u. Differences
/// within `tie` count as flat.
Verdict classify_series(const std::vector<double>& series, double theta_u, double tie);

/// Cutoff estimate at A along the schedule, classified by its uniformity series.
FailureDiagnostics probe_failure(const Direction& dir, double d, const ShearProfile& f, double A,
                                 const SweepOptions& options = {});

struct BifurcationReport {
  Direction dir;
  double d = 0.0;
  int dim = 0;
  A1Result a1;
  double tol_a = 0.0;
  double theta_u = 0.0;
  /// Largest probed A with a homogenizes verdict; empty if none.
  std::optional<double> a0_lower_bound;
  std::vector<FailureDiagnostics> a0_evidence;
  int grid_n = 0;
  std::vector<double> schedule;
  /// a0_lower_bound >= a1.lo - bracket width.
  bool consistent = false;
  /// Every probe above a1.hi reported fails (the expectation when n = 2).
  bool failure_confirmed = false;
};

/// find_A1 followed by failure probes at a1.lo and at each factor * A1.
BifurcationReport bifurcate(const Direction& dir, double d, const ShearProfile& f, double a_lo,
                            double a_hi, double tol_a, const std::vector<double>& probe_factors,
                            const SweepOptions& options = {});

std::string to_json(const BifurcationReport& report, int indent = 2);

}  // namespace shearflame
