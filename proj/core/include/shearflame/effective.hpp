#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shearflame/fields.hpp"
#include "shearflame/operators.hpp"
#include "shearflame/profiles.hpp"
#include "shearflame/solvers.hpp"

namespace shearflame {

enum class EstimateMethod { kDiscountExtrapolated, kLongTimeSlope, kInviscidQuadrature };

const char* to_string(EstimateMethod method) noexcept;

/// Default threshold on the final oscillation of lambda v_lambda (or of the
/// slope field) below which a run counts as homogenizing. Calibrated on the
/// cellular n = 2 profile: homogenizing runs end near 1e-3, runs past A1
/// stay above 0.3.
inline constexpr double kDefaultUniformityThreshold = 0.05;

/// C in the bound slack 10 residual + C h.
inline constexpr double kDefaultBoundSlack = 2.0;

/// One record per solve, so every reported number can be traced back.
struct SolveRecord {
  double lambda = 0.0;      ///< 0 for long-time runs
  double horizon = 0.0;     ///< 0 for discounted solves
  double mean_value = 0.0;  ///< mean(-lambda v) or mean(-v/T)
  double uniformity = 0.0;
  double residual = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
  BoundCheck bounds;  ///< discounted bounds; default (ok) for long-time runs
};

struct EffectiveEstimate {
  Direction dir;
  PhysParams params;
  EstimateMethod method = EstimateMethod::kDiscountExtrapolated;
  double value = 0.0;
  double error_bar = 0.0;
  double uniformity = 0.0;
  bool homogenized = false;
  bool valid = true;
  std::string invalid_reason;
  std::vector<double> schedule;  ///< lambdas, or snapshot times for long-time runs
  double horizon = 0.0;
  int grid_n = 0;
  std::vector<SolveRecord> solves;
  double corrector_residual = 0.0;  ///< sup|rhs(v) - mean rhs(v)| at the last lambda
  /// Number of converged solves whose runtime bound check failed.
  int bound_violations = 0;
  std::optional<ScalarField> last_v;  ///< v at the last lambda (or v(T))
};

struct EstimateOptions {
  SolveOptions solve;
  double theta_u = kDefaultUniformityThreshold;
  /// Start each lambda from the previous solution, rescaled either as a whole
  /// or in its mean only, whichever has the smaller residual.
  bool warm_start = true;
  /// Start the first lambda from the solution on successively halved grids
  /// (down to 16 cells). Same fixed point, fewer fine-grid steps.
  bool coarse_start = true;
  double bound_slack = kDefaultBoundSlack;
};

/// Default schedule {0.08, 0.04, 0.02, 0.01}.
std::vector<double> default_schedule();

/// Vanishing-discount estimate: mean(-lambda v_lambda) per lambda, linear
/// Richardson extrapolation in lambda of the last two, error bar
/// |last mean - value| + last oscillation. Any non-converged solve marks the
/// estimate invalid.
EffectiveEstimate estimate_discount(const Direction& dir, const PhysParams& params,
                                    const ShearProfile& f, const std::vector<double>& schedule,
                                    const EstimateOptions& options = {});

/// Long-time estimate: mean(-v(T)/T) from v(0) = 0, error bar including
/// |value(T) - value(T/2)|.
EffectiveEstimate estimate_longtime(const Direction& dir, const PhysParams& params,
                                    const ShearProfile& f, double horizon,
                                    const EstimateOptions& options = {});

/// sup|rhs(v) - mean(rhs(v))|: how far v is from an exact corrector.
double approximate_corrector_residual(const ScalarField& v, const Direction& dir,
                                      const PhysParams& params, const ShearProfile& f);

struct ConnectionReport {
  EffectiveEstimate non_cutoff;
  EffectiveEstimate cutoff;
  double hbar = 0.0;
  double hbar_plus = 0.0;
  double a_force = 0.0;  ///< A F(P)
  double gap = 0.0;      ///< |hbar_plus - max(hbar, A F(P))|
  bool valid = false;
  std::string invalid_reason;
};

/// Compares the cutoff estimate against max(non-cutoff estimate, A F(P)).
ConnectionReport connection_check(const Direction& dir, double d, double A, const ShearProfile& f,
                                  const std::vector<double>& schedule,
                                  const EstimateOptions& options = {});

/// Inviscid effective Hamiltonian for n = 1: the smallest
/// H >= |p_last| + A max(p_last f) with
///   mean_x sqrt((H - A p_last f)^2 - p_last^2) >= |p|,
/// by bisection with node-average quadrature on n_dense >= 4096 nodes.
double inviscid_hbar_1d(const Direction& dir, double A, const ShearProfile& f1,
                        int n_dense = 4096);

/// Estimate report JSON: {P, d, A, cutoff, method, value, error_bar,
/// uniformity, homogenized, schedule, grid_N, residuals[]} plus a few
/// traceability fields.
std::string to_json(const EffectiveEstimate& estimate, int indent = 2);

}  // namespace shearflame
