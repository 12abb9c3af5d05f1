#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shearflame/fields.hpp"
#include "shearflame/operators.hpp"
#include "shearflame/profiles.hpp"

namespace shearflame {

struct SolveOptions {
  double tol = 1e-6;                 ///< sup-norm residual target
  std::int64_t max_iter = 2'000'000;
  int dt_refresh = 100;              ///< steps between stable_dt updates
  /// Remove the mean of the residual by an exact constant shift each step.
  /// Constants are invisible to the spatial operator, so the fixed point is
  /// unchanged; only the slow constant mode is skipped.
  bool project_constant_mode = true;
  /// Per-node pseudo-time steps 0.5 / (lambda + local stiffness) instead of
  /// one global step. Same fixed point; pinned nodes relax at rate ~1.
  bool local_time_stepping = true;
  /// Anderson acceleration depth for the local-step map (0 disables). The
  /// history restarts whenever the residual jumps.
  int anderson_depth = 5;
  /// Initial field; defaults to the mean-field constant.
  std::optional<ScalarField> initial;
};

struct DiscountedSolution {
  ScalarField v;
  double lambda = 0.0;
  double residual = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
  double final_dt = 0.0;
};

/// Pseudo-time marching v <- v - dt (lambda v + rhs(v)) towards the periodic
/// solution of lambda v + G[v] = 0. Throws kDivergence if the residual
/// grows tenfold; returns converged = false at max_iter.
DiscountedSolution solve_discounted(double lambda, const Direction& dir, const PhysParams& params,
                                    const ShearProfile& f, const SolveOptions& options = {});

/// Mean-field initial value -(|P| + A p_last mean f) / lambda.
ScalarField mean_field_initial(double lambda, const Direction& dir, const PhysParams& params,
                               const ShearProfile& f);

/// Discounted-solution bounds
///   min(lambda v) >= -|P| - A max(p_last f) - slack,
///   max(lambda v) <= -|P| - A min(p_last f) + slack,
///   lambda sup|Dv| <= A |p_last| lip(f) + slack_grad.
struct BoundCheck {
  double lower_violation = 0.0;  ///< > 0 when violated, in units of lambda v
  double upper_violation = 0.0;
  double gradient_violation = 0.0;
  bool ok() const noexcept {
    return lower_violation <= 0.0 && upper_violation <= 0.0 && gradient_violation <= 0.0;
  }
};

/// `h_constant` is the C in slack = 10 residual + C h.
BoundCheck check_discounted_bounds(const DiscountedSolution& sol, const Direction& dir,
                                   const PhysParams& params, const ShearProfile& f,
                                   double h_constant);

struct EvolutionTrace {
  struct Snapshot {
    double t;
    ScalarField v;
  };
  std::vector<Snapshot> snapshots;
  std::vector<Snapshot> slope;  ///< -v / t, recorded for t >= 1
  std::vector<std::pair<double, double>> grad_sup;
  std::int64_t steps = 0;
  double final_t = 0.0;
  ScalarField final_v;
};

struct EvolveOptions {
  std::vector<double> snapshot_times;
  /// Records (t, sup|Dv|) every this many steps (and at every snapshot).
  int grad_every = 200;
  int dt_refresh = 100;
  std::optional<ScalarField> initial;
  double initial_time = 0.0;
};

/// Explicit marching of v_t + G[v] = 0 from v = 0 up to T.
EvolutionTrace evolve(const Direction& dir, const PhysParams& params, const ShearProfile& f,
                      double horizon, const EvolveOptions& options = {});

/// Worst value of sup|Dv(t)| - (A |p_last| lip(f) t + C h t) over a trace.
double gradient_bound_violation(const EvolutionTrace& trace, const Direction& dir,
                                const PhysParams& params, const ShearProfile& f,
                                double h_constant);

/// Dense 1-D discounted solve (n = 1): resamples a 1-D profile onto
/// n_dense >= 1024 nodes by periodic linear interpolation and runs the same
/// marching there.
DiscountedSolution solve_line(double lambda, const Direction& dir, const PhysParams& params,
                              const ShearProfile& f1, int n_dense,
                              const SolveOptions& options = {});

/// Resamples a 1-D profile by periodic linear interpolation.
ShearProfile resample_line(const ShearProfile& f1, int cells);

/// Checkpoint: CSV `node,v` plus a sidecar `<path>.meta` key=value block.
struct Checkpoint {
  ScalarField v;
  double lambda;
  Direction dir;
  PhysParams params;
  std::int64_t iteration;
  double residual;
};
void write_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace shearflame
