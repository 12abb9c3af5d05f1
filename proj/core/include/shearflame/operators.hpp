#pragma once

#include <span>
#include <vector>

#include "shearflame/fields.hpp"
#include "shearflame/profiles.hpp"

namespace shearflame {

/// Physical parameters of the reduced G-equation.
struct PhysParams {
  double d = 0.2;      ///< Markstein number (>= 0; 0 is the inviscid path)
  double A = 0.0;      ///< flow intensity (>= 0)
  bool cutoff = true;  ///< apply (1 - d kappa)_+

  void validate() const;
};

struct OperatorOutput {
  ScalarField rhs;    ///< speed * |P + Dv|_LF + A p_last f
  ScalarField speed;  ///< 1 - d kappa, clamped at 0 iff cutoff
  ScalarField kappa;
};

/// Spatial operator
///   (1 - d kappa)_(+) sqrt(p_last^2 + |p + Dv|^2) + A p_last f
/// with the first-order magnitude in local Lax-Friedrichs form
///   H(p + D_0 v) - sum_i alpha_i (v(x+h e_i) - 2 v(x) + v(x-h e_i)) / (2h),
/// scaled by the speed. Throws for p_last = 0.
OperatorOutput g_operator(const ScalarField& v, const Direction& dir, const PhysParams& params,
                          const ShearProfile& f);

/// Explicit-step bound from the diagonal of the linearised scheme:
///   0.5 * min(h^2 / (2 d K), h / (2 n max(speed_max, 1))),
///   K = max_x |P + Dv|_LF(x) * sum_i (1/|Q|_{x+h/2 e_i} + 1/|Q|_{x-h/2 e_i}),
/// where |Q| is the face norm sqrt(p_last^2 + |p + Dv|^2). On flat fields
/// this is 0.5 * min(h^2 / (4 d n), h / (2 n)).
double stable_dt(const ScalarField& v, const Direction& dir, const PhysParams& params,
                 const ShearProfile& f);

/// Reusable evaluator for the solvers: holds the drift samples and scratch
/// buffers so a marching step does no allocation.
class GOperator {
 public:
  struct Stats {
    double speed_max = 0.0;   ///< max speed after the clamp
    double grad_max = 0.0;    ///< max |D_0 v|
    double q_max_sq = 0.0;    ///< max |p + D_0 v|^2
    double curvature_stiffness = 0.0;  ///< K above
  };

  GOperator(const Direction& dir, const PhysParams& params, const ShearProfile& f);

  const TorusGrid& grid() const noexcept { return grid_; }
  const Direction& direction() const noexcept { return dir_; }
  const PhysParams& params() const noexcept { return params_; }
  std::span<const double> drift() const noexcept { return drift_; }

  /// rhs (and optionally speed / kappa) of v. Spans may be empty to skip.
  /// `stiffness`, when given, receives the per-node diagonal bound
  ///   2 d |P+Dv|_LF sum_faces 1/|Q| / h^2 + 2 n |s| / h
  /// (curvature part dropped where the cutoff clamps the speed).
  Stats evaluate(std::span<const double> v, std::span<double> rhs,
                 std::span<double> speed = {}, std::span<double> kappa = {},
                 std::span<double> stiffness = {});

  double stable_dt(const Stats& stats) const noexcept;

 private:
  TorusGrid grid_;
  Direction dir_;
  PhysParams params_;
  std::vector<double> drift_;
  StencilScratch scratch_;
  std::vector<double> kappa_;
};

}  // namespace shearflame
