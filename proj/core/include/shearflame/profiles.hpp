#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shearflame/fields.hpp"

namespace shearflame {

/// A sampled shear-flow profile f together with the extrema and Lipschitz
/// metadata every solver needs. Immutable after construction.
class ShearProfile {
 public:
  /// Wraps samples. `c1_compliant` is a construction-time assertion that the
  /// max set is Z^n and the min set is Z^n + q_shift; it is not verified.
  ShearProfile(ScalarField samples, std::string name, bool c1_compliant = false,
               std::optional<std::vector<double>> q_shift = std::nullopt);

  const ScalarField& field() const noexcept { return field_; }
  const TorusGrid& grid() const noexcept { return field_.grid(); }
  const std::string& name() const noexcept { return name_; }
  double f_max() const noexcept { return f_max_; }
  double f_min() const noexcept { return f_min_; }
  double max_abs() const noexcept { return std::max(std::abs(f_max_), std::abs(f_min_)); }
  /// 1.1 * sup |grad_central f|.
  double lip_bound() const noexcept { return lip_bound_; }
  bool c1_compliant() const noexcept { return c1_compliant_; }
  const std::optional<std::vector<double>>& q_shift() const noexcept { return q_shift_; }
  bool is_constant() const noexcept { return f_max_ == f_min_; }

 private:
  ScalarField field_;
  std::string name_;
  double f_max_ = 0.0;
  double f_min_ = 0.0;
  double lip_bound_ = 0.0;
  bool c1_compliant_ = false;
  std::optional<std::vector<double>> q_shift_;
};

/// f(x) = (1/n) sum_i (cos(2 pi x_i) - 1); max 0 on Z^n, min -2 on Z^n + (1/2,...,1/2).
ShearProfile cellular_profile(int n, const TorusGrid& grid);

ShearProfile constant_profile(double c, const TorusGrid& grid);

/// Samples a closure; rejects closures that are not Z^n-periodic.
ShearProfile profile_from_function(const TorusGrid& grid,
                                   const std::function<double(std::span<const double>)>& fn,
                                   std::string name);

/// Result of the sign-changing construction f = -max{0, W}.
struct Counterexample {
  ShearProfile profile;
  ScalarField w;
  double psi_amplitude;
  double d;
};

/// Psi(x) = a * sum_i sin(2 pi x_i) and
/// W = (1 - d div(DPsi / sqrt(1+|DPsi|^2))) sqrt(1+|DPsi|^2), evaluated in
/// closed form at the nodes. Throws kNoSignChange unless W changes sign.
Counterexample counterexample_profile(double psi_amplitude, double d, const TorusGrid& grid);

/// Closed-form W at a point (test oracle and dense evaluation).
double counterexample_w(std::span<const double> x, double psi_amplitude, double d);

/// Smallest amplitude on a doubling ladder starting at `start` for which
/// W changes sign on a dense grid of `dense_cells` per axis.
double minimal_sign_changing_amplitude(int n, double d, int dense_cells = 256,
                                       double start = 0.01);

/// F(P) = max_x p_last f(x).
double driven_force(const Direction& dir, const ShearProfile& f);

/// min_x p_last f(x).
double min_drift(const Direction& dir, const ShearProfile& f);

/// Profile CSV: header `x1,...,xn,f`, one row per node, row order
/// lexicographic in indices (last index fastest), N^n rows.
ShearProfile read_profile_csv(const std::string& path, std::string name = {});
void write_profile_csv(const std::string& path, const ShearProfile& f);

}  // namespace shearflame
