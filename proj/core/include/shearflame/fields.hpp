#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace shearflame {

/// Uniform periodic grid on the unit torus [0,1)^n. Nodes sit at i*h with
/// h = 1/N; every index operation wraps modulo N.
class TorusGrid {
 public:
  static constexpr int kMaxDim = 3;
  static constexpr int kMinCells = 8;

  TorusGrid(int dim, int cells);

  int dim() const noexcept { return dim_; }
  int cells() const noexcept { return cells_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(int axis) const noexcept { return strides_[axis]; }

  std::size_t plus(int axis, std::size_t node) const noexcept {
    return tables_->plus[axis][node];
  }
  std::size_t minus(int axis, std::size_t node) const noexcept {
    return tables_->minus[axis][node];
  }
  std::span<const std::uint32_t> plus_table(int axis) const noexcept {
    return tables_->plus[axis];
  }
  std::span<const std::uint32_t> minus_table(int axis) const noexcept {
    return tables_->minus[axis];
  }

  /// Integer coordinates of a node (unused axes are zero).
  std::array<int, kMaxDim> coords(std::size_t node) const noexcept;
  /// Flat index of integer coordinates, wrapped onto the torus.
  std::size_t index(std::span<const int> coords) const;
  /// Physical coordinate of a node along an axis, in [0,1).
  double position(std::size_t node, int axis) const noexcept {
    return coords(node)[axis] * spacing_;
  }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
    return a.dim_ == b.dim_ && a.cells_ == b.cells_;
  }

 private:
  struct Tables {
    std::array<std::vector<std::uint32_t>, kMaxDim> plus;
    std::array<std::vector<std::uint32_t>, kMaxDim> minus;
  };

  int dim_;
  int cells_;
  double spacing_;
  std::size_t size_;
  std::array<std::size_t, kMaxDim> strides_{};
  std::shared_ptr<const Tables> tables_;
};

/// Real values sampled at every node of a TorusGrid.
class ScalarField {
 public:
  explicit ScalarField(TorusGrid grid, double fill = 0.0);
  ScalarField(TorusGrid grid, std::vector<double> values);

  template <class Fn>
  static ScalarField sample(const TorusGrid& grid, Fn&& fn) {
    ScalarField out(grid);
    std::array<double, TorusGrid::kMaxDim> x{};
    for (std::size_t node = 0; node < grid.size(); ++node) {
      const auto c = grid.coords(node);
      for (int a = 0; a < grid.dim(); ++a) x[a] = c[a] * grid.spacing();
      out.values_[node] = fn(std::span<const double>(x.data(), grid.dim()));
    }
    return out;
  }

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t node) noexcept { return values_[node]; }
  double operator[](std::size_t node) const noexcept { return values_[node]; }

  // Reductions run in node order so repeated calls are bit-identical.
  double max() const noexcept;
  double min() const noexcept;
  double sum() const noexcept;
  double mean() const noexcept { return sum() / static_cast<double>(size()); }
  double max_abs() const noexcept;

  /// Throws Error(kNonFinite) naming `what` if any value is NaN or Inf.
  void require_finite(const char* what) const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s) noexcept;

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Samples of a field on the grid with half the cells (every other node).
/// Throws unless the cell count is even.
ScalarField restrict_injection(const ScalarField& fine);
/// Periodic multilinear interpolation onto the grid with twice the cells.
ScalarField prolong_linear(const ScalarField& coarse);

/// Front-normal parameters P = (p, p_last) in R^{n+1}.
struct Direction {
  std::vector<double> p;
  double p_last = 1.0;

  int dim() const noexcept { return static_cast<int>(p.size()); }
  double p_norm_sq() const noexcept;
  double norm() const noexcept;
  Direction scaled(double s) const;
  /// Throws unless norm() > 0 and every entry is finite.
  void validate() const;
};

/// e_{n+1} in R^{n+1}, with the sign of the last entry chosen by `sign`.
Direction vertical_direction(int n, double sign = 1.0);

/// Scratch buffers reused across operator evaluations.
struct StencilScratch {
  std::array<std::vector<double>, TorusGrid::kMaxDim> grad;
  std::array<std::vector<double>, TorusGrid::kMaxDim> flux;
  /// 1 / sqrt(denom^2 + |q|^2) on each face, kept for step-size estimates.
  std::array<std::vector<double>, TorusGrid::kMaxDim> inv_norm;
  void resize(const TorusGrid& grid);
};

/// Central-difference gradient, one field per axis.
std::vector<ScalarField> grad_central(const ScalarField& v);

/// Discrete div((p+Dv)/sqrt(p_last^2+|p+Dv|^2)) in conservative face-flux
/// form. `f_reg` replaces p_last in the denominator only when p_last == 0.
ScalarField curvature_kappa(const ScalarField& v, const Direction& dir,
                            double f_reg = 0.0);

/// max(v) - min(v).
double oscillation(const ScalarField& v);

namespace detail {

/// Fills scratch.grad with central differences of v.
void central_gradient(const TorusGrid& grid, std::span<const double> v,
                      StencilScratch& scratch);

/// Writes the face-flux curvature into kappa. Requires scratch.grad to hold
/// the central gradient of v already.
void curvature_from_gradient(const TorusGrid& grid, std::span<const double> v,
                             std::span<const double> p, double denom_sq,
                             StencilScratch& scratch, std::span<double> kappa);

}  // namespace detail

}  // namespace shearflame
