#include "shearflame/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "shearflame/error.hpp"

namespace shearflame {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kNonFinite: return "non_finite";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kNoSignChange: return "no_sign_change";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

TorusGrid::TorusGrid(int dim, int cells) : dim_(dim), cells_(cells) {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(ErrorKind::kInvalidArgument,
                "TorusGrid: dimension must be 1, 2 or 3, got " + std::to_string(dim));
  }
  if (cells < kMinCells) {
    throw Error(ErrorKind::kInvalidArgument,
                "TorusGrid: need at least 8 cells per axis, got " + std::to_string(cells));
  }
  double total = 1.0;
  for (int a = 0; a < dim; ++a) total *= cells;
  if (total > static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    throw Error(ErrorKind::kInvalidArgument, "TorusGrid: too many nodes");
  }
  spacing_ = 1.0 / cells;
  if (spacing_ * cells != 1.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "TorusGrid: 1/N is not exact enough for N = " + std::to_string(cells));
  }
  size_ = static_cast<std::size_t>(total);

  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) {
    strides_[a] = s;
    s *= static_cast<std::size_t>(cells);
  }

  auto tables = std::make_shared<Tables>();
  for (int a = 0; a < dim; ++a) {
    auto& plus = tables->plus[a];
    auto& minus = tables->minus[a];
    plus.resize(size_);
    minus.resize(size_);
    const std::size_t st = strides_[a];
    const std::size_t span = st * static_cast<std::size_t>(cells);
    for (std::size_t node = 0; node < size_; ++node) {
      const std::size_t c = (node / st) % static_cast<std::size_t>(cells);
      plus[node] = static_cast<std::uint32_t>(c + 1 < static_cast<std::size_t>(cells)
                                                  ? node + st
                                                  : node + st - span);
      minus[node] = static_cast<std::uint32_t>(c > 0 ? node - st : node + span - st);
    }
  }
  tables_ = std::move(tables);
}

std::array<int, TorusGrid::kMaxDim> TorusGrid::coords(std::size_t node) const noexcept {
  std::array<int, kMaxDim> c{};
  for (int a = 0; a < dim_; ++a) {
    c[a] = static_cast<int>((node / strides_[a]) % static_cast<std::size_t>(cells_));
  }
  return c;
}

std::size_t TorusGrid::index(std::span<const int> coords) const {
  if (static_cast<int>(coords.size()) != dim_) {
    throw Error(ErrorKind::kInvalidArgument, "TorusGrid::index: wrong coordinate count");
  }
  std::size_t node = 0;
  for (int a = 0; a < dim_; ++a) {
    const int w = ((coords[a] % cells_) + cells_) % cells_;
    node += static_cast<std::size_t>(w) * strides_[a];
  }
  return node;
}

ScalarField::ScalarField(TorusGrid grid, double fill)
    : grid_(std::move(grid)), values_(grid_.size(), fill) {}

ScalarField::ScalarField(TorusGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "ScalarField: value count does not match grid");
  }
}

double ScalarField::max() const noexcept {
  double m = values_[0];
  for (double x : values_) m = std::max(m, x);
  return m;
}

double ScalarField::min() const noexcept {
  double m = values_[0];
  for (double x : values_) m = std::min(m, x);
  return m;
}

double ScalarField::sum() const noexcept {
  double s = 0.0;
  for (double x : values_) s += x;
  return s;
}

double ScalarField::max_abs() const noexcept {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

void ScalarField::require_finite(const char* what) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      std::ostringstream os;
      os << what << ": non-finite value at node " << i;
      throw Error(ErrorKind::kNonFinite, os.str());
    }
  }
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  if (!(grid_ == other.grid_)) {
    throw Error(ErrorKind::kInvalidArgument, "ScalarField: grid mismatch");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  if (!(grid_ == other.grid_)) {
    throw Error(ErrorKind::kInvalidArgument, "ScalarField: grid mismatch");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) noexcept {
  for (double& x : values_) x *= s;
  return *this;
}

ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

ScalarField restrict_injection(const ScalarField& fine) {
  const TorusGrid& g = fine.grid();
  if (g.cells() % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument, "restrict_injection: odd cell count");
  }
  TorusGrid coarse(g.dim(), g.cells() / 2);
  ScalarField out(coarse);
  for (std::size_t x = 0; x < coarse.size(); ++x) {
    auto c = coarse.coords(x);
    for (int a = 0; a < g.dim(); ++a) c[a] *= 2;
    out[x] = fine[g.index(std::span<const int>(c.data(), static_cast<std::size_t>(g.dim())))];
  }
  return out;
}

ScalarField prolong_linear(const ScalarField& coarse) {
  const TorusGrid& g = coarse.grid();
  const int n = g.dim();
  TorusGrid fine(n, 2 * g.cells());
  ScalarField out(fine);
  for (std::size_t x = 0; x < fine.size(); ++x) {
    const auto c = fine.coords(x);
    // Average over the 2^k coarse corners, k = number of odd coordinates.
    double sum = 0.0;
    int corners = 0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::array<int, TorusGrid::kMaxDim> cc{};
      bool skip = false;
      for (int a = 0; a < n; ++a) {
        const bool up = (mask >> a) & 1;
        if (up && c[a] % 2 == 0) skip = true;
        cc[a] = c[a] / 2 + (up ? 1 : 0);
      }
      if (skip) continue;
      sum += coarse[g.index(std::span<const int>(cc.data(), static_cast<std::size_t>(n)))];
      ++corners;
    }
    out[x] = sum / corners;
  }
  return out;
}

double Direction::p_norm_sq() const noexcept {
  double s = 0.0;
  for (double x : p) s += x * x;
  return s;
}

double Direction::norm() const noexcept { return std::sqrt(p_norm_sq() + p_last * p_last); }

Direction Direction::scaled(double s) const {
  Direction out = *this;
  for (double& x : out.p) x *= s;
  out.p_last *= s;
  return out;
}

void Direction::validate() const {
  for (double x : p) {
    if (!std::isfinite(x)) throw Error(ErrorKind::kInvalidArgument, "Direction: non-finite p");
  }
  if (!std::isfinite(p_last)) {
    throw Error(ErrorKind::kInvalidArgument, "Direction: non-finite p_last");
  }
  if (!(norm() > 0.0)) throw Error(ErrorKind::kInvalidArgument, "Direction: |P| must be > 0");
}

Direction vertical_direction(int n, double sign) {
  return Direction{std::vector<double>(static_cast<std::size_t>(n), 0.0), sign < 0 ? -1.0 : 1.0};
}

void StencilScratch::resize(const TorusGrid& grid) {
  for (int a = 0; a < grid.dim(); ++a) {
    grad[a].resize(grid.size());
    flux[a].resize(grid.size());
    inv_norm[a].resize(grid.size());
  }
}

namespace detail {

void central_gradient(const TorusGrid& grid, std::span<const double> v,
                      StencilScratch& scratch) {
  const double inv2h = 0.5 / grid.spacing();
  const std::size_t size = grid.size();
  for (int a = 0; a < grid.dim(); ++a) {
    const auto plus = grid.plus_table(a);
    const auto minus = grid.minus_table(a);
    double* g = scratch.grad[a].data();
    for (std::size_t x = 0; x < size; ++x) g[x] = (v[plus[x]] - v[minus[x]]) * inv2h;
  }
}

void curvature_from_gradient(const TorusGrid& grid, std::span<const double> v,
                             std::span<const double> p, double denom_sq,
                             StencilScratch& scratch, std::span<double> kappa) {
  const int n = grid.dim();
  const double invh = 1.0 / grid.spacing();
  const std::size_t size = grid.size();

  // flux[a][x] lives on the face between x and x + h e_a.
  for (int a = 0; a < n; ++a) {
    const auto plus = grid.plus_table(a);
    double* fl = scratch.flux[a].data();
    double* inv = scratch.inv_norm[a].data();
    for (std::size_t x = 0; x < size; ++x) {
      const std::size_t xp = plus[x];
      const double qa = p[a] + (v[xp] - v[x]) * invh;
      double sq = denom_sq + qa * qa;
      for (int b = 0; b < n; ++b) {
        if (b == a) continue;
        const double* g = scratch.grad[b].data();
        const double qb = p[b] + 0.5 * (g[x] + g[xp]);
        sq += qb * qb;
      }
      inv[x] = 1.0 / std::sqrt(sq);
      fl[x] = qa * inv[x];
    }
  }

  for (std::size_t x = 0; x < size; ++x) kappa[x] = 0.0;
  for (int a = 0; a < n; ++a) {
    const auto minus = grid.minus_table(a);
    const double* fl = scratch.flux[a].data();
    for (std::size_t x = 0; x < size; ++x) kappa[x] += (fl[x] - fl[minus[x]]) * invh;
  }
}

}  // namespace detail

std::vector<ScalarField> grad_central(const ScalarField& v) {
  v.require_finite("grad_central");
  const auto& grid = v.grid();
  StencilScratch scratch;
  scratch.resize(grid);
  detail::central_gradient(grid, v.values(), scratch);
  std::vector<ScalarField> out;
  out.reserve(static_cast<std::size_t>(grid.dim()));
  for (int a = 0; a < grid.dim(); ++a) out.emplace_back(grid, std::move(scratch.grad[a]));
  return out;
}

ScalarField curvature_kappa(const ScalarField& v, const Direction& dir, double f_reg) {
  v.require_finite("curvature_kappa");
  const auto& grid = v.grid();
  if (dir.dim() != grid.dim()) {
    throw Error(ErrorKind::kInvalidArgument, "curvature_kappa: direction/grid dimension mismatch");
  }
  if (f_reg < 0.0) throw Error(ErrorKind::kInvalidArgument, "curvature_kappa: f_reg < 0");
  double denom_sq = dir.p_last * dir.p_last;
  if (dir.p_last == 0.0) {
    if (f_reg == 0.0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "curvature_kappa: p_last = 0 requires a positive f_reg");
    }
    denom_sq = f_reg * f_reg;
  }
  StencilScratch scratch;
  scratch.resize(grid);
  detail::central_gradient(grid, v.values(), scratch);
  ScalarField kappa(grid);
  detail::curvature_from_gradient(grid, v.values(), dir.p, denom_sq, scratch, kappa.values());
  kappa.require_finite("curvature_kappa");
  return kappa;
}

double oscillation(const ScalarField& v) {
  v.require_finite("oscillation");
  return v.max() - v.min();
}

}  // namespace shearflame
