#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "shearflame/error.hpp"
#include "shearflame/fields.hpp"

using namespace shearflame;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

ScalarField sine(const TorusGrid& g, double eps = 1.0) {
  return ScalarField::sample(g, [&](std::span<const double> x) { return eps * std::sin(kTwoPi * x[0]); });
}
}  // namespace

TEST_CASE("grid spacing and wrapping") {
  TorusGrid g(2, 16);
  CHECK(g.spacing() * g.cells() == 1.0);
  CHECK(g.size() == 256);
  const int c[2] = {-1, 17};
  const auto node = g.index(c);
  CHECK(g.coords(node)[0] == 15);
  CHECK(g.coords(node)[1] == 1);
  CHECK(g.plus(0, g.index(std::array<int, 2>{15, 3})) == g.index(std::array<int, 2>{0, 3}));
  CHECK(g.minus(1, g.index(std::array<int, 2>{4, 0})) == g.index(std::array<int, 2>{4, 15}));
}

TEST_CASE("grid rejects bad shapes") {
  CHECK_THROWS_AS(TorusGrid(2, 4), Error);
  CHECK_THROWS_AS(TorusGrid(0, 16), Error);
  CHECK_THROWS_AS(TorusGrid(4, 16), Error);
}

TEST_CASE("fields reject non-finite values") {
  TorusGrid g(1, 8);
  ScalarField v(g, 0.0);
  v[3] = std::nan("");
  CHECK_THROWS_AS(v.require_finite("test"), Error);
}

TEST_CASE("gradient of constants vanishes") {
  TorusGrid g(2, 16);
  for (const auto& c : grad_central(ScalarField(g, 3.5))) CHECK(c.max_abs() == 0.0);
}

TEST_CASE("central gradient of a sine is second order") {
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    TorusGrid g(1, n);
    const auto d = grad_central(sine(g))[0];
    const double h = g.spacing();
    CHECK(d[0] == doctest::Approx(std::sin(kTwoPi * h) / h).epsilon(1e-14));
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      err = std::max(err, std::abs(d[i] - kTwoPi * std::cos(kTwoPi * g.position(i, 0))));
    }
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("curvature of flat fronts is zero") {
  TorusGrid g(2, 16);
  const ScalarField zero(g, 0.0);
  CHECK(curvature_kappa(zero, Direction{{0.0, 0.0}, 1.0}).max_abs() == 0.0);
  CHECK(curvature_kappa(zero, Direction{{0.7, -1.3}, 0.4}).max_abs() < 1e-12);
}

TEST_CASE("curvature matches the linearised value") {
  TorusGrid g(1, 64);
  const double eps = 0.01;
  const auto kappa = curvature_kappa(sine(g, eps), Direction{{0.0}, 1.0});
  const double peak = eps * kTwoPi * kTwoPi;
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    err = std::max(err, std::abs(kappa[i] + peak * std::sin(kTwoPi * g.position(i, 0))));
  }
  CHECK(err / peak <= 0.05);
}

TEST_CASE("curvature needs a regularisation when p_last vanishes") {
  TorusGrid g(1, 16);
  CHECK_THROWS_AS(curvature_kappa(sine(g), Direction{{1.0}, 0.0}), Error);
  CHECK_NOTHROW(curvature_kappa(sine(g), Direction{{1.0}, 0.0}, 0.1));
}

TEST_CASE("oscillation") {
  TorusGrid g(1, 32);
  CHECK(oscillation(ScalarField(g, -2.0)) == 0.0);
  const auto c = ScalarField::sample(g, [](std::span<const double> x) { return std::cos(kTwoPi * x[0]); });
  CHECK(oscillation(c) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("direction norm and scaling") {
  Direction p{{3.0}, 4.0};
  CHECK(p.norm() == 5.0);
  CHECK(p.scaled(2.0).norm() == 10.0);
  CHECK_THROWS_AS((Direction{{0.0}, 0.0}).validate(), Error);
  CHECK(vertical_direction(2, -1.0).p_last == -1.0);
}

TEST_CASE("restriction and linear prolongation") {
  TorusGrid g(2, 8);
  const auto affine_in_cell = ScalarField::sample(g, [](std::span<const double> x) {
    return std::cos(kTwoPi * x[0]) + 2.0 * std::sin(kTwoPi * x[1]);
  });
  const auto fine = prolong_linear(affine_in_cell);
  CHECK(fine.grid().cells() == 16);
  const auto back = restrict_injection(fine);
  for (std::size_t x = 0; x < g.size(); ++x) CHECK(back[x] == affine_in_cell[x]);
  // Odd nodes are averages of their coarse neighbours.
  const int mid[2] = {1, 1};
  const int c00[2] = {0, 0}, c10[2] = {1, 0}, c01[2] = {0, 1}, c11[2] = {1, 1};
  const double avg = 0.25 * (affine_in_cell[g.index(c00)] + affine_in_cell[g.index(c10)] +
                             affine_in_cell[g.index(c01)] + affine_in_cell[g.index(c11)]);
  CHECK(fine[fine.grid().index(mid)] == doctest::Approx(avg).epsilon(1e-15));
  CHECK_THROWS_AS(restrict_injection(ScalarField(TorusGrid(1, 7), 0.0)), Error);
}
