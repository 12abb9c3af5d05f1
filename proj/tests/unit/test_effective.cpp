#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "json.hpp"

#include "shearflame/effective.hpp"
#include "shearflame/error.hpp"

using namespace shearflame;

namespace {
ShearProfile bump(int cells) {
  return profile_from_function(
      TorusGrid(1, cells),
      [](std::span<const double> x) { return std::cos(2.0 * std::numbers::pi * x[0]) - 1.0; }, "bump");
}
}  // namespace

TEST_CASE("constant profile estimates are exact") {
  TorusGrid g(2, 16);
  const Direction dir{{0.3, 0.0}, 1.0};
  const auto f = constant_profile(-0.4, g);
  const PhysParams params{0.2, 0.5, false};
  const double expected = dir.norm() - 0.5 * 0.4;
  const auto e = estimate_discount(dir, params, f, default_schedule());
  CHECK(e.valid);
  CHECK(e.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(e.uniformity == 0.0);
  CHECK(e.homogenized);
  const auto lt = estimate_longtime(dir, params, f, 8.0);
  CHECK(lt.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(lt.uniformity < 1e-12);
}

TEST_CASE("zero intensity") {
  TorusGrid g(2, 16);
  const Direction dir{{0.0, 0.5}, 1.0};
  const auto f = cellular_profile(2, g);
  const auto e = estimate_discount(dir, PhysParams{0.2, 0.0, true}, f, default_schedule());
  CHECK(e.value == doctest::Approx(dir.norm()).epsilon(1e-12));
  CHECK(e.homogenized);
  CHECK(e.error_bar >= 0.0);
  CHECK(estimate_longtime(dir, PhysParams{0.2, 0.0, true}, f, 8.0).value ==
        doctest::Approx(dir.norm()).epsilon(1e-12));
  const auto rep = connection_check(dir, 0.2, 0.0, f, default_schedule());
  CHECK(rep.valid);
  CHECK(rep.gap < 1e-12);
}

TEST_CASE("constant profile connection") {
  TorusGrid g(2, 16);
  const auto rep = connection_check(vertical_direction(2), 0.2, 0.8, constant_profile(-0.5, g),
                                    default_schedule());
  CHECK(rep.valid);
  CHECK(rep.hbar == doctest::Approx(1.0 - 0.4));
  CHECK(rep.a_force == doctest::Approx(-0.4));
  CHECK(rep.gap < 1e-10);
}

TEST_CASE("long-time and discount estimates agree when homogenizing") {
  TorusGrid g(2, 16);
  const auto f = cellular_profile(2, g);
  const PhysParams params{0.2, 0.3, true};
  const auto ed = estimate_discount(vertical_direction(2), params, f, default_schedule());
  const auto el = estimate_longtime(vertical_direction(2), params, f, 16.0);
  CHECK(ed.homogenized);
  CHECK(el.homogenized);
  CHECK(std::abs(ed.value - el.value) <= std::max(ed.error_bar, el.error_bar));
  CHECK(ed.bound_violations == 0);
  CHECK(ed.corrector_residual <= ed.uniformity + 1e-5);
}

TEST_CASE("schedule preconditions") {
  TorusGrid g(1, 16);
  const auto f = cellular_profile(1, g);
  const Direction dir{{0.0}, 1.0};
  CHECK_THROWS_AS(estimate_discount(dir, PhysParams{}, f, {0.08, 0.04}), Error);
  CHECK_THROWS_AS(estimate_discount(dir, PhysParams{}, f, {0.08, 0.04, 0.04}), Error);
  CHECK_THROWS_AS(estimate_longtime(dir, PhysParams{}, f, 4.0), Error);
}

TEST_CASE("non-converged solves flag the estimate") {
  TorusGrid g(2, 16);
  EstimateOptions opts;
  opts.solve.max_iter = 3;
  const auto e = estimate_discount(vertical_direction(2), PhysParams{0.2, 0.5, true},
                                   cellular_profile(2, g), default_schedule(), opts);
  CHECK_FALSE(e.valid);
  CHECK_FALSE(e.homogenized);
  CHECK_FALSE(e.invalid_reason.empty());
}

TEST_CASE("inviscid effective Hamiltonian") {
  const auto f = bump(4096);
  CHECK(inviscid_hbar_1d(Direction{{0.0}, 1.0}, 0.5, f) == 1.0);
  CHECK(inviscid_hbar_1d(Direction{{0.0}, -1.0}, 0.5, f) == doctest::Approx(2.0));
  CHECK(inviscid_hbar_1d(Direction{{0.75}, 1.0}, 0.0, f) == doctest::Approx(1.25).epsilon(1e-12));
  // Values from the independent numpy quadrature with 65536 nodes.
  CHECK(inviscid_hbar_1d(Direction{{1.0}, 1.0}, 0.5, f) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(inviscid_hbar_1d(Direction{{2.0}, 1.0}, 0.5, f) == doctest::Approx(1.7434307142976).epsilon(1e-6));
  CHECK(inviscid_hbar_1d(Direction{{3.0}, 1.0}, 0.5, f) == doctest::Approx(2.664522024514185).epsilon(1e-6));
  CHECK_THROWS_AS(inviscid_hbar_1d(Direction{{1.0}, 0.0}, 0.5, f), Error);
  CHECK_THROWS_AS(inviscid_hbar_1d(Direction{{1.0}, 1.0}, 0.5, f, 1024), Error);
}

TEST_CASE("report JSON carries the required fields") {
  TorusGrid g(1, 16);
  const auto e = estimate_discount(Direction{{0.0}, 1.0}, PhysParams{0.2, 0.2, true},
                                   cellular_profile(1, g), default_schedule());
  const auto j = nlohmann::json::parse(to_json(e));
  for (const char* key : {"P", "d", "A", "cutoff", "method", "value", "error_bar", "uniformity",
                          "homogenized", "schedule", "grid_N", "residuals"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["method"] == "discount-extrapolated");
  CHECK(j["residuals"].size() == 4);
  CHECK(j["grid_N"] == 16);
}
