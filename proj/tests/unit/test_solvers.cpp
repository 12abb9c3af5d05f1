#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "shearflame/error.hpp"
#include "shearflame/solvers.hpp"

using namespace shearflame;

namespace {
// mean(-lambda v) for the cellular flow, d = 0.2, A = 0.3, lambda = 0.05,
// computed once on a 128^2 grid.
constexpr double kCellularFineGrid = 0.7070514894;
}  // namespace

TEST_CASE("constant profile is an exact fixed point") {
  TorusGrid g(2, 16);
  const Direction dir{{0.2, 0.1}, 0.9};
  const PhysParams params{0.2, 0.6, true};
  const auto sol = solve_discounted(0.05, dir, params, constant_profile(-0.3, g));
  CHECK(sol.converged);
  const double expected = -(dir.norm() + 0.6 * 0.9 * -0.3);
  CHECK(0.05 * sol.v.max() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(0.05 * sol.v.min() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero intensity gives -|P|") {
  TorusGrid g(2, 16);
  const Direction dir{{0.5, 0.0}, 1.0};
  const auto sol = solve_discounted(0.08, dir, PhysParams{0.2, 0.0, true}, cellular_profile(2, g));
  CHECK(0.08 * sol.v.mean() == doctest::Approx(-dir.norm()).epsilon(1e-12));
}

TEST_CASE("cellular flow discounted solve") {
  TorusGrid g(2, 32);
  const auto f = cellular_profile(2, g);
  const Direction dir = vertical_direction(2);
  const PhysParams params{0.2, 0.3, true};
  const auto sol = solve_discounted(0.05, dir, params, f);
  REQUIRE(sol.converged);
  CHECK(sol.residual <= 1e-6);
  const double mean = -0.05 * sol.v.mean();
  CHECK(mean >= 0.4);
  CHECK(mean <= 1.0);
  CHECK(mean == doctest::Approx(kCellularFineGrid).epsilon(1e-4));
  CHECK(check_discounted_bounds(sol, dir, params, f, 2.0).ok());
}

TEST_CASE("discrete solution does not depend on the initial guess") {
  TorusGrid g(2, 16);
  const auto f = cellular_profile(2, g);
  const Direction dir = vertical_direction(2);
  const PhysParams params{0.2, 0.5, false};
  const auto a = solve_discounted(0.05, dir, params, f);
  SolveOptions other;
  other.initial = ScalarField::sample(g, [](std::span<const double> x) {
    return 40.0 * std::sin(2.0 * std::numbers::pi * (x[0] + 2.0 * x[1]));
  });
  other.local_time_stepping = false;
  const auto b = solve_discounted(0.05, dir, params, f, other);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  double diff = 0.0;
  for (std::size_t x = 0; x < g.size(); ++x) diff = std::max(diff, std::abs(a.v[x] - b.v[x]));
  // Residual r implies |v_a - v_b| <= 2 r / lambda by comparison.
  CHECK(diff <= 2.0 * (a.residual + b.residual) / 0.05);
}

TEST_CASE("acceleration does not move the fixed point") {
  TorusGrid g(2, 32);
  const auto f = cellular_profile(2, g);
  const Direction dir{{0.3, 0.4}, -1.0};
  for (bool cutoff : {false, true}) {
    const PhysParams params{0.2, 1.3, cutoff};
    SolveOptions plain;
    plain.anderson_depth = 0;
    const auto a = solve_discounted(0.04, dir, params, f);
    const auto b = solve_discounted(0.04, dir, params, f, plain);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    // Mixing helps most where nothing is clamped; with the cutoff it must at
    // least not cost more than a few percent.
    if (cutoff) {
      CHECK(a.iterations <= b.iterations * 11 / 10);
    } else {
      CHECK(a.iterations * 5 < b.iterations);
    }
    double diff = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) diff = std::max(diff, std::abs(a.v[x] - b.v[x]));
    CHECK(diff <= 2.0 * (a.residual + b.residual) / 0.04);
  }
}

TEST_CASE("non-convergence is reported, not hidden") {
  TorusGrid g(2, 16);
  SolveOptions opts;
  opts.max_iter = 5;
  const auto sol = solve_discounted(0.01, vertical_direction(2), PhysParams{0.2, 0.5, true},
                                    cellular_profile(2, g), opts);
  CHECK_FALSE(sol.converged);
  CHECK(sol.iterations == 5);
}

TEST_CASE("evolution of trivial cases") {
  TorusGrid g(2, 16);
  const Direction dir{{0.0, 0.5}, 1.0};
  EvolveOptions eo;
  eo.snapshot_times = {1.0, 2.0};
  const auto tr = evolve(dir, PhysParams{0.2, 0.4, true}, constant_profile(-0.5, g), 2.0, eo);
  const double speed = dir.norm() - 0.2;
  REQUIRE(tr.snapshots.size() == 2);
  CHECK(tr.snapshots[0].t == 1.0);
  CHECK(tr.final_t == 2.0);
  CHECK(tr.final_v.max() == doctest::Approx(-2.0 * speed).epsilon(1e-12));
  CHECK(tr.final_v.min() == doctest::Approx(-2.0 * speed).epsilon(1e-12));

  const auto zero = evolve(dir, PhysParams{0.2, 0.0, true}, cellular_profile(2, g), 2.0, eo);
  for (const auto& s : zero.slope) CHECK(s.v.mean() == doctest::Approx(dir.norm()).epsilon(1e-12));
}

TEST_CASE("slope oscillation decays below A1") {
  TorusGrid g(2, 32);
  EvolveOptions eo;
  eo.snapshot_times = {8.0, 16.0};
  const auto f = cellular_profile(2, g);
  const PhysParams params{0.2, 0.3, true};
  const auto tr = evolve(vertical_direction(2), params, f, 16.0, eo);
  REQUIRE(tr.slope.size() == 2);
  const double ratio = oscillation(tr.slope[1].v) / oscillation(tr.slope[0].v);
  CHECK(ratio >= 0.3);
  CHECK(ratio <= 0.7);
  CHECK(gradient_bound_violation(tr, vertical_direction(2), params, f, 2.0) <= 0.0);
}

TEST_CASE("dense line solver") {
  TorusGrid g(1, 64);
  const auto bump = profile_from_function(
      g, [](std::span<const double> x) { return std::cos(2.0 * std::numbers::pi * x[0]) - 1.0; },
      "bump");
  const Direction dir{{0.0}, 1.0};
  const PhysParams params{0.2, 0.5, true};

  const auto flat = solve_line(0.02, Direction{{0.6}, 0.8}, params, constant_profile(0.0, g), 1024);
  CHECK(0.02 * flat.v.mean() == doctest::Approx(-1.0).epsilon(1e-10));

  const auto line = solve_line(0.02, dir, params, bump, 1024);
  const auto generic = solve_discounted(0.02, dir, params, bump);
  REQUIRE(line.converged);
  REQUIRE(generic.converged);
  CHECK(std::abs(0.02 * line.v.mean() - 0.02 * generic.v.mean()) <= 5e-3);

  const auto dense = resample_line(bump, 1024);
  CHECK(check_discounted_bounds(line, dir, params, dense, 2.0).gradient_violation <= 0.0);
  CHECK_THROWS_AS(solve_line(0.02, dir, params, bump, 512), Error);
}

TEST_CASE("checkpoint round trip") {
  TorusGrid g(2, 8);
  const auto v = ScalarField::sample(g, [](std::span<const double> x) { return x[0] * 0.1 + std::sin(x[1]); });
  const Checkpoint cp{v, 0.04, Direction{{0.1, 0.2}, 0.7}, PhysParams{0.3, 1.5, false}, 1234, 5e-7};
  const auto path = (std::filesystem::temp_directory_path() / "shearflame_cp.csv").string();
  write_checkpoint(path, cp);
  const auto back = read_checkpoint(path);
  CHECK(back.v.grid() == g);
  for (std::size_t x = 0; x < g.size(); ++x) CHECK(back.v[x] == v[x]);
  CHECK(back.lambda == 0.04);
  CHECK(back.dir.p == cp.dir.p);
  CHECK(back.dir.p_last == 0.7);
  CHECK(back.params.A == 1.5);
  CHECK_FALSE(back.params.cutoff);
  CHECK(back.iteration == 1234);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".meta");
}
