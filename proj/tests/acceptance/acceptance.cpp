// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--cli PATH] [--work DIR] [--expect-fail 7,...] [--only 1,2,...]
// Exit status is 0 when every criterion passes, or fails only where listed
// in --expect-fail (those lines still print FAIL).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "shearflame/bifurcation.hpp"
#include "shearflame/effective.hpp"

using namespace shearflame;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  std::function<Outcome()> run;
};

std::string num(double x, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runtime invariants collected from every estimate the suite produces.
struct InvariantLedger {
  int estimates = 0;
  int bound_violations = 0;
  double worst_gradient_excess = -1.0;
  double worst_lipschitz_excess = -1.0;

  void record(const EffectiveEstimate& e) {
    ++estimates;
    bound_violations += e.bound_violations;
  }
};

InvariantLedger ledger;

ShearProfile cellular(int cells) { return cellular_profile(2, TorusGrid(2, cells)); }

EffectiveEstimate estimate(const Direction& dir, double d, double A, bool cutoff,
                           const ShearProfile& f) {
  auto e = estimate_discount(dir, PhysParams{d, A, cutoff}, f, default_schedule());
  ledger.record(e);
  return e;
}

Outcome criterion_trivial() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto f = cellular(32);
  const Direction dir{{0.3, -0.4}, 1.0};
  const auto zero = estimate(dir, 0.2, 0.0, true, f);
  const double rel = std::abs(zero.value - dir.norm()) / dir.norm();

  const double c = -0.7;
  const double A = 0.9;
  const auto cf = constant_profile(c, TorusGrid(2, 32));
  const auto konst = estimate(dir, 0.2, A, false, cf);
  const double expected = dir.norm() + A * dir.p_last * c;
  const double abs_err = std::abs(konst.value - expected);
  const double secs = seconds_since(t0);
  return {rel <= 1e-3 && abs_err <= 1e-6 && zero.valid && konst.valid && secs < 10.0,
          "A=0 rel err " + num(rel) + ", constant f abs err " + num(abs_err) + ", " +
              num(secs, 3) + " s"};
}

Outcome criterion_bounds() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto f = cellular(64);
  const std::vector<double> ds{0.1, 0.2, 0.4, 0.2, 0.1};
  const std::vector<Direction> dirs{Direction{{0.0, 0.0}, 1.0}, Direction{{0.5, 0.0}, 1.0},
                                    Direction{{0.3, 0.4}, -1.0}, Direction{{0.0, 1.0}, 0.5}};
  const std::vector<double> as{0.15, 0.45, 0.8, 1.3, 2.0};
  int checked = 0;
  int valid = 0;
  int outside = 0;
  double worst = -1e9;
  for (int k = 0; k < 20; ++k) {
    const Direction& dir = dirs[k % 4];
    const double d = ds[k % 5];
    const double A = as[(k / 4) % 5];
    const auto e = estimate(dir, d, A, false, f);
    ++checked;
    if (!e.valid) continue;
    ++valid;
    const double w = e.error_bar + 1e-2;
    const double lo = dir.norm() + A * min_drift(dir, f) - w;
    const double hi = dir.norm() + A * driven_force(dir, f) + w;
    worst = std::max({worst, lo - e.value, e.value - hi});
    if (e.value < lo || e.value > hi) ++outside;
  }
  const double secs = seconds_since(t0);
  return {outside == 0 && valid == checked && secs < 300.0,
          std::to_string(valid) + "/" + std::to_string(checked) + " valid, " +
              std::to_string(outside) + " outside, worst excess " + num(worst) + ", " +
              num(secs, 3) + " s"};
}

std::vector<double> monotonicity_grid() { return {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6}; }

Outcome criterion_monotone() {
  const auto f = cellular(32);
  const Direction dir = vertical_direction(2);
  const double force = driven_force(dir, f);
  const double lip = std::abs(dir.p_last) * f.max_abs();
  const auto grid = monotonicity_grid();
  std::vector<EffectiveEstimate> es;
  for (double A : grid) es.push_back(estimate(dir, 0.2, A, false, f));
  double worst = -1e9;
  bool all_valid = true;
  for (std::size_t i = 0; i < grid.size(); ++i) all_valid = all_valid && es[i].valid;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double diff = (es[i].value - grid[i] * force) - (es[i - 1].value - grid[i - 1] * force);
    worst = std::max(worst, diff);
    // lambda |v_A - v_A'| <= |A - A'| |p_last| max|f| at the smallest lambda.
    const double lam = es[i].solves.back().lambda;
    const auto& v1 = *es[i].last_v;
    const auto& v0 = *es[i - 1].last_v;
    double sup = 0.0;
    for (std::size_t x = 0; x < v1.size(); ++x) sup = std::max(sup, std::abs(v1[x] - v0[x]));
    const double slack = 10.0 * (es[i].solves.back().residual + es[i - 1].solves.back().residual) +
                         kDefaultBoundSlack * f.grid().spacing();
    const double lip_excess = lam * sup - (lip * (grid[i] - grid[i - 1]) + slack);
    ledger.worst_lipschitz_excess = std::max(ledger.worst_lipschitz_excess, lip_excess);
  }
  return {all_valid && worst <= -1e-3, "largest difference " + num(worst) + " over A in [0.2, 1.6]"};
}

Outcome criterion_connection() {
  const auto f = cellular(32);
  const double a1 = fixtures::kA1Cellular128;
  double worst = 0.0;
  bool ok = true;
  std::string detail;
  for (double k : {0.25, 0.5, 0.75}) {
    auto rep = connection_check(vertical_direction(2), 0.2, k * a1, f, default_schedule());
    ledger.record(rep.cutoff);
    ledger.record(rep.non_cutoff);
    worst = std::max(worst, rep.gap);
    ok = ok && rep.valid && rep.gap <= 2e-2;
    if (!rep.valid) detail += " (A=" + num(k * a1) + ": " + rep.invalid_reason + ")";
  }
  return {ok, "max gap " + num(worst) + detail};
}

Outcome criterion_line() {
  const auto bump = [](int cells) {
    return profile_from_function(
        TorusGrid(1, cells),
        [](std::span<const double> x) { return std::cos(2.0 * std::numbers::pi * x[0]) - 1.0; },
        "bump");
  };
  const Direction vertical{{0.0}, 1.0};
  const PhysParams params{0.2, 0.5, true};
  const auto line = solve_line(0.02, vertical, params, bump(64), 1024);
  const auto generic = solve_discounted(0.02, vertical, params, bump(64));
  const double solver_gap = std::abs(0.02 * (line.v.mean() - generic.v.mean()));

  const Direction tilted{{1.0}, 1.0};
  const double oracle = inviscid_hbar_1d(tilted, 0.5, bump(4096));
  const auto pde = estimate(tilted, 0.01, 0.5, false, bump(256));
  const double inviscid_gap = std::abs(pde.value - oracle);
  return {line.converged && generic.converged && solver_gap <= 5e-3 && pde.valid &&
              inviscid_gap <= 3e-2,
          "line vs generic " + num(solver_gap) + ", inviscid " + num(oracle) + " vs d=0.01 " +
              num(pde.value) + " (gap " + num(inviscid_gap) + ")"};
}

Outcome criterion_reproducible() {
  const Direction dir = vertical_direction(2);
  auto run = [&](int cells) {
    auto r = find_A1(dir, 0.2, cellular(cells), 1.0, 1.2, 0.005);
    for (const auto& e : r.evaluations) ledger.record(e.estimate);
    return r;
  };
  const auto r32 = run(32);
  const auto r64 = run(64);
  const double spread = std::abs(r32.a1 - r64.a1) / r64.a1;
  const double vs_oracle = std::abs(r64.a1 - fixtures::kA1Cellular128) / fixtures::kA1Cellular128;
  return {spread <= 0.05 && vs_oracle <= 0.05,
          "A1(32) " + num(r32.a1) + ", A1(64) " + num(r64.a1) + ", relative spread " +
              num(spread) + ", vs 128-grid fixture " + num(vs_oracle)};
}

std::string series_text(const std::vector<double>& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + num(s[i], 4);
  return out;
}

Outcome criterion_failure() {
  const auto f = cellular(32);
  const double a1 = fixtures::kA1Cellular128;
  const double theta = kDefaultUniformityThreshold;
  const auto high = probe_failure(vertical_direction(2), 0.2, f, 2.0 * a1);
  const auto low = probe_failure(vertical_direction(2), 0.2, f, 0.5 * a1);
  ledger.record(high.estimate);
  ledger.record(low.estimate);
  const auto& hs = high.uniformity_series;
  const auto& ls = low.uniformity_series;
  bool non_decreasing = true;
  bool decreasing = true;
  for (std::size_t i = 1; i < hs.size(); ++i) non_decreasing = non_decreasing && hs[i] >= hs[i - 1];
  for (std::size_t i = 1; i < ls.size(); ++i) decreasing = decreasing && ls[i] < ls[i - 1];
  const bool high_ok = high.estimate.valid && non_decreasing && hs.back() >= theta;
  const bool low_ok = low.estimate.valid && decreasing && ls.back() <= theta / 5.0;
  return {high_ok && low_ok, "2 A1 series [" + series_text(hs) + "] (" +
                                 (high_ok ? "ok" : "not non-decreasing or below threshold") +
                                 "), A1/2 series [" + series_text(ls) + "] (" +
                                 (low_ok ? "ok" : "not shrinking below threshold / 5") + ")"};
}

Outcome criterion_counterexample() {
  const auto ce = counterexample_profile(0.16, 0.2, TorusGrid(2, 32));
  const auto cut = estimate(vertical_direction(2), 0.2, 1.0, true, ce.profile);
  const auto raw = estimate(vertical_direction(2), 0.2, 1.0, false, ce.profile);
  const bool ok = cut.valid && raw.valid && std::abs(cut.value) <= 1e-2 &&
                  raw.value <= -fixtures::kDeltaCe && fixtures::kDeltaCe > 0.0;
  return {ok, "H_bar_plus " + num(cut.value) + ", H_bar " + num(raw.value) + ", delta_ce " +
                  num(fixtures::kDeltaCe)};
}

Outcome criterion_runtime_invariants() {
  // Gradient growth along two evolutions, one per variant.
  const auto f = cellular(32);
  EvolveOptions eo;
  eo.snapshot_times = {1.0, 2.0, 4.0};
  for (bool cutoff : {true, false}) {
    const PhysParams params{0.2, 1.5, cutoff};
    const auto trace = evolve(vertical_direction(2), params, f, 4.0, eo);
    ledger.worst_gradient_excess =
        std::max(ledger.worst_gradient_excess,
                 gradient_bound_violation(trace, vertical_direction(2), params, f, kDefaultBoundSlack));
  }
  const bool ok = ledger.bound_violations == 0 && ledger.worst_gradient_excess <= 0.0 &&
                  ledger.worst_lipschitz_excess <= 0.0;
  return {ok, std::to_string(ledger.estimates) + " estimates, " +
                  std::to_string(ledger.bound_violations) + " bound violations, gradient excess " +
                  num(ledger.worst_gradient_excess) + ", Lipschitz-in-A excess " +
                  num(ledger.worst_lipschitz_excess)};
}

std::string cli_path;
fs::path work_dir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion_determinism() {
  if (cli_path.empty()) return {false, "no CLI path given"};
  auto run = [&](int jobs) {
    const fs::path out = work_dir / ("validate_jobs" + std::to_string(jobs));
    fs::remove_all(out);
    const std::string cmd = "\"" + cli_path + "\" validate --grid-n 16 --jobs " +
                            std::to_string(jobs) + " --out \"" + out.string() + "\" > \"" +
                            (work_dir / ("validate_jobs" + std::to_string(jobs) + ".log")).string() +
                            "\" 2>&1";
    return std::pair{std::system(cmd.c_str()), out};
  };
  const auto [rc1, out1] = run(1);
  const auto [rc3, out3] = run(3);
  std::set<std::string> names;
  for (const auto& dir : {out1, out3}) {
    if (!fs::exists(dir)) continue;
    for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  }
  int differing = 0;
  for (const auto& n : names) {
    if (!fs::exists(out1 / n) || !fs::exists(out3 / n) || slurp(out1 / n) != slurp(out3 / n)) ++differing;
  }
  const bool ok = rc1 == 0 && rc3 == 0 && !names.empty() && differing == 0;
  return {ok, std::to_string(names.size()) + " files compared, " + std::to_string(differing) +
                  " differ, exit codes " + std::to_string(rc1) + "/" + std::to_string(rc3)};
}

std::set<int> parse_ids(const std::string& text) {
  std::set<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) ids.insert(std::stoi(item));
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_fail;
  std::set<int> only;
  work_dir = fs::temp_directory_path() / "shearflame_acceptance";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    if (key == "--cli") cli_path = argv[i + 1];
    else if (key == "--work") work_dir = argv[i + 1];
    else if (key == "--expect-fail") expect_fail = parse_ids(argv[i + 1]);
    else if (key == "--only") only = parse_ids(argv[i + 1]);
  }
  fs::create_directories(work_dir);

  // Criterion 9 reads the ledger filled by the others, so it runs last but one.
  const std::vector<Criterion> criteria{
      {1, "exact trivial cases", criterion_trivial},
      {2, "bounds suite", criterion_bounds},
      {3, "monotonicity in A", criterion_monotone},
      {4, "connection formula", criterion_connection},
      {5, "one-dimensional cross-solver oracle", criterion_line},
      {6, "A1 reproducibility across grids", criterion_reproducible},
      {7, "failure detection", criterion_failure},
      {8, "counterexample", criterion_counterexample},
      {9, "runtime invariants", criterion_runtime_invariants},
      {10, "determinism across worker counts", criterion_determinism},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool expected = expect_fail.count(c.id) > 0;
    std::printf("[%s] criterion %d %s: %s (%.1f s)%s\n", o.pass ? "PASS" : "FAIL", c.id,
                c.title.c_str(), o.detail.c_str(), seconds_since(t0),
                !o.pass && expected ? " [known failure, documented]" : "");
    std::fflush(stdout);
    if (!o.pass && !expected) ++unexpected;
  }
  return unexpected == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
