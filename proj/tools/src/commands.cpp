#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "shearflame/bifurcation.hpp"
#include "shearflame/error.hpp"
#include "shearflame/jobs.hpp"
#include "shearflame/solvers.hpp"

namespace shearflame::cli {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const RunConfig& c, const std::string& name, const std::string& body,
                std::ostream& log) {
  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / name;
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << body;
  if (!body.empty() && body.back() != '\n') out << '\n';
  log << "wrote " << path.string() << '\n';
}

json parse(const std::string& text) { return json::parse(text); }

json p_vector(const Direction& dir) {
  json P = dir.p;
  P.push_back(dir.p_last);
  return P;
}

// Every solve behind a reported number, in deterministic insertion order.
class Manifest {
 public:
  void add(const std::string& label, const EffectiveEstimate& e) {
    for (const auto& s : e.solves) {
      solves_.push_back({{"label", label},
                         {"P", p_vector(e.dir)},
                         {"d", e.params.d},
                         {"A", e.params.A},
                         {"cutoff", e.params.cutoff},
                         {"method", to_string(e.method)},
                         {"lambda", s.lambda},
                         {"t", s.horizon},
                         {"iterations", s.iterations},
                         {"residual", s.residual},
                         {"converged", s.converged},
                         {"bounds_ok", s.bounds.ok()}});
    }
  }
  void add_solve(const std::string& label, const Direction& dir, const PhysParams& params,
                 const DiscountedSolution& sol) {
    solves_.push_back({{"label", label},
                       {"P", p_vector(dir)},
                       {"d", params.d},
                       {"A", params.A},
                       {"cutoff", params.cutoff},
                       {"method", "single-solve"},
                       {"lambda", sol.lambda},
                       {"t", 0.0},
                       {"iterations", sol.iterations},
                       {"residual", sol.residual},
                       {"converged", sol.converged},
                       {"bounds_ok", true}});
  }
  void write(const RunConfig& c, const std::string& command, std::ostream& log) const {
    json cfg = json::object();
    std::istringstream in(echo(c));
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find(" = ");
      cfg[line.substr(0, eq)] = line.substr(eq + 3);
    }
    json j = {{"command", command}, {"config", cfg}, {"solves", solves_}};
    write_text(c, "manifest.json", j.dump(2), log);
  }

 private:
  json solves_ = json::array();
};

std::string variant_name(bool cutoff) { return cutoff ? "cutoff" : "non-cutoff"; }

EffectiveEstimate run_estimate(const RunConfig& c, const Direction& dir, double A, bool cutoff,
                               const ShearProfile& f) {
  const PhysParams params{c.d, A, cutoff};
  if (c.method == "longtime") return estimate_longtime(dir, params, f, c.T, c.estimate_options());
  return estimate_discount(dir, params, f, c.schedule, c.estimate_options());
}

SweepOptions sweep_options(const RunConfig& c) {
  SweepOptions o;
  o.estimate = c.estimate_options();
  o.schedule = c.schedule;
  o.jobs = c.jobs;
  return o;
}

std::pair<double, double> a1_bracket(const RunConfig& c) {
  if (c.A_range) return {c.A_range->lo, c.A_range->hi};
  return {0.0, 4.0};
}

int cmd_cell_solve(const RunConfig& c, std::ostream& log) {
  const auto f = build_profile(c);
  const Direction dir = c.direction();
  Manifest manifest;
  json reports = json::array();
  for (bool cutoff : c.cutoff_variants()) {
    const PhysParams params{c.d, c.A, cutoff};
    SolveOptions so;
    so.tol = c.tol;
    so.max_iter = c.max_iter;
    const auto sol = solve_discounted(c.lambda, dir, params, f, so);
    manifest.add_solve("cell-solve " + variant_name(cutoff), dir, params, sol);
    ScalarField lv = sol.v;
    lv *= c.lambda;
    const auto bounds = check_discounted_bounds(sol, dir, params, f, kDefaultBoundSlack);
    reports.push_back({{"P", p_vector(dir)},
                       {"d", c.d},
                       {"A", c.A},
                       {"cutoff", cutoff},
                       {"lambda", c.lambda},
                       {"mean_minus_lambda_v", -lv.mean()},
                       {"oscillation_lambda_v", oscillation(lv)},
                       {"residual", sol.residual},
                       {"iterations", sol.iterations},
                       {"converged", sol.converged},
                       {"bounds_ok", bounds.ok()},
                       {"grid_N", c.grid_N}});
    const std::string base = std::string("cell_solve_") + (cutoff ? "cutoff" : "noncutoff");
    fs::create_directories(c.out);
    write_checkpoint((fs::path(c.out) / (base + ".csv")).string(),
                     Checkpoint{sol.v, c.lambda, dir, params, sol.iterations, sol.residual});
    log << "wrote " << (fs::path(c.out) / (base + ".csv")).string() << '\n';
    if (!sol.converged) {
      write_text(c, "cell_solve.json", json{{"reports", reports}}.dump(2), log);
      manifest.write(c, "cell-solve", log);
      throw Error(ErrorKind::kDivergence, "cell-solve: no convergence within max_iter");
    }
  }
  write_text(c, "cell_solve.json", json{{"reports", reports}}.dump(2), log);
  manifest.write(c, "cell-solve", log);
  return kExitOk;
}

int cmd_evolve(const RunConfig& c, std::ostream& log) {
  const auto f = build_profile(c);
  const Direction dir = c.direction();
  std::ostringstream csv;
  csv << "cutoff,t,mean_slope,uniformity\n";
  std::ostringstream grad;
  grad << "cutoff,t,grad_sup\n";
  json summary = json::array();
  for (bool cutoff : c.cutoff_variants()) {
    const PhysParams params{c.d, c.A, cutoff};
    EvolveOptions eo;
    for (int k = 1; k <= 8; ++k) eo.snapshot_times.push_back(c.T * k / 8.0);
    const auto trace = evolve(dir, params, f, c.T, eo);
    for (const auto& s : trace.slope) {
      csv << (cutoff ? "on" : "off") << ',' << fmt(s.t) << ',' << fmt(s.v.mean()) << ','
          << fmt(oscillation(s.v)) << '\n';
    }
    for (const auto& [t, g] : trace.grad_sup) {
      grad << (cutoff ? "on" : "off") << ',' << fmt(t) << ',' << fmt(g) << '\n';
    }
    summary.push_back({{"cutoff", cutoff},
                       {"T", c.T},
                       {"steps", trace.steps},
                       {"gradient_bound_violation",
                        gradient_bound_violation(trace, dir, params, f, kDefaultBoundSlack)}});
  }
  write_text(c, "evolve_trace.csv", csv.str(), log);
  write_text(c, "evolve_grad.csv", grad.str(), log);
  write_text(c, "evolve.json", json{{"runs", summary}}.dump(2), log);
  return kExitOk;
}

int cmd_effective(const RunConfig& c, std::ostream& log) {
  const auto f = build_profile(c);
  const Direction dir = c.direction();
  const auto variants = c.cutoff_variants();
  std::vector<std::optional<EffectiveEstimate>> results(variants.size());
  run_indexed(variants.size(), c.jobs,
              [&](std::size_t i) { results[i] = run_estimate(c, dir, c.A, variants[i], f); });
  Manifest manifest;
  json reports = json::array();
  bool all_valid = true;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    manifest.add("effective " + variant_name(variants[i]), *results[i]);
    reports.push_back(parse(to_json(*results[i])));
    all_valid = all_valid && results[i]->valid;
  }
  write_text(c, "effective.json", json{{"estimates", reports}}.dump(2), log);
  manifest.write(c, "effective", log);
  if (!all_valid) throw Error(ErrorKind::kDivergence, "effective: estimate invalid (see effective.json)");
  return kExitOk;
}

std::vector<double> sweep_grid(const RunConfig& c) {
  if (!c.A_range) throw Error(ErrorKind::kConfig, "config key 'A_range': required for sweep");
  std::vector<double> grid;
  const auto& r = *c.A_range;
  if (r.lo > 0.0) grid.push_back(0.0);
  for (int i = 0; i < r.count; ++i) grid.push_back(r.lo + (r.hi - r.lo) * i / (r.count - 1));
  return grid;
}

int cmd_sweep(const RunConfig& c, std::ostream& log) {
  const auto f = build_profile(c);
  const Direction dir = c.direction();
  const bool both = c.cutoff != "on";
  const auto curve = sweep_A(dir, c.d, f, sweep_grid(c), both, sweep_options(c));
  Manifest manifest;
  for (const auto& row : curve.rows) {
    if (row.cutoff) manifest.add("sweep A=" + fmt(row.A) + " cutoff", *row.cutoff);
    if (row.non_cutoff) manifest.add("sweep A=" + fmt(row.A) + " non-cutoff", *row.non_cutoff);
  }
  write_text(c, "sweep.csv", to_csv(curve), log);
  manifest.write(c, "sweep", log);
  return kExitOk;
}

void add_a1(Manifest& m, const A1Result& r) {
  for (const auto& e : r.evaluations) m.add("find_A1 A=" + fmt(e.A), e.estimate);
}

int cmd_bifurcate(const RunConfig& c, std::ostream& log) {
  const auto f = build_profile(c);
  const auto [lo, hi] = a1_bracket(c);
  const auto rep = bifurcate(c.direction(), c.d, f, lo, hi, c.tol_A, c.probe_factors,
                             sweep_options(c));
  Manifest manifest;
  add_a1(manifest, rep.a1);
  for (const auto& diag : rep.a0_evidence) {
    manifest.add("probe_failure A=" + fmt(diag.A), diag.estimate);
  }
  write_text(c, "bifurcation.json", to_json(rep), log);
  manifest.write(c, "bifurcate", log);
  if (c.strict && !(rep.consistent && rep.failure_confirmed)) {
    log << "bifurcate: verdicts inconclusive under strict mode\n";
    return kExitInconclusive;
  }
  return kExitOk;
}

int cmd_figure2(const RunConfig& c, std::ostream& log) {
  const auto f = build_profile(c);
  if (!f.c1_compliant()) {
    log << "note: profile '" << f.name() << "' is not marked (c1)-compliant\n";
  }
  const Direction dir = c.direction();
  const auto [lo, hi] = a1_bracket(c);
  const auto opts = sweep_options(c);
  const auto a1 = find_A1(dir, c.d, f, lo, hi, c.tol_A, opts);
  const auto grid = knee_grid(a1.a1, 2.0 * a1.a1, c.figure2_points);
  const auto curve = sweep_A(dir, c.d, f, grid, true, opts);
  Manifest manifest;
  add_a1(manifest, a1);
  for (const auto& row : curve.rows) {
    if (row.cutoff) manifest.add("figure2 A=" + fmt(row.A) + " cutoff", *row.cutoff);
    if (row.non_cutoff) manifest.add("figure2 A=" + fmt(row.A) + " non-cutoff", *row.non_cutoff);
  }
  write_text(c, "figure2.csv", to_csv(curve), log);
  write_text(c, "figure2_A1.json",
             json{{"A1", a1.a1}, {"A1_lo", a1.lo}, {"A1_hi", a1.hi}, {"grid_N", c.grid_N}}.dump(2),
             log);
  manifest.write(c, "figure2", log);
  return kExitOk;
}

int cmd_counterexample(const RunConfig& c, std::ostream& log) {
  RunConfig cc = c;
  if (cc.profile.rfind("counterexample", 0) != 0) cc.profile = "counterexample";
  double a = cc.psi_amplitude;
  if (cc.profile.size() > 15) a = std::stod(cc.profile.substr(15));
  if (a == 0.0) a = 2.0 * minimal_sign_changing_amplitude(cc.n, cc.d);
  const TorusGrid grid(cc.n, cc.grid_N);
  const auto ce = counterexample_profile(a, cc.d, grid);
  const Direction dir = vertical_direction(cc.n);
  std::optional<EffectiveEstimate> cut, nocut;
  run_indexed(2, cc.jobs, [&](std::size_t i) {
    auto& slot = i == 0 ? cut : nocut;
    slot = estimate_discount(dir, PhysParams{cc.d, 1.0, i == 0}, ce.profile, cc.schedule,
                             cc.estimate_options());
  });
  Manifest manifest;
  manifest.add("counterexample cutoff", *cut);
  manifest.add("counterexample non-cutoff", *nocut);
  const bool plus_zero = cut->valid && std::abs(cut->value) <= 1e-2;
  const bool below = nocut->valid && nocut->value < 0.0;
  json j = {{"psi_amplitude", a},
            {"d", cc.d},
            {"A", 1.0},
            {"grid_N", cc.grid_N},
            {"H_bar_plus", cut->value},
            {"H_bar", nocut->value},
            {"delta_ce", -nocut->value},
            {"H_bar_plus_is_zero", plus_zero},
            {"H_bar_negative", below},
            {"estimates", {parse(to_json(*cut)), parse(to_json(*nocut))}}};
  fs::create_directories(cc.out);
  write_profile_csv((fs::path(cc.out) / "counterexample_profile.csv").string(), ce.profile);
  write_text(cc, "counterexample.json", j.dump(2), log);
  manifest.write(cc, "counterexample", log);
  return plus_zero && below ? kExitOk : kExitCheckFailed;
}

// One invariant check of the validate suite.
struct CheckResult {
  std::string name;
  bool pass = false;
  json detail;
  std::vector<std::pair<std::string, EffectiveEstimate>> estimates;
};

std::vector<std::function<CheckResult()>> validate_suite(const RunConfig& c) {
  const auto f = std::make_shared<ShearProfile>(build_profile(c));
  const Direction dir = c.direction();
  const auto opts = c.estimate_options();
  const double norm = dir.norm();
  const double force = driven_force(dir, *f);
  const double lower = min_drift(dir, *f);
  auto est = [=](double A, bool cutoff, const ShearProfile& prof, const Direction& p) {
    return estimate_discount(p, PhysParams{c.d, A, cutoff}, prof, c.schedule, opts);
  };

  std::vector<std::function<CheckResult()>> suite;
  suite.push_back([=] {
    CheckResult r;
    r.name = "trivial_A0";
    auto e = est(0.0, true, *f, dir);
    const double rel = std::abs(e.value - norm) / norm;
    r.pass = e.valid && rel <= 1e-3;
    r.detail = {{"value", e.value}, {"expected", norm}, {"relative_error", rel}};
    r.estimates.emplace_back("A=0 cutoff", std::move(e));
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "trivial_constant";
    const double cval = -0.5;
    const double A = 0.5;
    const auto g = constant_profile(cval, f->grid());
    auto e = est(A, false, g, dir);
    const double expected = norm + A * dir.p_last * cval;
    r.pass = e.valid && std::abs(e.value - expected) <= 1e-6;
    r.detail = {{"value", e.value}, {"expected", expected}};
    r.estimates.emplace_back("constant non-cutoff", std::move(e));
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "bounds";
    r.pass = true;
    json rows = json::array();
    for (double A : {0.2, 0.5, 0.8}) {
      auto e = est(A, false, *f, dir);
      const double w = e.error_bar + 1e-2;
      const double lo = norm + A * lower - w;
      const double hi = norm + A * force + w;
      const bool ok = !e.valid || (e.value >= lo && e.value <= hi);
      r.pass = r.pass && ok;
      rows.push_back({{"A", A}, {"value", e.value}, {"lo", lo}, {"hi", hi}, {"ok", ok}});
      r.estimates.emplace_back("bounds A=" + fmt(A), std::move(e));
    }
    r.detail = {{"rows", rows}};
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "monotonicity_and_lipschitz";
    const std::vector<double> grid{0.2, 0.4, 0.6, 0.8};
    std::vector<EffectiveEstimate> es;
    for (double A : grid) es.push_back(est(A, false, *f, dir));
    r.pass = true;
    json diffs = json::array();
    const double lip = std::abs(dir.p_last) * f->max_abs();
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double g0 = es[i - 1].value - grid[i - 1] * force;
      const double g1 = es[i].value - grid[i] * force;
      const double slack = es[i].error_bar + es[i - 1].error_bar;
      const bool mono = g1 - g0 < -1e-3;
      const bool lip_ok =
          std::abs(es[i].value - es[i - 1].value) <= lip * (grid[i] - grid[i - 1]) + slack;
      r.pass = r.pass && es[i].valid && es[i - 1].valid && mono && lip_ok;
      diffs.push_back({{"A", grid[i]}, {"diff", g1 - g0}, {"monotone", mono}, {"lipschitz", lip_ok}});
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      r.estimates.emplace_back("monotonicity A=" + fmt(grid[i]), std::move(es[i]));
    }
    r.detail = {{"differences", diffs}};
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "connection";
    auto rep = connection_check(dir, c.d, 0.3, *f, c.schedule, opts);
    r.pass = rep.valid && rep.gap <= 2e-2;
    r.detail = {{"A", 0.3},
                {"H_bar", rep.hbar},
                {"H_bar_plus", rep.hbar_plus},
                {"A_F", rep.a_force},
                {"gap", rep.gap},
                {"valid", rep.valid}};
    r.estimates.emplace_back("connection non-cutoff", std::move(rep.non_cutoff));
    r.estimates.emplace_back("connection cutoff", std::move(rep.cutoff));
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "homogeneity";
    auto e1 = est(0.3, true, *f, dir);
    auto e2 = est(0.3, true, *f, dir.scaled(2.0));
    const double gap = std::abs(e2.value - 2.0 * e1.value);
    const double allowed = e2.error_bar + 2.0 * e1.error_bar;
    r.pass = e1.valid && e2.valid && gap <= allowed;
    r.detail = {{"H_P", e1.value}, {"H_2P", e2.value}, {"gap", gap}, {"allowed", allowed}};
    r.estimates.emplace_back("homogeneity P", std::move(e1));
    r.estimates.emplace_back("homogeneity 2P", std::move(e2));
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "continuity_A_to_0";
    std::vector<double> gaps;
    r.pass = true;
    for (double A : {0.1, 0.05, 0.025}) {
      auto e = est(A, false, *f, dir);
      gaps.push_back(std::abs(e.value - norm));
      r.pass = r.pass && e.valid;
      r.estimates.emplace_back("continuity A=" + fmt(A), std::move(e));
    }
    r.pass = r.pass && gaps[1] < gaps[0] && gaps[2] < gaps[1];
    r.detail = {{"gaps", gaps}};
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "longtime_vs_discount";
    auto ed = est(0.3, true, *f, dir);
    auto el = estimate_longtime(dir, PhysParams{c.d, 0.3, true}, *f, c.T < 8.0 ? 8.0 : c.T, opts);
    const double gap = std::abs(ed.value - el.value);
    const double allowed = std::max(ed.error_bar, el.error_bar);
    r.pass = ed.valid && gap <= allowed;
    r.detail = {{"discount", ed.value}, {"longtime", el.value}, {"gap", gap}, {"allowed", allowed}};
    r.estimates.emplace_back("cross discount", std::move(ed));
    r.estimates.emplace_back("cross longtime", std::move(el));
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "gradient_growth";
    const PhysParams params{c.d, 0.5, true};
    EvolveOptions eo;
    eo.snapshot_times = {1.0, 2.0, 4.0};
    const auto trace = evolve(dir, params, *f, 4.0, eo);
    const double worst = gradient_bound_violation(trace, dir, params, *f, kDefaultBoundSlack);
    r.pass = worst <= 0.0;
    r.detail = {{"worst_excess", worst}, {"steps", trace.steps}};
    return r;
  });
  suite.push_back([=] {
    CheckResult r;
    r.name = "corrector_residual";
    auto e = est(0.3, true, *f, dir);
    r.pass = e.valid && e.corrector_residual <= c.theta_u;
    r.detail = {{"corrector_residual", e.corrector_residual}, {"threshold", c.theta_u}};
    r.estimates.emplace_back("corrector", std::move(e));
    return r;
  });
  return suite;
}

int cmd_validate(const RunConfig& c, std::ostream& log) {
  const auto suite = validate_suite(c);
  std::vector<CheckResult> results(suite.size());
  run_indexed(suite.size(), c.jobs, [&](std::size_t i) { results[i] = suite[i](); });

  Manifest manifest;
  json checks = json::array();
  bool all = true;
  int violations = 0;
  for (const auto& r : results) {
    for (const auto& [label, e] : r.estimates) {
      manifest.add(r.name + ": " + label, e);
      violations += e.bound_violations;
    }
    checks.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    all = all && r.pass;
    log << (r.pass ? "PASS " : "FAIL ") << r.name << '\n';
  }
  const bool bounds_ok = violations == 0;
  checks.push_back({{"name", "runtime_bounds"}, {"pass", bounds_ok}, {"detail", {{"violations", violations}}}});
  log << (bounds_ok ? "PASS " : "FAIL ") << "runtime_bounds\n";
  all = all && bounds_ok;
  write_text(c, "validate.json", json{{"all_pass", all}, {"checks", checks}}.dump(2), log);
  manifest.write(c, "validate", log);
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"cell-solve", "evolve",    "effective",
                                              "sweep",      "bifurcate", "figure2",
                                              "counterexample", "validate"};
  return names;
}

int run_command(const std::string& name, const RunConfig& c, std::ostream& log) {
  if (name == "cell-solve") return cmd_cell_solve(c, log);
  if (name == "evolve") return cmd_evolve(c, log);
  if (name == "effective") return cmd_effective(c, log);
  if (name == "sweep") return cmd_sweep(c, log);
  if (name == "bifurcate") return cmd_bifurcate(c, log);
  if (name == "figure2") return cmd_figure2(c, log);
  if (name == "counterexample") return cmd_counterexample(c, log);
  if (name == "validate") return cmd_validate(c, log);
  throw Error(ErrorKind::kConfig, "unknown subcommand " + name);
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::kConfig:
      case ErrorKind::kInvalidArgument:
      case ErrorKind::kNoSignChange:
        return kExitConfig;
      default:
        return kExitSolver;
    }
  }
  return kExitSolver;
}

std::string error_json(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  json j = {{"error", err ? to_string(err->kind()) : "internal"}, {"message", e.what()}};
  return j.dump();
}

}  // namespace shearflame::cli
