#include "shearflame/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "shearflame/error.hpp"
#include "shearflame/jobs.hpp"

namespace shearflame {

const char* to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::kHomogenizes: return "homogenizes";
    case Verdict::kFails: return "fails";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double g_value(const EffectiveEstimate& e, double a_force) { return e.value - a_force; }

}  // namespace

SweepCurve sweep_A(const Direction& dir, double d, const ShearProfile& f,
                   const std::vector<double>& a_grid, bool both_variants,
                   const SweepOptions& options) {
  if (a_grid.empty() || a_grid.front() != 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "sweep_A: A grid must start at 0");
  }
  for (std::size_t i = 1; i < a_grid.size(); ++i) {
    if (!(a_grid[i] > a_grid[i - 1])) {
      throw Error(ErrorKind::kInvalidArgument, "sweep_A: A grid must be strictly increasing");
    }
  }
  SweepCurve curve;
  curve.dir = dir;
  curve.d = d;
  curve.grid_n = f.grid().cells();
  curve.schedule = options.schedule;
  curve.rows.resize(a_grid.size());
  const double force = driven_force(dir, f);

  // One job per (A, variant), merged by index.
  const std::size_t variants = both_variants ? 2 : 1;
  std::vector<std::optional<EffectiveEstimate>> results(a_grid.size() * variants);
  run_indexed(results.size(), options.jobs, [&](std::size_t job) {
    const double A = a_grid[job / variants];
    const bool cutoff = job % variants == 0;
    try {
      results[job] = estimate_discount(dir, PhysParams{d, A, cutoff}, f, options.schedule,
                                       options.estimate);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDivergence) throw;
    }
  });

  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    SweepRow& row = curve.rows[i];
    row.A = a_grid[i];
    row.a_force = row.A * force;
    auto& cut = results[i * variants];
    if (cut) {
      if (cut->valid) row.hbar_plus = cut->value;
      row.homogenized_cutoff = cut->homogenized;
      row.uniformity = cut->uniformity;
      row.cutoff = std::move(cut);
    }
    if (both_variants) {
      auto& nc = results[i * variants + 1];
      if (nc) {
        if (nc->valid) row.hbar = nc->value;
        row.non_cutoff = std::move(nc);
      }
    }
  }
  return curve;
}

std::vector<double> knee_grid(double a1, double a_max, int points) {
  if (!(a1 > 0.0) || !(a_max > a1 / 4.0) || points < 2) {
    throw Error(ErrorKind::kInvalidArgument, "knee_grid: need a1 > 0, a_max > a1 / 4, points >= 2");
  }
  std::vector<double> grid{0.0};
  const double lo = std::log(a1 / 4.0);
  const double hi = std::log(a_max);
  for (int i = 0; i < points; ++i) grid.push_back(std::exp(lo + (hi - lo) * i / (points - 1)));
  return grid;
}

std::string to_csv(const SweepCurve& curve) {
  std::ostringstream out;
  out << "A,H_bar,H_bar_plus,A_F,homogenized,uniformity\n";
  for (const auto& r : curve.rows) {
    out << fmt17(r.A) << ',' << (r.hbar ? fmt17(*r.hbar) : "invalid") << ','
        << (r.hbar_plus ? fmt17(*r.hbar_plus) : "invalid") << ',' << fmt17(r.a_force) << ','
        << (r.homogenized_cutoff ? "true" : "false") << ','
        << (r.cutoff ? fmt17(r.uniformity) : "invalid") << '\n';
  }
  return out.str();
}

A1Result find_A1(const Direction& dir, double d, const ShearProfile& f, double a_lo, double a_hi,
                 double tol_a, const SweepOptions& options) {
  if (!(tol_a > 0.0) || !(a_lo >= 0.0) || !(a_hi > a_lo)) {
    throw Error(ErrorKind::kInvalidArgument, "find_A1: need 0 <= a_lo < a_hi and tol_A > 0");
  }
  const double force = driven_force(dir, f);
  A1Result res;
  auto eval = [&](double A) {
    auto est = estimate_discount(dir, PhysParams{d, A, false}, f, options.schedule,
                                 options.estimate);
    if (!est.valid) {
      throw Error(ErrorKind::kDivergence,
                  "find_A1: invalid estimate at A = " + fmt17(A) + ": " + est.invalid_reason);
    }
    const double g = g_value(est, A * force);
    res.evaluations.push_back({A, g, std::move(est)});
    return g;
  };

  double g_lo = eval(a_lo);
  double g_hi = eval(a_hi);
  if (!(g_lo > 0.0 && g_hi < 0.0)) {
    throw Error(ErrorKind::kNoSignChange,
                "find_A1: Hbar - A F(P) has no sign change on [" + fmt17(a_lo) + ", " +
                    fmt17(a_hi) + "] (g = " + fmt17(g_lo) + ", " + fmt17(g_hi) +
                    "); widen the bracket, or the profile may be constant");
  }
  // g is strictly decreasing, so a false-position guess straddled by two
  // points tol_a apart usually closes the bracket in one round; plain
  // bisection takes over when that stalls.
  for (int round = 0; a_hi - a_lo > tol_a && round < 64; ++round) {
    const double width = a_hi - a_lo;
    if (round % 3 == 2 || width <= 2.0 * tol_a) {
      const double mid = 0.5 * (a_lo + a_hi);
      const double g = eval(mid);
      (g > 0.0 ? a_lo : a_hi) = mid;
      (g > 0.0 ? g_lo : g_hi) = g;
      continue;
    }
    const double guess = a_lo + g_lo * width / (g_lo - g_hi);
    const double guard = 0.05 * width;
    const double left = std::clamp(guess - 0.45 * tol_a, a_lo + guard, a_hi - guard);
    const double right = std::min(left + 0.9 * tol_a, a_hi - guard);
    const double gl = eval(left);
    if (gl <= 0.0) {
      a_hi = left;
      g_hi = gl;
      continue;
    }
    a_lo = left;
    g_lo = gl;
    if (right > left) {
      const double gr = eval(right);
      (gr > 0.0 ? a_lo : a_hi) = right;
      (gr > 0.0 ? g_lo : g_hi) = gr;
    }
  }
  res.lo = a_lo;
  res.hi = a_hi;
  res.a1 = a_lo + g_lo * (a_hi - a_lo) / (g_lo - g_hi);
  return res;
}

Verdict classify_series(const std::vector<double>& series, double theta_u, double tie) {
  if (series.empty()) return Verdict::kInconclusive;
  bool non_decreasing = true;
  bool decreasing = true;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i] < series[i - 1] - tie) non_decreasing = false;
    if (series[i] > series[i - 1] + tie) decreasing = false;
  }
  const double last = series.back();
  if (non_decreasing && last >= theta_u) return Verdict::kFails;
  if (decreasing && last < theta_u) return Verdict::kHomogenizes;
  return Verdict::kInconclusive;
}

FailureDiagnostics probe_failure(const Direction& dir, double d, const ShearProfile& f, double A,
                                 const SweepOptions& options) {
  FailureDiagnostics diag;
  diag.A = A;
  diag.estimate =
      estimate_discount(dir, PhysParams{d, A, true}, f, options.schedule, options.estimate);
  for (const auto& s : diag.estimate.solves) diag.uniformity_series.push_back(s.uniformity);
  diag.verdict = diag.estimate.valid
                     ? classify_series(diag.uniformity_series, options.estimate.theta_u,
                                       2.0 * options.estimate.solve.tol)
                     : Verdict::kInconclusive;
  return diag;
}

BifurcationReport bifurcate(const Direction& dir, double d, const ShearProfile& f, double a_lo,
                            double a_hi, double tol_a, const std::vector<double>& probe_factors,
                            const SweepOptions& options) {
  BifurcationReport rep;
  rep.dir = dir;
  rep.d = d;
  rep.dim = f.grid().dim();
  rep.tol_a = tol_a;
  rep.theta_u = options.estimate.theta_u;
  rep.grid_n = f.grid().cells();
  rep.schedule = options.schedule;
  rep.a1 = find_A1(dir, d, f, a_lo, a_hi, tol_a, options);

  std::vector<double> probes{rep.a1.lo};
  for (double k : probe_factors) probes.push_back(k * rep.a1.a1);
  std::sort(probes.begin(), probes.end());
  rep.a0_evidence.resize(probes.size());
  run_indexed(probes.size(), options.jobs, [&](std::size_t i) {
    rep.a0_evidence[i] = probe_failure(dir, d, f, probes[i], options);
  });

  rep.failure_confirmed = true;
  bool any_above = false;
  for (const auto& diag : rep.a0_evidence) {
    if (diag.verdict == Verdict::kHomogenizes) {
      rep.a0_lower_bound = std::max(rep.a0_lower_bound.value_or(diag.A), diag.A);
    }
    if (diag.A > rep.a1.hi) {
      any_above = true;
      if (diag.verdict != Verdict::kFails) rep.failure_confirmed = false;
    }
  }
  rep.failure_confirmed = rep.failure_confirmed && any_above;
  const double width = rep.a1.hi - rep.a1.lo;
  rep.consistent = rep.a0_lower_bound && *rep.a0_lower_bound >= rep.a1.lo - width;
  return rep;
}

std::string to_json(const BifurcationReport& rep, int indent) {
  using nlohmann::json;
  json P = rep.dir.p;
  P.push_back(rep.dir.p_last);
  json evals = json::array();
  for (const auto& e : rep.a1.evaluations) {
    evals.push_back({{"A", e.A}, {"g", e.g}, {"value", e.estimate.value},
                     {"error_bar", e.estimate.error_bar}});
  }
  json evidence = json::array();
  for (const auto& diag : rep.a0_evidence) {
    evidence.push_back({{"A", diag.A},
                        {"uniformity_series", diag.uniformity_series},
                        {"verdict", to_string(diag.verdict)},
                        {"H_bar_plus", diag.estimate.value}});
  }
  json j = {{"P", P},
            {"d", rep.d},
            {"n", rep.dim},
            {"A1", rep.a1.a1},
            {"A1_lo", rep.a1.lo},
            {"A1_hi", rep.a1.hi},
            {"A1_evaluations", evals},
            {"A0_lower_bound", rep.a0_lower_bound ? json(*rep.a0_lower_bound) : json(nullptr)},
            {"A0_evidence", evidence},
            {"consistent", rep.consistent},
            {"failure_confirmed", rep.failure_confirmed},
            {"grid_N", rep.grid_n},
            {"schedule", rep.schedule},
            {"tolerances", {{"tol_A", rep.tol_a}, {"theta_u", rep.theta_u}}}};
  if (rep.dim >= 3) {
    j["note"] = "for n >= 3 whether A0 > A1 is open; verdicts above A1 are reported, not asserted";
  }
  return j.dump(indent);
}

}  // namespace shearflame
