#include "shearflame/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <Eigen/QR>

#include "shearflame/error.hpp"

namespace shearflame {

namespace {

void check_solve_inputs(double lambda, const Direction& dir, const ShearProfile& f,
                        const SolveOptions& options) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::kInvalidArgument, "solve_discounted: lambda must be > 0");
  }
  if (!(options.tol > 0.0)) throw Error(ErrorKind::kInvalidArgument, "solve_discounted: tol must be > 0");
  if (options.max_iter <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "solve_discounted: max_iter must be positive");
  }
  if (dir.p_last == 0.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "solve_discounted: p_last = 0 has the trivial solution lambda v = -|P|");
  }
  if (options.initial && !(options.initial->grid() == f.grid())) {
    throw Error(ErrorKind::kInvalidArgument, "solve_discounted: initial field grid mismatch");
  }
}

double sup_abs(const std::vector<double>& r) {
  double m = 0.0;
  for (double x : r) m = std::max(m, std::abs(x));
  return m;
}

double mean_of(const std::vector<double>& r) {
  double s = 0.0;
  for (double x : r) s += x;
  return s / static_cast<double>(r.size());
}

// Anderson mixing of the map g(v) = v - D^{-1} res(v), D the local step.
class Anderson {
 public:
  Anderson(std::size_t size, int depth)
      : df_(static_cast<Eigen::Index>(size), depth),
        dg_(static_cast<Eigen::Index>(size), depth),
        f_(static_cast<Eigen::Index>(size)),
        g_(static_cast<Eigen::Index>(size)),
        f_prev_(static_cast<Eigen::Index>(size)),
        g_prev_(static_cast<Eigen::Index>(size)),
        best_g_(static_cast<Eigen::Index>(size)) {}

  void step(std::span<double> v, const std::vector<double>& res,
            const std::vector<double>& stiffness, double lambda, double residual) {
    const Eigen::Index size = f_.size();
    if (residual > 4.0 * best_residual_) {
      // Mixing made things worse: resume with the plain step from the best
      // state so far and start a fresh history.
      cols_ = 0;
      have_prev_ = false;
      best_residual_ = std::numeric_limits<double>::infinity();
      if (++restarts_ >= kMaxRestarts) disabled_ = true;
      for (Eigen::Index x = 0; x < size; ++x) v[x] = best_g_[x];
      return;
    }
    for (Eigen::Index x = 0; x < size; ++x) {
      f_[x] = -0.5 / (lambda + stiffness[x]) * res[x];
      g_[x] = v[x] + f_[x];
    }
    if (residual < best_residual_) {
      best_residual_ = residual;
      best_g_ = g_;
    }
    if (disabled_) {
      for (Eigen::Index x = 0; x < size; ++x) v[x] = g_[x];
      return;
    }
    if (have_prev_) {
      const Eigen::Index slot = next_ % df_.cols();
      df_.col(slot) = f_ - f_prev_;
      dg_.col(slot) = g_ - g_prev_;
      ++next_;
      cols_ = std::min<Eigen::Index>(cols_ + 1, df_.cols());
    }
    f_prev_ = f_;
    g_prev_ = g_;
    have_prev_ = true;
    if (cols_ > 0) {
      const Eigen::VectorXd gamma = df_.leftCols(cols_).colPivHouseholderQr().solve(f_);
      g_ -= dg_.leftCols(cols_) * gamma;
    }
    for (Eigen::Index x = 0; x < size; ++x) v[x] = g_[x];
  }

 private:
  Eigen::MatrixXd df_;
  Eigen::MatrixXd dg_;
  Eigen::VectorXd f_;
  Eigen::VectorXd g_;
  Eigen::VectorXd f_prev_;
  Eigen::VectorXd g_prev_;
  Eigen::VectorXd best_g_;
  Eigen::Index cols_ = 0;
  Eigen::Index next_ = 0;
  static constexpr int kMaxRestarts = 10;
  int restarts_ = 0;
  bool disabled_ = false;
  bool have_prev_ = false;
  double best_residual_ = std::numeric_limits<double>::infinity();
};

// Shared marching loop. `eval` fills rhs for v and returns a stable step.
template <class Eval>
DiscountedSolution march_once(double lambda, const Direction& dir, const PhysParams& params,
                                   const ShearProfile& f, const SolveOptions& options,
                                   ScalarField v, Eval&& eval) {
  const std::size_t size = v.size();
  std::vector<double> rhs(size);
  std::vector<double> res(size);
  std::vector<double> stiffness(options.local_time_stepping ? size : 0);
  auto values = v.values();

  double dt = std::min(eval(values, rhs, std::span<double>(stiffness)), 0.5 / lambda);
  double initial_residual = -1.0;
  const double scale = dir.norm() + params.A * std::abs(dir.p_last) * f.max_abs();

  std::optional<Anderson> accel;
  if (options.anderson_depth > 0) accel.emplace(size, options.anderson_depth);
  DiscountedSolution out{ScalarField(v.grid()), lambda};
  std::int64_t it = 0;
  double residual = 0.0;
  for (;; ++it) {
    for (std::size_t x = 0; x < size; ++x) res[x] = lambda * values[x] + rhs[x];
    if (options.project_constant_mode) {
      const double shift = mean_of(res);
      const double dv = shift / lambda;
      for (std::size_t x = 0; x < size; ++x) {
        values[x] -= dv;
        res[x] -= shift;
      }
    }
    residual = sup_abs(res);
    if (!std::isfinite(residual)) {
      throw Error(ErrorKind::kDivergence, "solve_discounted: non-finite residual at step " +
                                              std::to_string(it));
    }
    if (initial_residual < 0.0) initial_residual = std::max(residual, scale);
    if (residual <= options.tol) break;
    if (residual > 10.0 * initial_residual) {
      std::ostringstream os;
      os << "solve_discounted: residual " << residual << " exceeded 10x the initial "
         << initial_residual << " at step " << it << " (lambda=" << lambda << ", A=" << params.A
         << ")";
      throw Error(ErrorKind::kDivergence, os.str());
    }
    if (it >= options.max_iter) break;
    if (options.local_time_stepping && accel) {
      accel->step(values, res, stiffness, lambda, residual);
    } else if (options.local_time_stepping) {
      for (std::size_t x = 0; x < size; ++x) values[x] -= 0.5 / (lambda + stiffness[x]) * res[x];
    } else {
      for (std::size_t x = 0; x < size; ++x) values[x] -= dt * res[x];
    }
    const double fresh = eval(values, rhs, std::span<double>(stiffness));
    if ((it + 1) % options.dt_refresh == 0) dt = std::min(fresh, 0.5 / lambda);
  }

  out.v = std::move(v);
  out.residual = residual;
  out.iterations = it;
  out.converged = residual <= options.tol;
  out.final_dt = dt;
  return out;
}

template <class Eval>
DiscountedSolution march_to_steady(double lambda, const Direction& dir, const PhysParams& params,
                                   const ShearProfile& f, const SolveOptions& options,
                                   ScalarField v, Eval&& eval) {
  // Each tier is slower and more robust than the one before: accelerated
  // local steps, plain local steps, one global stable step.
  std::vector<SolveOptions> tiers{options};
  if (options.local_time_stepping && options.anderson_depth > 0) {
    tiers.push_back(options);
    tiers.back().anderson_depth = 0;
  }
  if (options.local_time_stepping) {
    tiers.push_back(options);
    tiers.back().local_time_stepping = false;
  }
  for (std::size_t t = 0; t + 1 < tiers.size(); ++t) {
    try {
      return march_once(lambda, dir, params, f, tiers[t], v, eval);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDivergence) throw;
    }
  }
  return march_once(lambda, dir, params, f, tiers.back(), std::move(v), eval);
}

}  // namespace

ScalarField mean_field_initial(double lambda, const Direction& dir, const PhysParams& params,
                               const ShearProfile& f) {
  const double c = -(dir.norm() + params.A * dir.p_last * f.field().mean()) / lambda;
  return ScalarField(f.grid(), c);
}

DiscountedSolution solve_discounted(double lambda, const Direction& dir, const PhysParams& params,
                                    const ShearProfile& f, const SolveOptions& options) {
  check_solve_inputs(lambda, dir, f, options);
  GOperator op(dir, params, f);
  ScalarField v = options.initial ? *options.initial : mean_field_initial(lambda, dir, params, f);
  v.require_finite("solve_discounted initial field");
  auto eval = [&op](std::span<const double> values, std::vector<double>& rhs,
                    std::span<double> stiffness) {
    return op.stable_dt(op.evaluate(values, rhs, {}, {}, stiffness));
  };
  return march_to_steady(lambda, dir, params, f, options, std::move(v), eval);
}

BoundCheck check_discounted_bounds(const DiscountedSolution& sol, const Direction& dir,
                                   const PhysParams& params, const ShearProfile& f,
                                   double h_constant) {
  const double h = sol.v.grid().spacing();
  const double slack = 10.0 * sol.residual + h_constant * h;
  const double lam = sol.lambda;
  const double norm = dir.norm();
  const double lo = -norm - params.A * driven_force(dir, f) - slack;
  const double hi = -norm - params.A * min_drift(dir, f) + slack;
  BoundCheck out;
  out.lower_violation = lo - lam * sol.v.min();
  out.upper_violation = lam * sol.v.max() - hi;

  double grad = 0.0;
  const auto comps = grad_central(sol.v);
  for (std::size_t x = 0; x < sol.v.size(); ++x) {
    double s = 0.0;
    for (const auto& c : comps) s += c[x] * c[x];
    grad = std::max(grad, std::sqrt(s));
  }
  out.gradient_violation =
      lam * grad - (params.A * std::abs(dir.p_last) * f.lip_bound() + slack);
  return out;
}

EvolutionTrace evolve(const Direction& dir, const PhysParams& params, const ShearProfile& f,
                      double horizon, const EvolveOptions& options) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::kInvalidArgument, "evolve: horizon must be > 0");
  if (dir.p_last == 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "evolve: p_last = 0 has the trivial solution -|P| t");
  }
  GOperator op(dir, params, f);
  const auto& grid = f.grid();
  ScalarField v = options.initial ? *options.initial : ScalarField(grid, 0.0);
  double t = options.initial_time;

  std::vector<double> times = options.snapshot_times;
  std::sort(times.begin(), times.end());
  times.erase(std::remove_if(times.begin(), times.end(),
                             [&](double s) { return s <= t || s > horizon; }),
              times.end());
  if (times.empty() || times.back() != horizon) times.push_back(horizon);

  const double blowup =
      10.0 * (dir.norm() + params.A * std::abs(dir.p_last) * f.max_abs()) * horizon;
  std::vector<double> rhs(grid.size());
  auto values = v.values();

  EvolutionTrace trace{{}, {}, {}, 0, 0.0, ScalarField(grid)};
  auto sup_grad = [&]() {
    double g = 0.0;
    const auto comps = grad_central(v);
    for (std::size_t x = 0; x < v.size(); ++x) {
      double s = 0.0;
      for (const auto& c : comps) s += c[x] * c[x];
      g = std::max(g, std::sqrt(s));
    }
    return g;
  };

  double dt = op.stable_dt(op.evaluate(values, rhs));
  std::size_t next = 0;
  std::int64_t step = 0;
  trace.grad_sup.emplace_back(t, sup_grad());
  while (next < times.size()) {
    const double target = times[next];
    const double step_dt = std::min(dt, target - t);
    for (std::size_t x = 0; x < values.size(); ++x) values[x] -= step_dt * rhs[x];
    t = (step_dt == target - t) ? target : t + step_dt;
    ++step;

    const double fresh = op.stable_dt(op.evaluate(values, rhs));
    dt = (step % options.dt_refresh == 0) ? fresh : std::min(dt, fresh);
    if (step % options.grad_every == 0) trace.grad_sup.emplace_back(t, sup_grad());

    if (t == target) {
      const double vmax = v.max_abs();
      if (!std::isfinite(vmax) || vmax > blowup) {
        throw Error(ErrorKind::kDivergence, "evolve: instability detected at t = " + std::to_string(t));
      }
      trace.grad_sup.emplace_back(t, sup_grad());
      trace.snapshots.push_back({t, v});
      if (t >= 1.0) {
        ScalarField s = v;
        s *= -1.0 / t;
        trace.slope.push_back({t, std::move(s)});
      }
      ++next;
    } else if (step % 1000 == 0) {
      const double vmax = v.max_abs();
      if (!std::isfinite(vmax) || vmax > blowup) {
        throw Error(ErrorKind::kDivergence, "evolve: instability detected at t = " + std::to_string(t));
      }
    }
  }
  trace.steps = step;
  trace.final_t = t;
  trace.final_v = std::move(v);
  return trace;
}

double gradient_bound_violation(const EvolutionTrace& trace, const Direction& dir,
                                const PhysParams& params, const ShearProfile& f,
                                double h_constant) {
  const double h = f.grid().spacing();
  const double rate = params.A * std::abs(dir.p_last) * f.lip_bound();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [t, g] : trace.grad_sup) {
    worst = std::max(worst, g - (rate * t + h_constant * h * t));
  }
  return worst;
}

ShearProfile resample_line(const ShearProfile& f1, int cells) {
  if (f1.grid().dim() != 1) throw Error(ErrorKind::kInvalidArgument, "resample_line: profile must be 1-D");
  const TorusGrid dense(1, cells);
  const int coarse = f1.grid().cells();
  const auto src = f1.field().values();
  ScalarField out(dense);
  for (int i = 0; i < cells; ++i) {
    const double x = static_cast<double>(i) * coarse / cells;
    const int j = static_cast<int>(std::floor(x));
    const double w = x - j;
    out[static_cast<std::size_t>(i)] =
        (1.0 - w) * src[static_cast<std::size_t>(j % coarse)] +
        w * src[static_cast<std::size_t>((j + 1) % coarse)];
  }
  return ShearProfile(std::move(out), f1.name(), f1.c1_compliant(), f1.q_shift());
}

DiscountedSolution solve_line(double lambda, const Direction& dir, const PhysParams& params,
                              const ShearProfile& f1, int n_dense, const SolveOptions& options) {
  if (f1.grid().dim() != 1 || dir.dim() != 1) {
    throw Error(ErrorKind::kInvalidArgument, "solve_line: requires n = 1");
  }
  if (n_dense < 1024) throw Error(ErrorKind::kInvalidArgument, "solve_line: n_dense must be >= 1024");
  const ShearProfile f = f1.grid().cells() == n_dense ? f1 : resample_line(f1, n_dense);
  SolveOptions opts = options;
  if (opts.initial && opts.initial->grid().cells() != n_dense) opts.initial.reset();
  check_solve_inputs(lambda, dir, f, opts);
  params.validate();
  dir.validate();

  // Non-divergence ODE form: (H - d p2^2 v'' / H^2)_(+) + A p2 f with
  // H = sqrt(p2^2 + (p1 + v')^2), first-order part in Lax-Friedrichs form.
  const std::size_t size = f.grid().size();
  const double h = f.grid().spacing();
  const double invh = 1.0 / h;
  const double p1 = dir.p[0];
  const double p2sq = dir.p_last * dir.p_last;
  std::vector<double> drift(size);
  for (std::size_t x = 0; x < size; ++x) drift[x] = params.A * dir.p_last * f.field()[x];

  auto eval = [&](std::span<const double> v, std::vector<double>& rhs,
                  std::span<double> stiffness) {
    double speed_max = 0.0;
    double q_max_sq = 0.0;
    double g_max = 0.0;
    for (std::size_t x = 0; x < size; ++x) {
      const double vp = v[x + 1 < size ? x + 1 : 0];
      const double vm = v[x > 0 ? x - 1 : size - 1];
      const double g = 0.5 * (vp - vm) * invh;
      const double q = p1 + g;
      const double hsq = p2sq + q * q;
      const double central = std::sqrt(hsq);
      const double lap = (vp - 2.0 * v[x] + vm) * invh * invh;
      const double qp = p1 + (vp - v[x]) * invh;
      const double qm = p1 + (v[x] - vm) * invh;
      const double m = std::max(std::abs(qp), std::abs(qm));
      const double alpha = m / std::sqrt(p2sq + m * m);
      const double diss = 0.5 * alpha * (vp - 2.0 * v[x] + vm) * invh;
      const double curv = params.d * p2sq * lap / hsq;
      // Speed relative to the magnitude, so the LF term scales like the
      // face-flux operator's.
      double s = 1.0 - curv / central;
      if (params.cutoff && s < 0.0) s = 0.0;
      const double mag = std::max(s >= 0.0 ? central - diss : central + diss, 0.0);
      rhs[x] = s * mag + drift[x];
      if (!stiffness.empty()) {
        const bool active = !(params.cutoff && s == 0.0);
        stiffness[x] = (active ? 2.0 * params.d * p2sq / hsq * invh * invh : 0.0) +
                       2.0 * std::abs(s) * invh;
      }
      speed_max = std::max(speed_max, std::abs(s));
      q_max_sq = std::max(q_max_sq, q * q);
      g_max = std::max(g_max, std::abs(g));
    }
    const double speed = std::max(speed_max, 1.0);
    double dt = h / (2.0 * speed * (1.0 + std::abs(p1) + g_max));
    if (params.d > 0.0) dt = std::min(dt, h * h / (4.0 * params.d * (1.0 + q_max_sq / p2sq)));
    return 0.5 * dt;
  };

  ScalarField v = opts.initial ? *opts.initial : mean_field_initial(lambda, dir, params, f);
  return march_to_steady(lambda, dir, params, f, opts, std::move(v), eval);
}

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::kIo, "write_checkpoint: cannot open " + path);
    out << "node,v\n" << std::setprecision(17);
    for (std::size_t x = 0; x < cp.v.size(); ++x) out << x << ',' << cp.v[x] << '\n';
  }
  std::ofstream meta(path + ".meta");
  if (!meta) throw Error(ErrorKind::kIo, "write_checkpoint: cannot open " + path + ".meta");
  meta << std::setprecision(17);
  meta << "n=" << cp.v.grid().dim() << '\n';
  meta << "grid_N=" << cp.v.grid().cells() << '\n';
  meta << "lambda=" << cp.lambda << '\n';
  meta << "P=";
  for (double x : cp.dir.p) meta << x << ',';
  meta << cp.dir.p_last << '\n';
  meta << "d=" << cp.params.d << '\n';
  meta << "A=" << cp.params.A << '\n';
  meta << "cutoff=" << (cp.params.cutoff ? "on" : "off") << '\n';
  meta << "iteration=" << cp.iteration << '\n';
  meta << "residual=" << cp.residual << '\n';
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream meta(path + ".meta");
  if (!meta) throw Error(ErrorKind::kIo, "read_checkpoint: cannot open " + path + ".meta");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorKind::kIo, path + ".meta: missing key " + key);
    return it->second;
  };
  const TorusGrid grid(std::stoi(need("n")), std::stoi(need("grid_N")));
  Direction dir;
  {
    std::stringstream ss(need("P"));
    std::string item;
    std::vector<double> comps;
    while (std::getline(ss, item, ',')) comps.push_back(std::stod(item));
    if (static_cast<int>(comps.size()) != grid.dim() + 1) {
      throw Error(ErrorKind::kIo, path + ".meta: P has the wrong length");
    }
    dir.p_last = comps.back();
    comps.pop_back();
    dir.p = std::move(comps);
  }
  PhysParams params{std::stod(need("d")), std::stod(need("A")), need("cutoff") == "on"};

  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "read_checkpoint: cannot open " + path);
  std::getline(in, line);
  if (line != "node,v") throw Error(ErrorKind::kIo, path + ": expected header 'node,v'");
  ScalarField v(grid);
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::kIo, path + ": malformed row");
    const auto node = static_cast<std::size_t>(std::stoull(line.substr(0, comma)));
    if (node >= grid.size()) throw Error(ErrorKind::kIo, path + ": node index out of range");
    v[node] = std::stod(line.substr(comma + 1));
    ++count;
  }
  if (count != grid.size()) throw Error(ErrorKind::kIo, path + ": wrong number of rows");
  return Checkpoint{std::move(v), std::stod(need("lambda")), std::move(dir), params,
                    std::stoll(need("iteration")), std::stod(need("residual"))};
}

}  // namespace shearflame
