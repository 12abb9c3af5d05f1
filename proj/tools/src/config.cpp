#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shearflame/error.hpp"

namespace shearflame::cli {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::kConfig, "config key '" + key + "': " + why);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used != text.size()) bad(key, "not a number: '" + text + "'");
    if (!std::isfinite(x)) bad(key, "not finite");
    return x;
  } catch (const std::logic_error&) {
    bad(key, "not a number: '" + text + "'");
  }
}

long long to_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(text, &used);
    if (used != text.size()) bad(key, "not an integer: '" + text + "'");
    return x;
  } catch (const std::logic_error&) {
    bad(key, "not an integer: '" + text + "'");
  }
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "on" || text == "1") return true;
  if (text == "false" || text == "off" || text == "0") return false;
  bad(key, "expected true/false");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_real(key, trim(item)));
  if (out.empty()) bad(key, "empty list");
  return out;
}

ARange to_range(const std::string& key, const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(trim(item));
  if (parts.size() != 2 && parts.size() != 3) bad(key, "expected lo:hi or lo:hi:k");
  ARange r;
  r.lo = to_real(key, parts[0]);
  r.hi = to_real(key, parts[1]);
  r.count = parts.size() == 3 ? static_cast<int>(to_int(key, parts[2])) : 2;
  return r;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
  return s;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig,
                  path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig make_config(const std::vector<std::pair<std::string, std::string>>& entries) {
  RunConfig c;
  for (const auto& [key, value] : entries) {
    if (key == "n") c.n = static_cast<int>(to_int(key, value));
    else if (key == "grid_N") c.grid_N = static_cast<int>(to_int(key, value));
    else if (key == "profile") c.profile = value;
    else if (key == "P") c.P = to_list(key, value);
    else if (key == "d") c.d = to_real(key, value);
    else if (key == "A") c.A = to_real(key, value);
    else if (key == "A_range") c.A_range = to_range(key, value);
    else if (key == "cutoff") c.cutoff = value;
    else if (key == "schedule") c.schedule = to_list(key, value);
    else if (key == "lambda") c.lambda = to_real(key, value);
    else if (key == "T") c.T = to_real(key, value);
    else if (key == "method") c.method = value;
    else if (key == "tol") c.tol = to_real(key, value);
    else if (key == "max_iter") c.max_iter = to_int(key, value);
    else if (key == "tol_A") c.tol_A = to_real(key, value);
    else if (key == "theta_u") c.theta_u = to_real(key, value);
    else if (key == "probe_factors") c.probe_factors = to_list(key, value);
    else if (key == "figure2_points") c.figure2_points = static_cast<int>(to_int(key, value));
    else if (key == "psi_amplitude") c.psi_amplitude = to_real(key, value);
    else if (key == "strict") c.strict = to_bool(key, value);
    else if (key == "deterministic") c.deterministic = to_bool(key, value);
    else if (key == "out") c.out = value;
    else if (key == "jobs") c.jobs = static_cast<int>(to_int(key, value));
    else bad(key, "unknown key");
  }
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  if (c.n < 1 || c.n > 3) bad("n", "must be 1, 2 or 3");
  if (c.grid_N < 8 || c.grid_N > 4096) bad("grid_N", "must be in [8, 4096]");
  if (!c.P.empty() && static_cast<int>(c.P.size()) != c.n + 1) {
    bad("P", "needs n + 1 = " + std::to_string(c.n + 1) + " components");
  }
  if (!c.P.empty() && c.P.back() == 0.0) bad("P", "last component must be nonzero");
  if (c.d < 0.0) bad("d", "must be >= 0");
  if (c.A < 0.0) bad("A", "must be >= 0");
  if (c.A_range) {
    if (c.A_range->lo < 0.0 || !(c.A_range->hi > c.A_range->lo)) bad("A_range", "need 0 <= lo < hi");
    if (c.A_range->count < 2) bad("A_range", "need k >= 2");
  }
  if (c.cutoff != "on" && c.cutoff != "off" && c.cutoff != "both") bad("cutoff", "on, off or both");
  if (c.schedule.size() < 3) bad("schedule", "needs >= 3 entries");
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    if (!(c.schedule[i] > 0.0)) bad("schedule", "entries must be > 0");
    if (i > 0 && !(c.schedule[i] < c.schedule[i - 1])) bad("schedule", "must be strictly decreasing");
  }
  if (!(c.lambda > 0.0)) bad("lambda", "must be > 0");
  if (!(c.T > 0.0)) bad("T", "must be > 0");
  if (c.method != "discount" && c.method != "longtime") bad("method", "discount or longtime");
  if (c.method == "longtime" && c.T < 8.0) bad("T", "long-time estimates need T >= 8");
  if (!(c.tol > 0.0)) bad("tol", "must be > 0");
  if (c.max_iter < 1) bad("max_iter", "must be >= 1");
  if (!(c.tol_A > 0.0)) bad("tol_A", "must be > 0");
  if (!(c.theta_u > 0.0)) bad("theta_u", "must be > 0");
  for (double k : c.probe_factors) {
    if (!(k > 0.0)) bad("probe_factors", "entries must be > 0");
  }
  if (c.figure2_points < 2) bad("figure2_points", "must be >= 2");
  if (c.psi_amplitude < 0.0) bad("psi_amplitude", "must be >= 0");
  if (c.jobs < 1) bad("jobs", "must be >= 1");
  if (c.out.empty()) bad("out", "must not be empty");
  const auto& p = c.profile;
  if (!(p == "cellular" || p.rfind("constant:", 0) == 0 || p == "counterexample" ||
        p.rfind("counterexample:", 0) == 0 || p.rfind("csv:", 0) == 0)) {
    bad("profile", "expected cellular, constant:C, counterexample[:a] or csv:PATH");
  }
  if (p.rfind("counterexample", 0) == 0 && c.n < 2) bad("profile", "counterexample needs n >= 2");
}

Direction RunConfig::direction() const {
  if (P.empty()) return vertical_direction(n);
  Direction dir;
  dir.p.assign(P.begin(), P.end() - 1);
  dir.p_last = P.back();
  return dir;
}

std::vector<bool> RunConfig::cutoff_variants() const {
  if (cutoff == "both") return {true, false};
  return {cutoff == "on"};
}

EstimateOptions RunConfig::estimate_options() const {
  EstimateOptions o;
  o.solve.tol = tol;
  o.solve.max_iter = max_iter;
  o.theta_u = theta_u;
  return o;
}

ShearProfile build_profile(const RunConfig& c) {
  const TorusGrid grid(c.n, c.grid_N);
  const auto& p = c.profile;
  if (p == "cellular") return cellular_profile(c.n, grid);
  if (p.rfind("constant:", 0) == 0) return constant_profile(to_real("profile", p.substr(9)), grid);
  if (p.rfind("counterexample", 0) == 0) {
    double a = c.psi_amplitude;
    if (p.size() > 15) a = to_real("profile", p.substr(15));
    if (a == 0.0) a = 2.0 * minimal_sign_changing_amplitude(c.n, c.d);
    return counterexample_profile(a, c.d, grid).profile;
  }
  auto f = read_profile_csv(p.substr(4));
  if (f.grid().dim() != c.n) bad("profile", "CSV dimension differs from n");
  return f;
}

std::string echo(const RunConfig& c) {
  std::ostringstream out;
  out << "n = " << c.n << "\n"
      << "grid_N = " << c.grid_N << "\n"
      << "profile = " << c.profile << "\n"
      << "P = " << fmt_list(c.P) << "\n"
      << "d = " << fmt(c.d) << "\n"
      << "A = " << fmt(c.A) << "\n";
  if (c.A_range) {
    out << "A_range = " << fmt(c.A_range->lo) << ":" << fmt(c.A_range->hi) << ":"
        << c.A_range->count << "\n";
  }
  out << "cutoff = " << c.cutoff << "\n"
      << "schedule = " << fmt_list(c.schedule) << "\n"
      << "lambda = " << fmt(c.lambda) << "\n"
      << "T = " << fmt(c.T) << "\n"
      << "method = " << c.method << "\n"
      << "tol = " << fmt(c.tol) << "\n"
      << "max_iter = " << c.max_iter << "\n"
      << "tol_A = " << fmt(c.tol_A) << "\n"
      << "theta_u = " << fmt(c.theta_u) << "\n"
      << "probe_factors = " << fmt_list(c.probe_factors) << "\n"
      << "figure2_points = " << c.figure2_points << "\n"
      << "psi_amplitude = " << fmt(c.psi_amplitude) << "\n"
      << "strict = " << (c.strict ? "true" : "false") << "\n"
      << "deterministic = " << (c.deterministic ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace shearflame::cli
