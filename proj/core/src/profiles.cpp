#include "shearflame/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "shearflame/error.hpp"

namespace shearflame {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Row r of the CSV uses lexicographic index order, i.e. axis 0 slowest.
std::size_t row_to_node(const TorusGrid& grid, std::size_t row) {
  std::array<int, TorusGrid::kMaxDim> c{};
  const auto cells = static_cast<std::size_t>(grid.cells());
  for (int a = grid.dim() - 1; a >= 0; --a) {
    c[a] = static_cast<int>(row % cells);
    row /= cells;
  }
  return grid.index(std::span<const int>(c.data(), grid.dim()));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos) {
      throw std::invalid_argument(s);
    }
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kIo, where + ": cannot parse '" + s + "' as a number");
  }
}

}  // namespace

ShearProfile::ShearProfile(ScalarField samples, std::string name, bool c1_compliant,
                           std::optional<std::vector<double>> q_shift)
    : field_(std::move(samples)),
      name_(std::move(name)),
      c1_compliant_(c1_compliant),
      q_shift_(std::move(q_shift)) {
  field_.require_finite("ShearProfile");
  f_max_ = field_.max();
  f_min_ = field_.min();
  const auto comps = grad_central(field_);
  double sq = 0.0;
  for (std::size_t node = 0; node < field_.size(); ++node) {
    double s = 0.0;
    for (const auto& comp : comps) s += comp[node] * comp[node];
    sq = std::max(sq, s);
  }
  lip_bound_ = 1.1 * std::sqrt(sq);
  if (q_shift_ && static_cast<int>(q_shift_->size()) != field_.grid().dim()) {
    throw Error(ErrorKind::kInvalidArgument, "ShearProfile: q_shift has wrong dimension");
  }
}

ShearProfile cellular_profile(int n, const TorusGrid& grid) {
  if (grid.dim() != n) {
    throw Error(ErrorKind::kInvalidArgument, "cellular_profile: grid dimension differs from n");
  }
  auto samples = ScalarField::sample(grid, [n](std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s += std::cos(kTwoPi * xi) - 1.0;
    return s / n;
  });
  return ShearProfile(std::move(samples), "cellular", true,
                      std::vector<double>(static_cast<std::size_t>(n), 0.5));
}

ShearProfile constant_profile(double c, const TorusGrid& grid) {
  if (!std::isfinite(c)) throw Error(ErrorKind::kInvalidArgument, "constant_profile: non-finite c");
  return ShearProfile(ScalarField(grid, c), "constant", false);
}

ShearProfile profile_from_function(const TorusGrid& grid,
                                   const std::function<double(std::span<const double>)>& fn,
                                   std::string name) {
  auto samples = ScalarField::sample(grid, fn);
  samples.require_finite("profile_from_function");
  const double scale = std::max(1.0, samples.max_abs());
  std::array<double, TorusGrid::kMaxDim> y{};
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const auto c = grid.coords(node);
    for (int a = 0; a < grid.dim(); ++a) {
      for (int b = 0; b < grid.dim(); ++b) y[b] = c[b] * grid.spacing();
      y[a] += 1.0;
      const double shifted = fn(std::span<const double>(y.data(), grid.dim()));
      if (!(std::abs(shifted - samples[node]) <= 1e-9 * scale)) {
        throw Error(ErrorKind::kInvalidArgument,
                    "profile_from_function: '" + name + "' is not periodic along axis " +
                        std::to_string(a + 1));
      }
    }
  }
  return ShearProfile(std::move(samples), std::move(name), false);
}

double counterexample_w(std::span<const double> x, double psi_amplitude, double d) {
  // Psi has a diagonal Hessian, so div(DPsi/S) = sum_i Psi_ii (1/S - Psi_i^2/S^3).
  double grad_sq = 0.0;
  for (double xi : x) {
    const double g = kTwoPi * psi_amplitude * std::cos(kTwoPi * xi);
    grad_sq += g * g;
  }
  const double s = std::sqrt(1.0 + grad_sq);
  double div = 0.0;
  for (double xi : x) {
    const double g = kTwoPi * psi_amplitude * std::cos(kTwoPi * xi);
    const double hess = -kTwoPi * kTwoPi * psi_amplitude * std::sin(kTwoPi * xi);
    div += hess * (1.0 / s - g * g / (s * s * s));
  }
  return (1.0 - d * div) * s;
}

Counterexample counterexample_profile(double psi_amplitude, double d, const TorusGrid& grid) {
  if (grid.dim() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "counterexample_profile: requires n >= 2");
  }
  if (!(psi_amplitude > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "counterexample_profile: amplitude must be > 0");
  }
  if (!(d >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "counterexample_profile: d < 0");
  auto w = ScalarField::sample(grid, [&](std::span<const double> x) {
    return counterexample_w(x, psi_amplitude, d);
  });
  if (!(w.min() < 0.0 && w.max() > 0.0)) {
    std::ostringstream os;
    os << "counterexample_profile: W does not change sign (min " << w.min() << ", max "
       << w.max() << "); increase psi_amplitude above " << psi_amplitude;
    throw Error(ErrorKind::kNoSignChange, os.str());
  }
  ScalarField f(grid);
  for (std::size_t node = 0; node < grid.size(); ++node) f[node] = -std::max(0.0, w[node]);
  return Counterexample{ShearProfile(std::move(f), "counterexample", false), std::move(w),
                        psi_amplitude, d};
}

double minimal_sign_changing_amplitude(int n, double d, int dense_cells, double start) {
  const TorusGrid dense(n, dense_cells);
  for (double a = start; a < 1e3; a *= 2.0) {
    double lo = 1.0;
    for (std::size_t node = 0; node < dense.size(); ++node) {
      std::array<double, TorusGrid::kMaxDim> x{};
      const auto c = dense.coords(node);
      for (int k = 0; k < n; ++k) x[k] = c[k] * dense.spacing();
      lo = std::min(lo, counterexample_w(std::span<const double>(x.data(), n), a, d));
    }
    if (lo < 0.0) return a;
  }
  throw Error(ErrorKind::kNoSignChange, "minimal_sign_changing_amplitude: none found (d too small?)");
}

double driven_force(const Direction& dir, const ShearProfile& f) {
  return dir.p_last >= 0.0 ? dir.p_last * f.f_max() : dir.p_last * f.f_min();
}

double min_drift(const Direction& dir, const ShearProfile& f) {
  return dir.p_last >= 0.0 ? dir.p_last * f.f_min() : dir.p_last * f.f_max();
}

ShearProfile read_profile_csv(const std::string& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "read_profile_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kIo, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  const int n = static_cast<int>(header.size()) - 1;
  if (n < 1 || n > TorusGrid::kMaxDim) {
    throw Error(ErrorKind::kIo, path + ": header must be x1,...,xn,f with 1 <= n <= 3");
  }
  for (int a = 0; a < n; ++a) {
    if (header[a] != "x" + std::to_string(a + 1)) {
      throw Error(ErrorKind::kIo, path + ": expected column 'x" + std::to_string(a + 1) + "'");
    }
  }
  if (header[n] != "f") throw Error(ErrorKind::kIo, path + ": last column must be 'f'");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_commas(line);
    if (static_cast<int>(cols.size()) != n + 1) {
      throw Error(ErrorKind::kIo, path + ": line " + std::to_string(line_no) + " has wrong column count");
    }
    std::vector<double> row;
    for (const auto& c : cols) row.push_back(parse_number(c, path + ":" + std::to_string(line_no)));
    rows.push_back(std::move(row));
  }

  const int cells = static_cast<int>(std::lround(std::pow(static_cast<double>(rows.size()), 1.0 / n)));
  std::size_t expect = 1;
  for (int a = 0; a < n; ++a) expect *= static_cast<std::size_t>(cells);
  if (cells < TorusGrid::kMinCells || expect != rows.size()) {
    throw Error(ErrorKind::kIo, path + ": row count " + std::to_string(rows.size()) +
                                    " is not N^n for any N >= 8");
  }
  const TorusGrid grid(n, cells);
  ScalarField f(grid);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t node = row_to_node(grid, r);
    const auto c = grid.coords(node);
    for (int a = 0; a < n; ++a) {
      if (std::abs(rows[r][a] - c[a] * grid.spacing()) > 1e-9) {
        throw Error(ErrorKind::kIo, path + ": row " + std::to_string(r + 1) +
                                        " coordinates are not in lexicographic node order");
      }
    }
    f[node] = rows[r][n];
  }
  return ShearProfile(std::move(f), name.empty() ? "csv" : std::move(name), false);
}

void write_profile_csv(const std::string& path, const ShearProfile& f) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "write_profile_csv: cannot open " + path);
  const auto& grid = f.grid();
  for (int a = 0; a < grid.dim(); ++a) out << 'x' << (a + 1) << ',';
  out << "f\n";
  out << std::setprecision(17);
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const std::size_t node = row_to_node(grid, r);
    const auto c = grid.coords(node);
    for (int a = 0; a < grid.dim(); ++a) out << c[a] * grid.spacing() << ',';
    out << f.field()[node] << '\n';
  }
}

}  // namespace shearflame
