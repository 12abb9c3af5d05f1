#include "shearflame/operators.hpp"

#include <algorithm>
#include <cmath>

#include "shearflame/error.hpp"

namespace shearflame {

void PhysParams::validate() const {
  if (!(d >= 0.0) || !std::isfinite(d)) {
    throw Error(ErrorKind::kInvalidArgument, "PhysParams: d must be finite and >= 0");
  }
  if (!(A >= 0.0) || !std::isfinite(A)) {
    throw Error(ErrorKind::kInvalidArgument, "PhysParams: A must be finite and >= 0");
  }
}

GOperator::GOperator(const Direction& dir, const PhysParams& params, const ShearProfile& f)
    : grid_(f.grid()), dir_(dir), params_(params) {
  dir_.validate();
  params_.validate();
  if (dir_.dim() != grid_.dim()) {
    throw Error(ErrorKind::kInvalidArgument, "GOperator: direction/grid dimension mismatch");
  }
  if (dir_.p_last == 0.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "GOperator: p_last = 0; use the trivial solution v = -|P| t instead");
  }
  drift_.resize(grid_.size());
  const double scale = params_.A * dir_.p_last;
  const auto samples = f.field().values();
  for (std::size_t x = 0; x < grid_.size(); ++x) drift_[x] = scale * samples[x];
  scratch_.resize(grid_);
  kappa_.resize(grid_.size());
}

GOperator::Stats GOperator::evaluate(std::span<const double> v, std::span<double> rhs,
                                     std::span<double> speed, std::span<double> kappa,
                                     std::span<double> stiffness) {
  const int n = grid_.dim();
  const std::size_t size = grid_.size();
  const double h = grid_.spacing();
  const double invh = 1.0 / h;
  const double half_invh = 0.5 * invh;
  const double pl_sq = dir_.p_last * dir_.p_last;
  const double d = params_.d;
  const bool cutoff = params_.cutoff;
  const double* p = dir_.p.data();

  detail::central_gradient(grid_, v, scratch_);
  detail::curvature_from_gradient(grid_, v, dir_.p, pl_sq, scratch_, kappa_);

  std::array<const std::uint32_t*, TorusGrid::kMaxDim> plus{};
  std::array<const std::uint32_t*, TorusGrid::kMaxDim> minus{};
  std::array<const double*, TorusGrid::kMaxDim> grad{};
  std::array<const double*, TorusGrid::kMaxDim> inv_face{};
  for (int a = 0; a < n; ++a) {
    plus[a] = grid_.plus_table(a).data();
    minus[a] = grid_.minus_table(a).data();
    grad[a] = scratch_.grad[a].data();
    inv_face[a] = scratch_.inv_norm[a].data();
  }

  Stats stats;
  double grad_sq_max = 0.0;
  for (std::size_t x = 0; x < size; ++x) {
    const double vx = v[x];
    double q_sq = 0.0;
    double g_sq = 0.0;
    double second = 0.0;
    double face_weight = 0.0;
    for (int a = 0; a < n; ++a) {
      face_weight += inv_face[a][x] + inv_face[a][minus[a][x]];
      const double g = grad[a][x];
      const double q = p[a] + g;
      q_sq += q * q;
      g_sq += g * g;
      const double vp = v[plus[a][x]];
      const double vm = v[minus[a][x]];
      const double qp = p[a] + (vp - vx) * invh;
      const double qm = p[a] + (vx - vm) * invh;
      // |dH/dq_a| = |q_a| / H is increasing in |q_a| and bounded by the
      // single-axis value, so this bounds it over [qm, qp].
      const double m = std::max(std::abs(qp), std::abs(qm));
      const double alpha = m / std::sqrt(pl_sq + m * m);
      second += alpha * (vp - 2.0 * vx + vm);
    }
    const double central = std::sqrt(pl_sq + q_sq);
    const double dissipation = second * half_invh;

    double s = 1.0 - d * kappa_[x];
    if (cutoff && s < 0.0) s = 0.0;
    // A negative speed flips the Hamiltonian's sign, so the dissipation
    // follows |s| to stay monotone.
    const double magnitude = std::max(s >= 0.0 ? central - dissipation : central + dissipation, 0.0);
    rhs[x] = s * magnitude + drift_[x];

    if (!speed.empty()) speed[x] = s;
    if (!stiffness.empty()) {
      const bool curvature_active = !(cutoff && s == 0.0);
      stiffness[x] = (curvature_active ? 2.0 * d * magnitude * face_weight * invh * invh : 0.0) +
                     2.0 * n * std::max(std::abs(s), 1.0) * invh;
    }
    stats.speed_max = std::max(stats.speed_max, std::abs(s));
    stats.q_max_sq = std::max(stats.q_max_sq, q_sq);
    stats.curvature_stiffness = std::max(stats.curvature_stiffness, magnitude * face_weight);
    grad_sq_max = std::max(grad_sq_max, g_sq);
  }
  stats.grad_max = std::sqrt(grad_sq_max);
  if (!kappa.empty()) std::copy(kappa_.begin(), kappa_.end(), kappa.begin());
  return stats;
}

double GOperator::stable_dt(const Stats& stats) const noexcept {
  const double h = grid_.spacing();
  const double n = grid_.dim();
  double dt = h / (2.0 * n * std::max(stats.speed_max, 1.0));
  if (params_.d > 0.0 && stats.curvature_stiffness > 0.0) {
    dt = std::min(dt, h * h / (2.0 * params_.d * stats.curvature_stiffness));
  }
  return 0.5 * dt;
}

namespace {

void check_inputs(const ScalarField& v, const ShearProfile& f) {
  v.require_finite("g_operator");
  if (!(v.grid() == f.grid())) {
    throw Error(ErrorKind::kInvalidArgument, "g_operator: field and profile grids differ");
  }
}

}  // namespace

OperatorOutput g_operator(const ScalarField& v, const Direction& dir, const PhysParams& params,
                          const ShearProfile& f) {
  check_inputs(v, f);
  GOperator op(dir, params, f);
  OperatorOutput out{ScalarField(v.grid()), ScalarField(v.grid()), ScalarField(v.grid())};
  op.evaluate(v.values(), out.rhs.values(), out.speed.values(), out.kappa.values());
  out.rhs.require_finite("g_operator");
  return out;
}

double stable_dt(const ScalarField& v, const Direction& dir, const PhysParams& params,
                 const ShearProfile& f) {
  check_inputs(v, f);
  GOperator op(dir, params, f);
  std::vector<double> rhs(v.size());
  return op.stable_dt(op.evaluate(v.values(), rhs));
}

}  // namespace shearflame
