// Constrained minimization for c = 0 and c > 0: projected gradient in the
// H¹ inner product (preconditioner K + M) with a retraction back onto the
// constraint set after every step.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/LU>

#include "detail.hpp"
#include "kw/error.hpp"
#include "kw/quadrature.hpp"

namespace kw::solvers {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

struct Workspace {
  explicit Workspace(const GridFunction& h)
      : grid(h.grid()),
        w(grid.weights()),
        hv(h.values()),
        len(grid.graph().total_length()),
        riesz(GridFunction::constant(grid, 1.0))
  {
  }

  double mass(const Eigen::VectorXd& v) const { return w.dot((hv.array() * v.array().exp()).matrix()); }
  Eigen::VectorXd mass_gradient(const Eigen::VectorXd& v) const
  {
    return (w.array() * hv.array() * v.array().exp()).matrix();
  }
  double energy(const Eigen::VectorXd& v) const { return 0.5 * dirichlet_energy(GridFunction(grid, v)); }
  double mean(const Eigen::VectorXd& v) const { return w.dot(v) / len; }
  double pointwise(const Eigen::VectorXd& r) const { return (r.array() / w.array()).abs().maxCoeff(); }

  Grid grid;
  const Eigen::VectorXd& w;
  const Eigen::VectorXd& hv;
  double len;
  assembly::ShiftedSolver riesz;  // K + M
};

// Barzilai-Borwein step (sᵀPs)/(sᵀy) in the H¹ metric, where s is the last
// accepted move and y the change of the projected gradient; 1 when the pair
// carries no curvature information.
struct StepMemory {
  Eigen::VectorXd x;
  Eigen::VectorXd projected;

  double initial_step(const Workspace& ws, const Eigen::VectorXd& x_now, const Eigen::VectorXd& projected_now) const
  {
    if (x.size() == 0) return 1.0;
    const Eigen::VectorXd s = x_now - x;
    const double sy = s.dot(projected_now - projected);
    const double sps = s.dot(ws.riesz.apply_assembled(s));
    if (!(sy > 0.0) || !(sps > 0.0)) return 1.0;
    return std::clamp(sps / sy, 1e-4, 1e4);
  }
};

bool armijo_ok(double trial, double current, double t, double slope)
{
  const double roundoff = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(current);
  return trial <= current + kArmijo * t * slope + roundoff;
}

// Root of s ↦ ∫h e^{v + s·bump} = target. The map is increasing because the
// bump is supported where h > 0. Bracketed Newton with bisection fallback.
std::optional<double> bump_root(const Workspace& ws, const Eigen::VectorXd& v, const Eigen::VectorXd& bump,
                                double target)
{
  auto phi = [&](double s) { return ws.mass(v + s * bump) - target; };
  double lo = 0.0, hi = 0.0;
  double f0 = phi(0.0);
  if (!std::isfinite(f0)) return std::nullopt;
  if (f0 == 0.0) return 0.0;
  if (f0 < 0.0) {
    hi = 1.0;
    while (phi(hi) < 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > 512.0) return std::nullopt;
    }
  } else {
    lo = -1.0;
    while (phi(lo) > 0.0) {
      hi = lo;
      lo *= 2.0;
      if (lo < -512.0) return std::nullopt;
    }
  }

  const double scale = ws.w.dot(ws.hv.cwiseAbs()) + std::abs(target);
  double s = f0 < 0.0 ? lo : hi;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd ev = (v + s * bump).array().exp();
    const double f = ws.w.dot(ws.hv.cwiseProduct(ev)) - target;
    if (std::abs(f) <= 4.0 * std::numeric_limits<double>::epsilon() * scale) return s;
    if (f < 0.0) lo = s; else hi = s;
    const double df = ws.w.dot(ws.hv.cwiseProduct(bump).cwiseProduct(ev));
    double next = s - f / df;
    if (!(df > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == s || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) return s;
    s = next;
  }
  return s;
}

}  // namespace

Solution solve_zero(const GridFunction& h, const SolveOptions& opts)
{
  const SolvabilityVerdict verdict = classify(h, 0.0);
  const Grid& grid = h.grid();
  if (!verdict.ok()) {
    return detail::failure(SolveStatus::NotSolvable, GridFunction::zero(grid), 0.0, verdict,
                           std::string("necessary condition fails: ") + std::string(to_string(verdict.reason)));
  }

  const Workspace ws(h);
  const Eigen::VectorXd bump = detail::make_bump(h).values();

  // ∫h e^{v + s·bump} = 0, then remove the mean (which keeps the first
  // constraint since it only rescales ∫heᵛ).
  auto retract = [&](const Eigen::VectorXd& v) -> std::optional<Eigen::VectorXd> {
    const auto s = bump_root(ws, v, bump, 0.0);
    if (!s) return std::nullopt;
    Eigen::VectorXd out = v + *s * bump;
    out.array() -= ws.mean(out);
    return out;
  };

  auto start = retract(Eigen::VectorXd::Zero(grid.num_dofs()));
  if (!start) throw Error(ErrorCode::FeasibilityFailure, "no bump scaling reaches ∫h e^{ℓw} = 0");
  Eigen::VectorXd v = *start;

  // pointwise residual of v + ln λ, +∞ while λ ≤ 0
  auto stationarity = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd kx = assembly::apply_stiffness(grid, x);
    const double l = x.array().exp().inverse().matrix().dot(kx) / verdict.integral_h;
    return l > 0.0 ? ws.pointwise(kx - l * ws.mass_gradient(x)) : std::numeric_limits<double>::infinity();
  };

  double value = ws.energy(v);
  double lambda = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  StepMemory memory;
  int iter = 0;
  std::string message;
  for (;; ++iter) {
    const Eigen::VectorXd g = assembly::apply_stiffness(grid, v);
    const Eigen::VectorXd a2 = ws.mass_gradient(v);

    // λ from the identity (e^{−v})ᵀK v = λ ∫h, then the residual of v + ln λ
    lambda = v.array().exp().inverse().matrix().dot(g) / verdict.integral_h;
    if (lambda > 0.0) {
      residual = ws.pointwise(g - lambda * a2);
      if (residual <= opts.tol) break;
    }
    if (iter == opts.max_iter) {
      message = "iteration limit reached";
      break;
    }

    // Riesz representatives; (K + M)⁻¹ M·1 = 1.
    const Eigen::VectorXd z2 = ws.riesz.solve_assembled(a2);
    Eigen::Matrix2d gram;
    gram << ws.len, ws.w.dot(z2), ws.w.dot(z2), a2.dot(z2);
    const Eigen::Vector2d rhs(g.sum(), z2.dot(g));
    const Eigen::Vector2d mu = gram.fullPivLu().solve(rhs);
    // projecting the gradient before the Riesz map keeps the slope accurate
    // once g is nearly parallel to the constraint gradients
    const Eigen::VectorXd projected = g - mu[0] * ws.w - mu[1] * a2;
    const Eigen::VectorXd d = -ws.riesz.solve_assembled(projected);
    const double slope = projected.dot(d);
    if (!(slope < 0.0)) {
      message = "projected gradient vanished before the residual tolerance was met";
      break;
    }

    const double t0 = memory.initial_step(ws, v, projected);
    memory = {v, projected};
    bool accepted = false;
    double t = t0;
    for (int ls = 0; ls < kMaxBacktracks; ++ls, t *= 0.5) {
      const auto trial = retract(v + t * d);
      if (!trial) continue;
      const double tv = ws.energy(*trial);
      if (armijo_ok(tv, value, t, slope)) {
        v = *trial;
        value = tv;
        accepted = true;
        break;
      }
    }
    // Close to the minimizer the decrease drops below the round-off in the
    // energy; fall back to steps that reduce the residual instead.
    t = t0;
    for (int ls = 0; !accepted && ls < kMaxBacktracks; ++ls, t *= 0.5) {
      const auto trial = retract(v + t * d);
      if (trial && stationarity(*trial) < residual) {
        v = *trial;
        value = ws.energy(v);
        accepted = true;
      }
    }
    if (!accepted) {
      message = "line search stalled";
      break;
    }
  }

  if (!(lambda > 0.0) || residual > opts.tol) {
    Solution s = detail::failure(SolveStatus::NoConvergence, GridFunction(grid, v), 0.0, verdict, message);
    s.report.iterations = iter;
    s.report.final_residual = residual;
    return s;
  }
  Solution s{SolveStatus::Converged, GridFunction(grid, v.array() + std::log(lambda)), 0.0, verdict, {}};
  s.report.iterations = iter;
  s.report.multiplier = lambda;
  s.report.functional = value;
  detail::finish_report(s, h);
  return s;
}

Solution solve_positive(const GridFunction& h, double c, const SolveOptions& opts)
{
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "solve_positive needs c > 0");
  const SolvabilityVerdict verdict = classify(h, c);
  const Grid& grid = h.grid();
  if (!verdict.ok()) {
    return detail::failure(SolveStatus::NotSolvable, GridFunction::zero(grid), c, verdict,
                           std::string("necessary condition fails: ") + std::string(to_string(verdict.reason)));
  }

  const Workspace ws(h);
  const double target = c * ws.len;

  // constant shift onto ∫heᵘ = c|Γ|
  auto retract = [&](const Eigen::VectorXd& u) -> std::optional<Eigen::VectorXd> {
    const double m = ws.mass(u);
    if (!(m > 0.0) || !std::isfinite(m)) return std::nullopt;
    return (u.array() + std::log(target / m)).matrix();
  };

  // g(ℓ): constant ℓ for ℓ < 0, ℓ·bump for ℓ ≥ 0. ∫h e^{g(0)} = ∫h, so the
  // constant branch is needed exactly when ∫h exceeds the target.
  Eigen::VectorXd u;
  if (verdict.integral_h > target) {
    u = Eigen::VectorXd::Constant(grid.num_dofs(), std::log(target / verdict.integral_h));
  } else {
    const Eigen::VectorXd bump = detail::make_bump(h).values();
    const auto ell = bump_root(ws, Eigen::VectorXd::Zero(grid.num_dofs()), bump, target);
    if (!ell) throw Error(ErrorCode::FeasibilityFailure, "no bump scaling reaches ∫h e^{ℓw} = c|Γ|");
    const auto r = retract(*ell * bump);
    if (!r) throw Error(ErrorCode::FeasibilityFailure, "feasible start lost to round-off");
    u = *r;
  }

  StepMemory memory;
  auto value_of = [&](const Eigen::VectorXd& x) { return ws.energy(x) + c * ws.w.dot(x); };
  auto stationarity = [&](const Eigen::VectorXd& x) {
    return ws.pointwise(assembly::apply_stiffness(grid, x) + c * ws.w - ws.mass_gradient(x));
  };
  double value = value_of(u);
  double residual = std::numeric_limits<double>::infinity();
  int iter = 0;
  std::string message;
  for (;; ++iter) {
    const Eigen::VectorXd g = assembly::apply_stiffness(grid, u) + c * ws.w;
    const Eigen::VectorXd a = ws.mass_gradient(u);
    residual = ws.pointwise(g - a);
    if (residual <= opts.tol) break;
    if (iter == opts.max_iter) {
      message = "iteration limit reached";
      break;
    }

    const Eigen::VectorXd z = ws.riesz.solve_assembled(a);
    const double mu = z.dot(g) / a.dot(z);
    const Eigen::VectorXd projected = g - mu * a;
    const Eigen::VectorXd d = -ws.riesz.solve_assembled(projected);
    const double slope = projected.dot(d);
    if (!(slope < 0.0)) {
      message = "projected gradient vanished before the residual tolerance was met";
      break;
    }

    const double t0 = memory.initial_step(ws, u, projected);
    memory = {u, projected};
    bool accepted = false;
    double t = t0;
    for (int ls = 0; ls < kMaxBacktracks; ++ls, t *= 0.5) {
      const auto trial = retract(u + t * d);
      if (!trial) continue;
      const double tv = value_of(*trial);
      if (armijo_ok(tv, value, t, slope)) {
        u = *trial;
        value = tv;
        accepted = true;
        break;
      }
    }
    t = t0;
    for (int ls = 0; !accepted && ls < kMaxBacktracks; ++ls, t *= 0.5) {
      const auto trial = retract(u + t * d);
      if (trial && stationarity(*trial) < residual) {
        u = *trial;
        value = value_of(u);
        accepted = true;
      }
    }
    if (!accepted) {
      message = "line search stalled";
      break;
    }
  }

  if (residual > opts.tol) {
    Solution s = detail::failure(SolveStatus::NoConvergence, GridFunction(grid, u), c, verdict, message);
    s.report.iterations = iter;
    s.report.final_residual = residual;
    return s;
  }
  Solution s{SolveStatus::Converged, GridFunction(grid, u), c, verdict, {}};
  s.report.iterations = iter;
  s.report.multiplier = 1.0;
  s.report.functional = value;
  detail::finish_report(s, h);
  return s;
}

}  // namespace kw::solvers
