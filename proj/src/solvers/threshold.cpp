// Bracketing of the solvability threshold c(h) and the critical-case
// sequence of box-constrained minimizations.

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "kw/error.hpp"
#include "kw/quadrature.hpp"

namespace kw::solvers {

ThresholdEstimate estimate_threshold(const GridFunction& h, const ThresholdOptions& opts)
{
  const UpperSolutionParams params = build_upper(h);  // throws IntegralNotNegative
  ThresholdEstimate est;
  est.analytic_upper_bound = params.implied_c;
  est.c_hi = params.implied_c;

  if (h.max() <= detail::kSignTolerance * h.sup_norm()) {
    est.minus_infinity = true;
    est.c_lo = -std::numeric_limits<double>::infinity();
    return est;
  }

  est.bracket_tol = opts.bracket_tol > 0.0 ? opts.bracket_tol : 1e-4 * std::abs(est.c_hi);
  const Solution top = solve_negative(h, est.c_hi, opts.solve);
  ++est.probes;
  if (!top.converged()) {
    throw Error(ErrorCode::NotAdmissible, "no solution found at the analytic bound c = " + std::to_string(est.c_hi));
  }
  Anchor anchor{est.c_hi, top.u};

  est.c_lo = 2.0 * est.c_hi;
  for (int d = 0;; ++d) {
    if (d == opts.max_doublings) {
      throw Error(ErrorCode::NotAdmissible, "solutions found down to c = " + std::to_string(est.c_lo));
    }
    const Solution s = solve_negative(h, est.c_lo, opts.solve, anchor);
    ++est.probes;
    if (!s.converged()) break;
    anchor = Anchor{est.c_lo, s.u};
    est.c_hi = est.c_lo;
    est.c_lo *= 2.0;
  }

  while (est.c_hi - est.c_lo > est.bracket_tol) {
    const double mid = est.midpoint();
    const Solution s = solve_negative(h, mid, opts.solve, anchor);
    ++est.probes;
    if (s.converged()) {
      anchor = Anchor{mid, s.u};
      est.c_hi = mid;
    } else {
      est.c_lo = mid;
    }
  }
  est.u_hi = anchor.u;
  return est;
}

namespace {

struct BoxResult {
  GridFunction u;
  int iterations{0};
  double residual{0.0};
  bool converged{false};
};

// Minimizes ℐ_k(u) = ½∫|∂u|² + c∫u − ∫heᵘ over lo ≤ u ≤ hi from hi, by
// H¹-preconditioned gradient steps followed by clamping, with Armijo
// backtracking along the projected arc.
BoxResult minimize_box(const GridFunction& h, double c, const GridFunction& lo, const GridFunction& hi,
                       const CriticalOptions& opts)
{
  const Grid& grid = h.grid();
  const auto& w = grid.weights();
  const assembly::ShiftedSolver riesz(GridFunction::constant(grid, 1.0));

  GridFunction u = hi;
  double value = functional_value(Functional::IK, u, h, c);
  BoxResult out{u, 0, std::numeric_limits<double>::infinity(), false};
  for (int it = 0;; ++it) {
    const Eigen::VectorXd g = functional_gradient(Functional::IK, u, h, c);
    out.residual = (g.array() / w.array()).abs().maxCoeff();
    out.iterations = it;
    if (out.residual <= opts.tol) {
      out.converged = true;
      break;
    }
    if (it == opts.max_iter) break;

    const Eigen::VectorXd d = -riesz.solve_assembled(g);
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = (u.values() + t * d).cwiseMax(lo.values()).cwiseMin(hi.values());
      const GridFunction ut(grid, trial);
      const double tv = functional_value(Functional::IK, ut, h, c);
      const double predicted = g.dot(trial - u.values());
      if (tv <= value + 1e-4 * predicted + 10.0 * std::numeric_limits<double>::epsilon() * std::abs(value)) {
        u = ut;
        value = tv;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.u = u;
  return out;
}

}  // namespace

Solution solve_critical(const GridFunction& h, const ThresholdEstimate& estimate, const CriticalOptions& opts)
{
  if (estimate.minus_infinity) {
    throw Error(ErrorCode::InvalidArgument, "threshold is −∞ (h ≤ 0); there is no critical case");
  }
  const Grid& grid = h.grid();
  const double mid = estimate.midpoint();
  const double top = estimate.c_hi;
  const SolveOptions inner{opts.tol, 5000, 500, 0.0};

  std::optional<Anchor> anchor;
  if (estimate.u_hi && estimate.u_hi->grid() == grid) anchor = Anchor{top, *estimate.u_hi};

  auto level_c = [&](int k) { return top - (top - mid) * (1.0 - std::ldexp(1.0, -k)); };

  std::optional<GridFunction> last;
  double last_c = top;
  std::vector<CriticalLevel> levels;
  std::string message;
  SolveStatus status = SolveStatus::Converged;
  for (int k = 1; k <= opts.k_max; ++k) {
    CriticalLevel level;
    level.c = level_c(k);
    level.c_upper = 0.5 * (level.c + level_c(k + 1));

    const Solution psi = solve_negative(h, level.c_upper, inner, anchor);
    if (!psi.converged()) {
      message = "sequence stopped at k = " + std::to_string(k) + ": no solution at c = " +
                std::to_string(level.c_upper);
      break;
    }
    anchor = Anchor{level.c_upper, psi.u};

    GridFunction lower = build_lower(h, level.c, -0.5 * level.c);
    if (lower.max() > psi.u.min()) lower = GridFunction::constant(grid, psi.u.min() - 1.0);

    const BoxResult box = minimize_box(h, level.c, lower, psi.u, opts);
    level.iterations = box.iterations;
    level.residual = box.residual;
    level.h1_norm = h1_norm(box.u);
    level.h1_bound = 2.0 * (functional_value(Functional::IK, lower, h, level.c) - level.c * integrate(psi.u) +
                            h.sup_norm() * integrate(GridFunction(grid, psi.u.values().array().exp().matrix())));
    levels.push_back(level);
    if (!box.converged) {
      status = SolveStatus::NoConvergence;
      message = "box minimization at k = " + std::to_string(k) + " stopped with residual " +
                std::to_string(box.residual);
      last = box.u;
      last_c = level.c;
      break;
    }
    last = box.u;
    last_c = level.c;
  }

  SolvabilityVerdict verdict = classify(h, last_c);
  if (!last) {
    Solution s = detail::failure(SolveStatus::NoUpperSolutionFound, GridFunction::zero(grid), last_c, verdict,
                                 message.empty() ? "no level could be solved" : message);
    s.report.critical_levels = levels;
    return s;
  }

  Solution s{status, *last, last_c, verdict, {}};
  s.report.critical_levels = levels;
  for (const auto& l : levels) s.report.iterations += l.iterations;
  s.report.final_residual = detail::weak_residual(s.u, h, last_c);
  s.report.functional = functional_value(Functional::IK, s.u, h, last_c);
  // identity at the bracket midpoint, the estimate of c(h)
  s.report.mass_defect = mass_identity_defect(s.u, h, mid);
  s.report.message = message;

  if (status == SolveStatus::Converged && levels.size() > 1) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& l : levels) {
      lo = std::min(lo, l.h1_norm);
      hi = std::max(hi, l.h1_norm);
    }
    if (hi > opts.blowup_ratio * lo) {
      s.status = SolveStatus::BoundBlowup;
      s.report.message = "H¹ norms grow by a factor " + std::to_string(hi / lo) + " across levels";
    }
  }
  return s;
}

}  // namespace kw::solvers
