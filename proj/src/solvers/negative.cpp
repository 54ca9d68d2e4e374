// c < 0: constant lower solutions, the two upper-solution constructions,
// monotone iteration between them, and the continuation fallback used below
// the analytic bound.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "detail.hpp"
#include "kw/error.hpp"
#include "kw/quadrature.hpp"

namespace kw::solvers {

namespace {

void require_negative_integral(const GridFunction& h)
{
  const double integral = integrate(h);
  const double magnitude = h.grid().weights().dot(h.values().cwiseAbs());
  if (!(integral < -detail::kSignTolerance * magnitude)) {
    throw Error(ErrorCode::IntegralNotNegative, "∫h = " + std::to_string(integral));
  }
}

// Mean-zero m with ∂²m = mean(h) − h; exactly zero when h is constant up to
// round-off (the compatibility test of the Poisson solve is meaningless then).
GridFunction auxiliary(const GridFunction& h)
{
  const double mean = integrate(h) / h.grid().graph().total_length();
  const GridFunction rhs = h * -1.0 + mean;
  if (rhs.sup_norm() <= 1e-13 * h.sup_norm()) return GridFunction::zero(h.grid());
  return assembly::solve_poisson_meanzero(rhs);
}

// m is numerically zero when h is constant up to round-off.
bool negligible(const GridFunction& m, const GridFunction& h)
{
  const double len = h.grid().graph().total_length();
  return m.sup_norm() <= 1e-12 * h.sup_norm() * len * len;
}

// Pointwise residual scale used to judge the sign of R(u) near round-off.
double residual_slack(const GridFunction& u, const GridFunction& h, double c)
{
  const Grid& grid = u.grid();
  const double stiff = (assembly::apply_stiffness(grid, u.values()).array() / grid.weights().array()).abs().maxCoeff();
  const double source = (h.values().array() * u.values().array().exp()).abs().maxCoeff();
  return 1e-9 * (1.0 + std::abs(c) + source + stiff);
}

}  // namespace

GridFunction build_lower(const GridFunction& h, double c, double delta)
{
  if (!(c < 0.0)) throw Error(ErrorCode::InvalidArgument, "build_lower needs c < 0");
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "margin must be positive");
  if (delta >= -c) {
    throw Error(ErrorCode::MarginTooLarge, "margin " + std::to_string(delta) + " is not below −c = " + std::to_string(-c));
  }
  const double sup = h.sup_norm();
  const double a = sup > 0.0 ? std::max(0.0, std::log(sup / (-c - delta))) : 0.0;
  return GridFunction::constant(h.grid(), -a);
}

UpperSolutionParams build_upper(const GridFunction& h)
{
  require_negative_integral(h);
  const double mean = integrate(h) / h.grid().graph().total_length();
  GridFunction m = auxiliary(h);
  const double rho = -mean / (2.0 * h.sup_norm());

  double a = 1.0;
  if (!negligible(m, h)) {
    // largest a with |e^{a·m} − 1| ≤ ρ, one side at a time
    a = std::min(std::log1p(rho) / std::max(m.max(), 0.0), -std::log1p(-rho) / std::max(-m.min(), 0.0));
  } else {
    m = GridFunction::zero(h.grid());
  }
  return UpperSolutionParams{m, a, std::log(a), 0.5 * a * mean, rho};
}

GridFunction build_upper_hneg(const GridFunction& h, double c)
{
  if (!(c < 0.0)) throw Error(ErrorCode::InvalidArgument, "build_upper_hneg needs c < 0");
  if (h.max() > detail::kSignTolerance * h.sup_norm()) {
    throw Error(ErrorCode::HNotNonpositive, "max h = " + std::to_string(h.max()));
  }
  require_negative_integral(h);
  const double mean = integrate(h) / h.grid().graph().total_length();
  GridFunction m = auxiliary(h);
  if (negligible(m, h)) m = GridFunction::zero(h.grid());
  // a·mean(h) = 2c < c, and e^{am+b} ≥ a·e > a
  const double a = 2.0 * c / mean;
  const double b = std::log(a) + a * m.sup_norm() + 1.0;
  return m * a + b;
}

Solution monotone_iterate(const GridFunction& h, double c, const GridFunction& u_minus, const GridFunction& u_plus,
                          const MonotoneOptions& opts)
{
  if (!(c < 0.0)) throw Error(ErrorCode::InvalidArgument, "monotone_iterate needs c < 0");
  require_same_grid(h, u_minus, "monotone_iterate");
  require_same_grid(h, u_plus, "monotone_iterate");
  const Grid& grid = h.grid();
  const auto& w = grid.weights();
  const Eigen::VectorXd& hv = h.values();
  const Eigen::VectorXd& lower = u_minus.values();
  const Eigen::VectorXd& upper = u_plus.values();

  const double order_scale = 1e-12 * std::max(1.0, std::max(u_minus.sup_norm(), u_plus.sup_norm()));
  if ((lower - upper).maxCoeff() > order_scale) throw Error(ErrorCode::NotAdmissible, "u₋ ≤ u₊ fails");
  const auto r_minus = assembly::apply_residual(u_minus, h, c);
  if (r_minus.pointwise.maxCoeff() > residual_slack(u_minus, h, c)) {
    throw Error(ErrorCode::NotAdmissible, "u₋ is not a lower solution");
  }
  const auto r_plus = assembly::apply_residual(u_plus, h, c);
  if (r_plus.pointwise.minCoeff() < -residual_slack(u_plus, h, c)) {
    throw Error(ErrorCode::NotAdmissible, "u₊ is not an upper solution");
  }

  const double step_tol = opts.step_tol > 0.0 ? opts.step_tol : opts.tol;
  const Eigen::ArrayXd k1 = (-hv.array()).max(1.0);
  Solution s{SolveStatus::NoConvergence, u_plus, c, classify(h, c), {}};
  Eigen::VectorXd u = upper;
  double residual = r_plus.weak_residual_norm;

  auto run = [&](bool adaptive) {
    std::unique_ptr<assembly::ShiftedSolver> frozen;
    if (!adaptive) frozen = std::make_unique<assembly::ShiftedSolver>(GridFunction(grid, k1 * upper.array().exp()));
    for (int n = 0; n < opts.max_iter; ++n) {
      const Eigen::ArrayXd k = adaptive ? Eigen::ArrayXd(k1 * u.array().exp()) : k1 * upper.array().exp();
      const Eigen::VectorXd b = (w.array() * (k * u.array() - c + hv.array() * u.array().exp())).matrix();
      const Eigen::VectorXd next =
          adaptive ? assembly::ShiftedSolver(GridFunction(grid, k.matrix())).solve_assembled(b) : frozen->solve_assembled(b);

      MonotoneStep step;
      step.step = (next - u).cwiseAbs().maxCoeff();
      step.min_decrease = (u - next).minCoeff();
      step.min_above_lower = (next - lower).minCoeff();
      step.min_below_upper = (upper - next).minCoeff();
      step.adaptive_shift = adaptive;
      const GridFunction un(grid, next);
      step.residual = detail::weak_residual(un, h, c);
      s.report.monotone_history.push_back(step);

      const double slack = 1e-12 * std::max(1.0, next.cwiseAbs().maxCoeff());
      if (step.min_decrease < -slack || step.min_above_lower < -slack || step.min_below_upper < -slack) {
        throw Error(ErrorCode::OrderingViolated, "iterate " + std::to_string(s.report.monotone_history.size()) +
                                                     " leaves u₋ ≤ u_{n+1} ≤ u_n ≤ u₊");
      }
      u = next;
      residual = step.residual;
      if (step.step <= step_tol && residual <= opts.tol) return true;
      // stagnation: the iterate no longer moves
      if (step.step <= 1e-15 * std::max(1.0, u.cwiseAbs().maxCoeff())) return residual <= opts.tol;
    }
    return false;
  };

  bool done = run(false);
  if (!done && opts.adaptive_fallback) done = run(true);

  s.u = GridFunction(grid, u);
  s.report.iterations = static_cast<int>(s.report.monotone_history.size());
  if (!done) {
    s.report.final_residual = residual;
    s.report.message = "monotone iteration did not reach the tolerance";
    return s;
  }
  s.status = SolveStatus::Converged;
  detail::finish_report(s, h);
  return s;
}

Solution solve_negative(const GridFunction& h, double c, const SolveOptions& opts, const std::optional<Anchor>& anchor)
{
  if (!(c < 0.0)) throw Error(ErrorCode::InvalidArgument, "solve_negative needs c < 0");
  const SolvabilityVerdict verdict = classify(h, c);
  const Grid& grid = h.grid();
  if (!verdict.ok()) {
    return detail::failure(SolveStatus::NotSolvable, GridFunction::zero(grid), c, verdict,
                           std::string("necessary condition fails: ") + std::string(to_string(verdict.reason)));
  }
  const MonotoneOptions mono{opts.tol, opts.monotone_step_tol, opts.monotone_max_iter, true};

  std::optional<GridFunction> upper;
  std::string how;
  if (h.max() <= detail::kSignTolerance * h.sup_norm()) {
    upper = build_upper_hneg(h, c);
    how = "upper solution from the h ≤ 0 construction";
  } else {
    const UpperSolutionParams params = build_upper(h);
    if (c >= params.implied_c) {
      upper = params.upper();
      how = "upper solution a·m + b";
    } else {
      std::optional<Anchor> start = anchor;
      if (start && !(start->c >= c)) start.reset();
      if (!start) {
        const double c0 = params.implied_c;
        GridFunction lo = build_lower(h, c0, -0.5 * c0);
        const GridFunction up = params.upper();
        if (lo.max() > up.min()) lo = GridFunction::constant(grid, up.min() - 1.0);
        const Solution base = monotone_iterate(h, c0, lo, up, mono);
        if (!base.converged()) return base;
        start = Anchor{c0, base.u};
      }
      // a solution slightly below c is a strict upper solution at c
      const double eta = 1e-9 * std::max(1.0, std::abs(c));
      const auto psi = detail::continue_in_c(h, *start, c - eta, 1e-9 * std::max(1.0, std::abs(c)));
      if (!psi) {
        return detail::failure(SolveStatus::NoUpperSolutionFound, start->u, c, verdict,
                               "continuation from c = " + std::to_string(start->c) +
                                   " did not reach the requested c; likely below the solvability threshold");
      }
      upper = *psi;
      how = "upper solution from continuation in c";
    }
  }

  GridFunction lower = build_lower(h, c, -0.5 * c);
  if (lower.max() > upper->min()) lower = GridFunction::constant(grid, upper->min() - 1.0);
  Solution s = monotone_iterate(h, c, lower, *upper, mono);
  s.verdict = verdict;
  s.report.message = s.converged() ? how : how + "; " + s.report.message;
  return s;
}

}  // namespace kw::solvers
