#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "detail.hpp"
#include "kw/error.hpp"
#include "kw/quadrature.hpp"

namespace kw::solvers {

std::string_view to_string(VerdictStatus status) noexcept
{
  return status == VerdictStatus::NecessaryOK ? "NecessaryOK" : "Violates";
}

std::string_view to_string(VerdictReason reason) noexcept
{
  switch (reason) {
    case VerdictReason::None: return "none";
    case VerdictReason::HZeroEverywhere: return "HZeroEverywhere";
    case VerdictReason::HDoesNotChangeSign: return "HDoesNotChangeSign";
    case VerdictReason::IntegralHNonneg: return "IntegralHNonneg";
    case VerdictReason::HNowherePositive: return "HNowherePositive";
  }
  return "unknown";
}

std::string_view to_string(SolveStatus status) noexcept
{
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::NotSolvable: return "NotSolvable";
    case SolveStatus::NoConvergence: return "NoConvergence";
    case SolveStatus::NoUpperSolutionFound: return "NoUpperSolutionFound";
    case SolveStatus::BoundBlowup: return "BoundBlowup";
  }
  return "unknown";
}

std::string_view to_string(Functional f) noexcept
{
  switch (f) {
    case Functional::JZero: return "J_zero";
    case Functional::JPositive: return "J_positive";
    case Functional::IK: return "I_k";
  }
  return "unknown";
}

SolvabilityVerdict classify(const GridFunction& h, double c)
{
  SolvabilityVerdict v;
  v.integral_h = integrate(h);
  v.max_h = h.max();
  v.min_h = h.min();

  const double sup = h.sup_norm();
  const double tiny = detail::kSignTolerance * sup;
  const bool positive_somewhere = v.max_h > tiny;
  const bool negative_somewhere = v.min_h < -tiny;
  const double abs_integral = h.grid().weights().dot(h.values().cwiseAbs());
  const bool integral_negative = v.integral_h < -detail::kSignTolerance * abs_integral;

  auto violates = [&](VerdictReason r) {
    v.status = VerdictStatus::Violates;
    v.reason = r;
    return v;
  };

  if (c == 0.0) {
    if (sup == 0.0) return violates(VerdictReason::HZeroEverywhere);
    if (!(positive_somewhere && negative_somewhere)) return violates(VerdictReason::HDoesNotChangeSign);
    if (!integral_negative) return violates(VerdictReason::IntegralHNonneg);
  } else if (c > 0.0) {
    if (!positive_somewhere) return violates(VerdictReason::HNowherePositive);
  } else {
    if (!integral_negative) return violates(VerdictReason::IntegralHNonneg);
  }
  return v;
}

double functional_value(Functional f, const GridFunction& u, const GridFunction& h, double c)
{
  require_same_grid(u, h, "functional_value");
  double value = 0.5 * dirichlet_energy(u);
  if (f == Functional::JZero) return value;
  value += c * integrate(u);
  if (f == Functional::JPositive) return value;
  const auto& w = u.grid().weights();
  return value - w.dot((h.values().array() * u.values().array().exp()).matrix());
}

Eigen::VectorXd functional_gradient(Functional f, const GridFunction& u, const GridFunction& h, double c)
{
  require_same_grid(u, h, "functional_gradient");
  const auto& w = u.grid().weights();
  Eigen::VectorXd g = assembly::apply_stiffness(u.grid(), u.values());
  if (f == Functional::JZero) return g;
  g += c * w;
  if (f == Functional::JPositive) return g;
  g.array() -= w.array() * h.values().array() * u.values().array().exp();
  return g;
}

double mass_identity_defect(const GridFunction& u, const GridFunction& h, double c)
{
  require_same_grid(u, h, "mass_identity_defect");
  const auto& w = u.grid().weights();
  const double mass = w.dot((h.values().array() * u.values().array().exp()).matrix());
  return std::abs(mass - c * u.grid().graph().total_length());
}

double energy_identity_defect(const GridFunction& u, const GridFunction& h)
{
  require_same_grid(u, h, "energy_identity_defect");
  const Grid& grid = u.grid();
  double weighted = 0.0;
  for (EdgeIndex j = 0; j < grid.graph().num_edges(); ++j) {
    const double hj = grid.spacing(j);
    for (int i = 0; i < grid.cells(j); ++i) {
      const double ul = u[grid.node(j, i)];
      const double ur = u[grid.node(j, i + 1)];
      // cell average of e^{−u} for linear u, exact for the interpolant
      const double d = ur - ul;
      const double avg = d == 0.0 ? std::exp(-ul) : std::exp(-ul) * -std::expm1(-d) / d;
      weighted += avg * d * d / hj;
    }
  }
  return std::abs(weighted + integrate(h));
}

Solution solve(const KWProblem& problem, const SolveOptions& opts)
{
  if (problem.c == 0.0) return solve_zero(problem.h, opts);
  if (problem.c > 0.0) return solve_positive(problem.h, problem.c, opts);
  return solve_negative(problem.h, problem.c, opts);
}

namespace detail {

namespace {

Eigen::VectorXd residual_vector(const Grid& grid, const Eigen::VectorXd& u, const Eigen::VectorXd& h, double c)
{
  const auto& w = grid.weights();
  Eigen::VectorXd r = assembly::apply_stiffness(grid, u);
  r.array() += w.array() * (c - h.array() * u.array().exp());
  return r;
}

double pointwise_norm(const Grid& grid, const Eigen::VectorXd& r)
{
  return (r.array() / grid.weights().array()).abs().maxCoeff();
}

// J = K − M diag(h eᵘ)
assembly::SparseMatrix jacobian(const assembly::SparseMatrix& k, const Grid& grid, const Eigen::VectorXd& u,
                                const Eigen::VectorXd& h)
{
  assembly::SparseMatrix j = k;
  const Eigen::VectorXd d = grid.weights().array() * h.array() * u.array().exp();
  for (Dof i = 0; i < u.size(); ++i) j.coeffRef(i, i) -= d[i];
  return j;
}

using LU = Eigen::SparseLU<assembly::SparseMatrix, Eigen::COLAMDOrdering<int>>;

}  // namespace

double weak_residual(const GridFunction& u, const GridFunction& h, double c)
{
  return assembly::apply_residual(u, h, c).weak_residual_norm;
}

GridFunction make_bump(const GridFunction& h)
{
  const Grid& grid = h.grid();
  const MetricGraph& graph = grid.graph();

  double peak = -std::numeric_limits<double>::infinity();
  EdgeIndex edge = 0;
  int at = -1;
  for (EdgeIndex j = 0; j < graph.num_edges(); ++j) {
    for (int i = 1; i < grid.cells(j); ++i) {
      const double v = h[grid.node(j, i)];
      if (v > peak) {
        peak = v;
        edge = j;
        at = i;
      }
    }
  }
  if (at < 0 || !(peak > kSignTolerance * h.sup_norm()) || peak <= 0.0) {
    throw Error(ErrorCode::FeasibilityFailure, "h is not positive at any interior grid node");
  }

  const int n = grid.cells(edge);
  const double step = grid.spacing(edge);
  const double len = graph.edge(edge).length;
  int left = at - 1;
  while (left > 0 && h[grid.node(edge, left)] > 0.5 * peak) --left;
  int right = at + 1;
  while (right < n && h[grid.node(edge, right)] > 0.5 * peak) ++right;

  double sa = left * step;
  double sb = right * step;
  if (sb - sa > 0.5 * len) {
    const double centre = std::clamp(at * step, sa + 0.25 * len, sb - 0.25 * len);
    sa = centre - 0.25 * len;
    sb = centre + 0.25 * len;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(grid.num_dofs());
  for (int i = 1; i < n; ++i) {
    const double t = (i * step - sa) / (sb - sa);
    if (t <= 0.0 || t >= 1.0) continue;
    const double x = std::min({1.0, 4.0 * t, 4.0 * (1.0 - t)});
    w[grid.node(edge, i)] = x * x * (3.0 - 2.0 * x);
  }
  return GridFunction(grid, w);
}

void finish_report(Solution& s, const GridFunction& h)
{
  s.report.final_residual = weak_residual(s.u, h, s.c);
  s.report.mass_defect = mass_identity_defect(s.u, h, s.c);
  if (s.c == 0.0) s.report.energy_defect = energy_identity_defect(s.u, h);
}

Solution failure(SolveStatus status, const GridFunction& u, double c, const SolvabilityVerdict& verdict,
                 std::string message)
{
  Solution s{status, u, c, verdict, {}};
  s.report.message = std::move(message);
  s.report.final_residual = std::numeric_limits<double>::infinity();
  return s;
}

std::optional<NewtonResult> newton(const GridFunction& h, double c, const GridFunction& u0, double tol, int max_iter,
                                   double max_step)
{
  require_same_grid(u0, h, "newton");
  const Grid& grid = h.grid();
  const assembly::SparseOperator k = assembly::assemble_stiffness(grid);
  const Eigen::VectorXd& hv = h.values();

  Eigen::VectorXd u = u0.values();
  Eigen::VectorXd r = residual_vector(grid, u, hv, c);
  double norm = pointwise_norm(grid, r);
  for (int it = 0; it <= max_iter; ++it) {
    if (!std::isfinite(norm)) return std::nullopt;
    if (norm <= tol) return NewtonResult{GridFunction(grid, u), it, norm};
    if (it == max_iter) break;

    LU lu;
    lu.compute(jacobian(k.matrix(), grid, u, hv));
    if (lu.info() != Eigen::Success) return std::nullopt;
    Eigen::VectorXd du = lu.solve(-r);
    if (lu.info() != Eigen::Success || !du.allFinite()) return std::nullopt;
    if (max_step > 0.0) {
      const double big = du.cwiseAbs().maxCoeff();
      if (big > max_step) du *= max_step / big;
    }

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = u + t * du;
      const Eigen::VectorXd rt = residual_vector(grid, trial, hv, c);
      const double nt = pointwise_norm(grid, rt);
      if (std::isfinite(nt) && nt <= (1.0 - 1e-4 * t) * norm) {
        u = trial;
        r = rt;
        norm = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // at round-off level the line search cannot make progress
      return norm <= 10.0 * tol ? std::optional<NewtonResult>(NewtonResult{GridFunction(grid, u), it, norm})
                                : std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<GridFunction> continue_in_c(const GridFunction& h, const Anchor& anchor, double c_target,
                                          double min_step)
{
  const Grid& grid = h.grid();
  const assembly::SparseOperator k = assembly::assemble_stiffness(grid);
  const auto& w = grid.weights();

  // The branch followed is the one of maximal (linearly stable) solutions,
  // where J = K − M diag(heᵘ) is positive definite; the LDLT pivots tell.
  using LDLT = Eigen::SimplicialLDLT<assembly::SparseMatrix>;
  auto stable_factor = [&](const GridFunction& u) -> std::unique_ptr<LDLT> {
    auto ldlt = std::make_unique<LDLT>(jacobian(k.matrix(), grid, u.values(), h.values()));
    if (ldlt->info() != Eigen::Success || !(ldlt->vectorD().minCoeff() > 0.0)) return nullptr;
    return ldlt;
  };

  double c = anchor.c;
  GridFunction u = anchor.u;
  auto factor = stable_factor(u);
  if (!factor) return std::nullopt;
  double step = c_target - c;
  while (c != c_target) {
    if (std::abs(c_target - c) < std::abs(step) || std::abs(c_target - c - step) < min_step) step = c_target - c;
    const double c_next = c + step;

    // tangent: J du/dc = −M·1
    const Eigen::VectorXd predictor = u.values() + step * factor->solve(-w);
    const double tol = 1e-11 * (1.0 + std::abs(c_next) + h.sup_norm() * std::exp(std::min(u.max(), 700.0)));
    std::optional<NewtonResult> corrected;
    if (predictor.allFinite()) corrected = newton(h, c_next, GridFunction(grid, predictor), tol, 15);
    std::unique_ptr<LDLT> next_factor;
    if (corrected) next_factor = stable_factor(corrected->u);
    if (next_factor) {
      c = c_next;
      u = corrected->u;
      factor = std::move(next_factor);
      step *= 2.0;
    } else {
      step *= 0.5;
      if (std::abs(step) < min_step) return std::nullopt;
    }
  }
  return u;
}

}  // namespace detail

}  // namespace kw::solvers
