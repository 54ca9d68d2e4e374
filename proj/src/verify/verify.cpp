#include "kw/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseLU>

#include "kw/assembly.hpp"
#include "kw/error.hpp"
#include "kw/quadrature.hpp"

namespace kw::verify {

IdentityReport identity_report(const GridFunction& u, const GridFunction& h, double c)
{
  require_same_grid(u, h, "identity_report");
  IdentityReport r;
  r.mass_defect = solvers::mass_identity_defect(u, h, c);
  if (c == 0.0) r.energy_defect = solvers::energy_identity_defect(u, h);
  r.weak_residual = assembly::apply_residual(u, h, c).weak_residual_norm;
  return r;
}

GradientCheck fd_gradient_check(solvers::Functional f, const GridFunction& u, const GridFunction& phi, double eps,
                                const GridFunction& h, double c)
{
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  require_same_grid(u, phi, "fd_gradient_check");
  GradientCheck g;
  g.analytic = solvers::functional_gradient(f, u, h, c).dot(phi.values());
  const double plus = solvers::functional_value(f, u + phi * eps, h, c);
  const double minus = solvers::functional_value(f, u - phi * eps, h, c);
  g.finite_difference = (plus - minus) / (2.0 * eps);
  const double scale = std::max(std::abs(g.analytic), std::abs(g.finite_difference));
  g.rel_error = scale > 0.0 ? std::abs(g.analytic - g.finite_difference) / scale : 0.0;
  return g;
}

namespace {

// Flux balance Σ_j ∂_j u(v_i), derivatives pointing into each edge, from the
// one-sided second-order stencil. The allowance is twice the stencil's
// leading error h²/3·|u'''|, with u''' from the first four nodes.
void check_kirchhoff(const GridFunction& u)
{
  const Grid& grid = u.grid();
  const MetricGraph& g = grid.graph();
  std::vector<double> flux(g.num_vertices(), 0.0);
  std::vector<double> allowance(g.num_vertices(), 0.0);
  double scale = 0.0;
  for (EdgeIndex j = 0; j < g.num_edges(); ++j) {
    const int n = grid.cells(j);
    if (n < 3) throw Error(ErrorCode::InvalidArgument, "manufacture needs at least 3 cells per edge");
    const double hj = grid.spacing(j);
    const std::vector<double> t = u.edge_trace(j);
    const double d_tail = (-3.0 * t[0] + 4.0 * t[1] - t[2]) / (2.0 * hj);
    const double d_head = (-3.0 * t[n] + 4.0 * t[n - 1] - t[n - 2]) / (2.0 * hj);
    const double third_tail = std::abs(-t[0] + 3.0 * t[1] - 3.0 * t[2] + t[3]) / hj;
    const double third_head = std::abs(-t[n] + 3.0 * t[n - 1] - 3.0 * t[n - 2] + t[n - 3]) / hj;
    const Edge& e = g.edge(j);
    flux[e.tail] += d_tail;
    flux[e.head] += d_head;
    allowance[e.tail] += 2.0 / 3.0 * third_tail;
    allowance[e.head] += 2.0 / 3.0 * third_head;
    scale = std::max({scale, std::abs(d_tail), std::abs(d_head), u.sup_norm() / e.length});
  }
  for (VertexIndex i = 0; i < g.num_vertices(); ++i) {
    if (std::abs(flux[i]) > allowance[i] + 1e-8 * scale) {
      throw Error(ErrorCode::KirchhoffDefect, "flux sum " + std::to_string(flux[i]) + " at vertex " +
                                                  g.vertex_ids()[i]);
    }
  }
}

}  // namespace

GridFunction manufacture(const GridFunction& u_star, double c)
{
  check_kirchhoff(u_star);
  const Grid& grid = u_star.grid();
  const Eigen::ArrayXd laplacian =
      -assembly::apply_stiffness(grid, u_star.values()).array() / grid.weights().array();
  return GridFunction(grid, ((c - laplacian) * (-u_star.values().array()).exp()).matrix());
}

GridFunction manufacture(const Grid& grid, const EdgeProfile& u_star, const EdgeProfile& u_star_dd, double c)
{
  return sample_function(grid, [&](double s) { return (c - u_star_dd(s)) * std::exp(-u_star(s)); });
}

std::optional<solvers::Solution> oracle_newton(const GridFunction& h, double c, const GridFunction& u0,
                                               const OracleOptions& opts)
{
  require_same_grid(h, u0, "oracle_newton");
  const Grid& grid = h.grid();
  const auto& w = grid.weights();
  const assembly::SparseMatrix k = assembly::assemble_stiffness(grid).matrix();

  auto residual = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd r = assembly::apply_stiffness(grid, u);
    r.array() += w.array() * (c - h.values().array() * u.array().exp());
    return r;
  };
  auto norm = [&](const Eigen::VectorXd& r) { return (r.array() / w.array()).abs().maxCoeff(); };

  Eigen::VectorXd u = u0.values();
  Eigen::VectorXd r = residual(u);
  double rn = norm(r);
  int it = 0;
  for (; rn > opts.tol; ++it) {
    if (it == opts.max_iter || !std::isfinite(rn)) return std::nullopt;
    assembly::SparseMatrix jac = k;
    const Eigen::VectorXd d = w.array() * h.values().array() * u.array().exp();
    for (Dof i = 0; i < u.size(); ++i) jac.coeffRef(i, i) -= d[i];
    Eigen::SparseLU<assembly::SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) return std::nullopt;
    Eigen::VectorXd du = lu.solve(-r);
    if (lu.info() != Eigen::Success || !du.allFinite()) return std::nullopt;
    const double big = du.cwiseAbs().maxCoeff();
    if (big > opts.max_step) du *= opts.max_step / big;

    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Eigen::VectorXd trial = u + t * du;
      const Eigen::VectorXd rt = residual(trial);
      const double nt = norm(rt);
      if (std::isfinite(nt) && nt < (1.0 - 1e-4 * t) * rn) {
        u = trial;
        r = rt;
        rn = nt;
        moved = true;
        break;
      }
    }
    if (!moved) return std::nullopt;
  }

  solvers::Solution s{solvers::SolveStatus::Converged, GridFunction(grid, u), c, solvers::classify(h, c), {}};
  s.report.iterations = it;
  s.report.final_residual = rn;
  s.report.mass_defect = solvers::mass_identity_defect(s.u, h, c);
  if (c == 0.0) s.report.energy_defect = solvers::energy_identity_defect(s.u, h);
  s.report.message = "damped Newton";
  return s;
}

}  // namespace kw::verify
