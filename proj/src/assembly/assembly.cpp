#include "kw/assembly.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <ostream>
#include <vector>

#include "kw/error.hpp"
#include "kw/quadrature.hpp"

namespace kw::assembly {

bool SparseOperator::is_symmetric() const
{
  const SparseMatrix t = matrix_.transpose();
  if (t.nonZeros() != matrix_.nonZeros()) return false;
  for (Eigen::Index col = 0; col < matrix_.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix_, col); it; ++it) {
      if (t.coeff(it.row(), it.col()) != it.value()) return false;
    }
  }
  return true;
}

void SparseOperator::write_coordinates(std::ostream& os) const
{
  const auto old = os.precision(17);
  for (Eigen::Index col = 0; col < matrix_.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix_, col); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  os.precision(old);
}

SparseOperator assemble_stiffness(const Grid& grid)
{
  std::vector<Eigen::Triplet<double>> triplets;
  for (EdgeIndex j = 0; j < grid.graph().num_edges(); ++j) {
    const double inv_h = 1.0 / grid.spacing(j);
    for (int i = 0; i < grid.cells(j); ++i) {
      const Dof a = grid.node(j, i);
      const Dof b = grid.node(j, i + 1);
      triplets.emplace_back(a, a, inv_h);
      triplets.emplace_back(b, b, inv_h);
      triplets.emplace_back(a, b, -inv_h);
      triplets.emplace_back(b, a, -inv_h);
    }
  }
  SparseMatrix k(grid.num_dofs(), grid.num_dofs());
  k.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(k));
}

SparseOperator assemble_mass(const Grid& grid)
{
  SparseMatrix m(grid.num_dofs(), grid.num_dofs());
  const auto& w = grid.weights();
  std::vector<Eigen::Triplet<double>> triplets;
  for (Dof i = 0; i < w.size(); ++i) triplets.emplace_back(i, i, w[i]);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(m));
}

Eigen::VectorXd apply_stiffness(const Grid& grid, const Eigen::VectorXd& u)
{
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.num_dofs());
  for (EdgeIndex j = 0; j < grid.graph().num_edges(); ++j) {
    const double inv_h = 1.0 / grid.spacing(j);
    for (int i = 0; i < grid.cells(j); ++i) {
      const Dof a = grid.node(j, i);
      const Dof b = grid.node(j, i + 1);
      const double flux = (u[a] - u[b]) * inv_h;
      out[a] += flux;
      out[b] -= flux;
    }
  }
  return out;
}

ShiftedSolver::ShiftedSolver(const GridFunction& k) : grid_(k.grid())
{
  if (!(k.min() > 0.0)) {
    throw Error(ErrorCode::NonpositiveShift, "shift must be positive, min k = " + std::to_string(k.min()));
  }
  system_ = assemble_stiffness(grid_).matrix();
  const auto& w = grid_.weights();
  for (Dof i = 0; i < w.size(); ++i) system_.coeffRef(i, i) += w[i] * k[i];
  factor_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(system_);
  if (factor_->info() != Eigen::Success) {
    throw Error(ErrorCode::LinearSolveFailure, "LDLT factorization of K + M_k failed");
  }
}

Eigen::VectorXd ShiftedSolver::solve_assembled(const Eigen::VectorXd& b) const
{
  Eigen::VectorXd u = factor_->solve(b);
  if (factor_->info() != Eigen::Success || !u.allFinite()) {
    throw Error(ErrorCode::LinearSolveFailure, "shifted solve failed");
  }
  const Eigen::VectorXd r = system_ * u - b;
  const Eigen::VectorXd scale = system_.cwiseAbs() * u.cwiseAbs() + b.cwiseAbs();
  for (Dof i = 0; i < r.size(); ++i) {
    if (std::abs(r[i]) > 1e-12 * scale[i] + 1e-300) {
      throw Error(ErrorCode::LinearSolveFailure, "shifted solve residual above 1e-12 relative");
    }
  }
  return u;
}

GridFunction ShiftedSolver::solve(const GridFunction& rhs) const
{
  if (!rhs.grid().matches(grid_)) throw Error(ErrorCode::GridMismatch, "solve_shifted: rhs on a different grid");
  const Eigen::VectorXd b = -(grid_.weights().cwiseProduct(rhs.values()));
  return GridFunction(grid_, solve_assembled(b));
}

GridFunction solve_shifted(const GridFunction& k, const GridFunction& rhs)
{
  require_same_grid(k, rhs, "solve_shifted");
  return ShiftedSolver(k).solve(rhs);
}

GridFunction solve_poisson_meanzero(const GridFunction& rhs)
{
  const Grid& grid = rhs.grid();
  const auto& w = grid.weights();
  const double len = grid.graph().total_length();
  const double integral = integrate(rhs);
  const double magnitude = w.dot(rhs.values().cwiseAbs());
  if (std::abs(integral) > 1e-10 * magnitude) {
    throw Error(ErrorCode::IncompatibleRHS, "∫rhs = " + std::to_string(integral) + " is not zero");
  }
  const Eigen::VectorXd projected = rhs.values().array() - integral / len;

  const Dof n = grid.num_dofs();
  std::vector<Eigen::Triplet<double>> triplets;
  const SparseOperator stiffness = assemble_stiffness(grid);
  const SparseMatrix& k = stiffness.matrix();
  for (Eigen::Index col = 0; col < k.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(k, col); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
  }
  for (Dof i = 0; i < n; ++i) {
    triplets.emplace_back(i, n, w[i]);
    triplets.emplace_back(n, i, w[i]);
  }
  SparseMatrix bordered(n + 1, n + 1);
  bordered.setFromTriplets(triplets.begin(), triplets.end());
  bordered.makeCompressed();

  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b.head(n) = -(w.cwiseProduct(projected));

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(bordered);
  if (lu.info() != Eigen::Success) {
    throw Error(ErrorCode::LinearSolveFailure, "factorization of the bordered Poisson system failed");
  }
  const Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw Error(ErrorCode::LinearSolveFailure, "bordered Poisson solve failed");
  }
  return GridFunction(grid, x.head(n));
}

Residual apply_residual(const GridFunction& u, const GridFunction& h, double c)
{
  require_same_grid(u, h, "apply_residual");
  const Grid& grid = u.grid();
  const auto& w = grid.weights();
  Residual out;
  out.weak = apply_stiffness(grid, u.values()) +
             w.cwiseProduct((c - h.values().array() * u.values().array().exp()).matrix());
  out.pointwise = out.weak.cwiseQuotient(w);
  out.weak_residual_norm = out.pointwise.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace kw::assembly
