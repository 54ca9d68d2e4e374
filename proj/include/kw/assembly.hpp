#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <memory>

#include "kw/grid.hpp"

namespace kw::assembly {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric sparse operator over the DOFs of a grid.
class SparseOperator {
public:
  explicit SparseOperator(SparseMatrix matrix) : matrix_(std::move(matrix)) { matrix_.makeCompressed(); }

  Eigen::Index dimension() const noexcept { return matrix_.rows(); }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix_ * x; }
  double entry(Eigen::Index i, Eigen::Index j) const { return matrix_.coeff(i, j); }

  /// Exact (bitwise) symmetry of the stored coefficients.
  bool is_symmetric() const;

  /// One "row col value" line per stored nonzero, 0-based.
  void write_coordinates(std::ostream& os) const;

private:
  SparseMatrix matrix_;
};

/// P1 stiffness: per edge, the tridiagonal block (1/h_j)[[1,-1],[-1,1]] per
/// cell accumulated into shared vertex DOFs. uᵀKu = ∫|∂u|²; Kirchhoff is the
/// natural condition of this form.
SparseOperator assemble_stiffness(const Grid& grid);

/// Lumped mass: diag(trapezoid weights).
SparseOperator assemble_mass(const Grid& grid);

/// K·u computed cell by cell from differences, so constants map to exactly
/// zero and near-constant inputs do not pick up O(|u|/h) rounding.
Eigen::VectorXd apply_stiffness(const Grid& grid, const Eigen::VectorXd& u);

/// Factorization of K + M_k for a fixed shift k >= k0 > 0, reusable across
/// right-hand sides. Solves ∂²u − k·u = rhs weakly with Kirchhoff conditions,
/// i.e. (K + M_k)u = −M·rhs.
class ShiftedSolver {
public:
  /// Throws NonpositiveShift if min k <= 0, LinearSolveFailure if the
  /// factorization fails.
  explicit ShiftedSolver(const GridFunction& k);

  const Grid& grid() const noexcept { return grid_; }

  /// Throws GridMismatch, LinearSolveFailure (including a residual check at
  /// 1e-12 relative).
  GridFunction solve(const GridFunction& rhs) const;

  /// Solves (K + M_k)u = b for an assembled right-hand side b.
  Eigen::VectorXd solve_assembled(const Eigen::VectorXd& b) const;

  /// (K + M_k)x.
  Eigen::VectorXd apply_assembled(const Eigen::VectorXd& x) const { return system_ * x; }

private:
  Grid grid_;
  SparseMatrix system_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> factor_;
};

/// One-shot ShiftedSolver(k).solve(rhs).
GridFunction solve_shifted(const GridFunction& k, const GridFunction& rhs);

/// Unique mean-zero m with ∂²m = rhs weakly (K·m = −M·rhs), computed on the
/// bordered system [[K, M1], [1ᵀM, 0]]. rhs is projected onto mean zero
/// first. Throws IncompatibleRHS when |∫rhs| > 1e-10·(∫|rhs|), and
/// LinearSolveFailure.
GridFunction solve_poisson_meanzero(const GridFunction& rhs);

struct Residual {
  /// max_i |r_i| / w_i, a pointwise PDE defect.
  double weak_residual_norm{0.0};
  /// r = K·u + c·M·1 − M·(h⊙e^u).
  Eigen::VectorXd weak;
  /// r_i / w_i.
  Eigen::VectorXd pointwise;
};

/// Residual of the discrete weak form of ∂²u = c − h·e^u. Throws GridMismatch.
Residual apply_residual(const GridFunction& u, const GridFunction& h, double c);

}  // namespace kw::assembly
