#pragma once

// Helpers shared by the solver translation units.

#include <optional>

#include "kw/assembly.hpp"
#include "kw/solvers.hpp"

namespace kw::solvers::detail {

/// Relative threshold below which values of h count as zero in sign tests.
inline constexpr double kSignTolerance = 1e-12;

double weak_residual(const GridFunction& u, const GridFunction& h, double c);

/// Smooth bump on the edge where h has its largest interior value: 1 on the
/// middle half of a subinterval where h > max h / 2, cubic smoothstep down to
/// 0 at its ends. Vanishes at every vertex. Throws FeasibilityFailure when h
/// is not positive at any interior node.
GridFunction make_bump(const GridFunction& h);

/// Fills iterations-independent report fields (residual, identities).
void finish_report(Solution& s, const GridFunction& h);

Solution failure(SolveStatus status, const GridFunction& u, double c, const SolvabilityVerdict& verdict,
                 std::string message);

/// Newton's method on K·u + c·M·1 − M(h⊙eᵘ) = 0 from u0 with a backtracking
/// line search on the residual. Returns nothing when it does not converge.
struct NewtonResult {
  GridFunction u;
  int iterations{0};
  double residual{0.0};
};
std::optional<NewtonResult> newton(const GridFunction& h, double c, const GridFunction& u0, double tol, int max_iter,
                                   double max_step = 0.0);

/// Natural-parameter continuation in c from a solved anchor down (or up) to
/// c_target, with a tangent predictor and step halving. Returns the solution
/// at c_target, or nothing when the branch cannot be followed (typically at
/// a fold).
std::optional<GridFunction> continue_in_c(const GridFunction& h, const Anchor& anchor, double c_target,
                                          double min_step);

}  // namespace kw::solvers::detail
