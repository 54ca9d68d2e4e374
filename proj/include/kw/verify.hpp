#pragma once

// Independent checks of computed solutions: identities, gradient checks of
// the solver functionals, manufactured solutions and a plain Newton oracle.

#include <optional>

#include "kw/solvers.hpp"

namespace kw::verify {

struct IdentityReport {
  double mass_defect{0.0};               // |∫heᵘ − c|Γ||
  std::optional<double> energy_defect;   // c = 0: |∫(∂u)²e^{−u} + ∫h|
  double weak_residual{0.0};
};

/// Throws GridMismatch.
IdentityReport identity_report(const GridFunction& u, const GridFunction& h, double c);

struct GradientCheck {
  double analytic{0.0};
  double finite_difference{0.0};
  double rel_error{0.0};
};

/// Compares gradᵀφ with the central difference (F(u+εφ) − F(u−εφ))/(2ε).
/// h and c parametrize the functional (ignored where unused).
GradientCheck fd_gradient_check(solvers::Functional f, const GridFunction& u, const GridFunction& phi, double eps,
                                const GridFunction& h, double c);

/// h = (c − ∂²u*)·e^{−u*} with the discrete Laplacian −M⁻¹K, so that u* solves
/// the discrete problem exactly. Throws KirchhoffDefect when u* violates the
/// vertex flux balance beyond its own truncation error, InvalidArgument when
/// an edge has fewer than 3 cells.
GridFunction manufacture(const GridFunction& u_star, double c);

/// h = (c − u*'')·e^{−u*} sampled from closed forms on every edge; the
/// discrete solution then differs from u* by the discretization error.
GridFunction manufacture(const Grid& grid, const EdgeProfile& u_star, const EdgeProfile& u_star_dd, double c);

struct OracleOptions {
  double tol{1e-10};
  int max_iter{200};
  /// Cap on ‖δu‖∞ per Newton step.
  double max_step{2.0};
};

/// Damped Newton on K·u + c·M·1 − M(h⊙eᵘ) = 0 from u0 with a backtracking
/// line search. Returns nothing when it diverges or stalls.
std::optional<solvers::Solution> oracle_newton(const GridFunction& h, double c, const GridFunction& u0,
                                               const OracleOptions& opts = {});

}  // namespace kw::verify
