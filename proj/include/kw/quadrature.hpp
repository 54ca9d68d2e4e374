#pragma once

#include "kw/grid.hpp"

namespace kw {

/// Edge-wise trapezoid rule; exact for edge-wise linear functions.
double integrate(const GridFunction& f);

/// ∫|∂f|² of the piecewise-linear interpolant, Σ_j Σ_cells (Δf)² / h_j.
double dirichlet_energy(const GridFunction& f);

struct Norms {
  double l2{0.0};
  double h1_seminorm{0.0};
  double sup{0.0};
  double mean{0.0};
};

Norms norms(const GridFunction& f);

/// Full H¹ norm, sqrt(‖f‖₂² + ‖∂f‖₂²).
double h1_norm(const GridFunction& f);

}  // namespace kw
