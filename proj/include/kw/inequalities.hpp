#pragma once

#include "kw/grid.hpp"

namespace kw {

/// Both Poincaré-type bounds for a mean-zero function on the network:
///   (i)  sup|f|  <= sqrt(|Γ|) ‖∂f‖₂
///   (ii) ∫f²     <= |Γ|² ∫|∂f|²
struct PoincareCheck {
  double sup_lhs{0.0};
  double sup_rhs{0.0};
  double l2_lhs{0.0};
  double l2_rhs{0.0};
  bool holds_pointwise{false};
  bool holds_l2{false};
};

/// |mean(f)| allowed by the mean-zero preconditions, relative to max(1, sup|f|).
inline constexpr double kMeanTolerance = 1e-10;

/// Throws NotMeanZero if f is not centred.
PoincareCheck check_poincare(const GridFunction& f);

/// Exponential-integrability bound ∫ e^{βf²} <= e^{β|Γ|δ} |Γ| for mean-zero f
/// with ∫|∂f|² <= δ.
struct MoserCheck {
  double integral{0.0};
  double bound{0.0};
  bool holds{false};
};

/// Throws NotMeanZero, SeminormExceedsDelta, or InvalidArgument for δ <= 0.
MoserCheck check_moser(const GridFunction& f, double beta, double delta);

}  // namespace kw
