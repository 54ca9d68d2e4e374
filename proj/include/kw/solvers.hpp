#pragma once

// Solvers for ∂²u = c − h·eᵘ on a metric graph with Kirchhoff conditions,
// one per sign of c, plus the upper/lower solution machinery for c < 0.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kw/grid.hpp"

namespace kw::solvers {

struct KWProblem {
  GridFunction h;
  double c{0.0};
};

enum class VerdictStatus { NecessaryOK, Violates };

enum class VerdictReason { None, HZeroEverywhere, HDoesNotChangeSign, IntegralHNonneg, HNowherePositive };

struct SolvabilityVerdict {
  VerdictStatus status{VerdictStatus::NecessaryOK};
  VerdictReason reason{VerdictReason::None};
  double integral_h{0.0};
  double max_h{0.0};
  double min_h{0.0};

  bool ok() const noexcept { return status == VerdictStatus::NecessaryOK; }
};

std::string_view to_string(VerdictStatus status) noexcept;
std::string_view to_string(VerdictReason reason) noexcept;

/// Checks the necessary conditions for solvability that depend on the sign of c:
///   c = 0: h changes sign and ∫h < 0
///   c > 0: h is positive somewhere
///   c < 0: ∫h < 0
/// For c < 0 and sign-changing h, NecessaryOK only means "possibly solvable".
SolvabilityVerdict classify(const GridFunction& h, double c);

enum class SolveStatus { Converged, NotSolvable, NoConvergence, NoUpperSolutionFound, BoundBlowup };

std::string_view to_string(SolveStatus status) noexcept;

/// One step of the monotone scheme. The ordering u₋ ≤ u_{n+1} ≤ u_n ≤ u₊
/// holds when the three minima below are nonnegative.
struct MonotoneStep {
  double step{0.0};            // ‖u_{n+1} − u_n‖∞
  double min_decrease{0.0};    // min(u_n − u_{n+1})
  double min_above_lower{0.0}; // min(u_{n+1} − u₋)
  double min_below_upper{0.0}; // min(u₊ − u_{n+1})
  double residual{0.0};        // weak residual norm of u_{n+1}
  bool adaptive_shift{false};
};

/// Diagnostics of the critical-case sequence, one entry per level k.
struct CriticalLevel {
  double c{0.0};
  double c_upper{0.0};  // c̃_k where ψ_k solves
  double h1_norm{0.0};
  double h1_bound{0.0};
  double residual{0.0};
  int iterations{0};
};

struct SolveReport {
  int iterations{0};
  double final_residual{0.0};
  std::optional<double> multiplier;
  std::optional<double> functional;
  double mass_defect{0.0};                 // |∫heᵘ − c|Γ||
  std::optional<double> energy_defect;     // c = 0 only: |∫(∂u)²e^{−u} + ∫h|
  std::vector<MonotoneStep> monotone_history;
  std::vector<CriticalLevel> critical_levels;
  std::string message;
};

struct Solution {
  SolveStatus status{SolveStatus::NoConvergence};
  GridFunction u;
  double c{0.0};
  SolvabilityVerdict verdict;
  SolveReport report;

  bool converged() const noexcept { return status == SolveStatus::Converged; }
};

struct SolveOptions {
  double tol{1e-8};
  int max_iter{5000};           // projected-gradient iterations
  int monotone_max_iter{500};   // per monotone phase
  double monotone_step_tol{0.0}; // zero: same as tol
};

struct MonotoneOptions {
  double tol{1e-8};       // weak residual
  double step_tol{0.0};   // ‖u_{n+1} − u_n‖∞; zero: same as tol
  int max_iter{500};
  /// After max_iter frozen-shift steps, continue with the shift k1·e^{u_n}
  /// recomputed every step (same ordering guarantees, much faster when u₊
  /// sits far above the solution).
  bool adaptive_fallback{true};
};

/// Constant lower solution u₋ ≡ −A with −c − sup|h|e^{−A} ≥ δ.
/// Throws MarginTooLarge if δ ≥ −c, InvalidArgument unless c < 0 and δ > 0.
GridFunction build_lower(const GridFunction& h, double c, double delta);

struct UpperSolutionParams {
  GridFunction m;       // mean-zero, ∂²m = mean(h) − h
  double a{1.0};
  double b{0.0};        // ln a
  double implied_c{0.0};// (a/2)·mean(h)
  double rho{0.0};      // −mean(h) / (2 sup|h|)

  /// u₊ = a·m + b, an upper solution for every c ∈ [implied_c, 0).
  GridFunction upper() const { return m * a + b; }
};

/// Throws IntegralNotNegative unless ∫h < 0.
UpperSolutionParams build_upper(const GridFunction& h);

/// Upper solution for h ≤ 0 and any c < 0: a = 2c/mean(h),
/// b = ln a + a·max|m| + 1. Throws HNotNonpositive, IntegralNotNegative.
GridFunction build_upper_hneg(const GridFunction& h, double c);

/// Monotone iteration from u₊ down to a solution between u₋ and u₊.
/// Throws NotAdmissible if the pair is not ordered or the residual signs are
/// wrong, OrderingViolated if the computed iterates leave the sandwich.
Solution monotone_iterate(const GridFunction& h, double c, const GridFunction& u_minus, const GridFunction& u_plus,
                          const MonotoneOptions& opts = {});

Solution solve_zero(const GridFunction& h, const SolveOptions& opts = {});
Solution solve_positive(const GridFunction& h, double c, const SolveOptions& opts = {});

/// A solved point (c, u) used to warm-start the continuation in c.
struct Anchor {
  double c{0.0};
  GridFunction u;
};

/// Solve for c < 0. When c lies below the analytic bound the upper solution
/// is a solution at a slightly smaller c reached by Newton continuation,
/// started from `anchor` (which must satisfy anchor.c ≥ c) or from the
/// analytic bound.
Solution solve_negative(const GridFunction& h, double c, const SolveOptions& opts = {},
                        const std::optional<Anchor>& anchor = std::nullopt);

/// Dispatches on the sign of c.
Solution solve(const KWProblem& problem, const SolveOptions& opts = {});

struct ThresholdOptions {
  /// Zero selects 1e-4·|c_hi| with c_hi the analytic bound.
  double bracket_tol{0.0};
  SolveOptions solve;
  int max_doublings{60};
};

struct ThresholdEstimate {
  bool minus_infinity{false};
  double c_lo{0.0};
  double c_hi{0.0};
  double analytic_upper_bound{0.0};  // (a/2)·mean(h)
  double bracket_tol{0.0};
  int probes{0};
  /// Solution at c_hi, when finite.
  std::optional<GridFunction> u_hi;

  double width() const noexcept { return c_hi - c_lo; }
  double midpoint() const noexcept { return 0.5 * (c_lo + c_hi); }
};

/// Brackets the solvability threshold c(h). Throws IntegralNotNegative.
ThresholdEstimate estimate_threshold(const GridFunction& h, const ThresholdOptions& opts = {});

struct CriticalOptions {
  int k_max{6};
  double tol{1e-8};
  int max_iter{200000};
  /// Ratio of H¹ norms across levels above which BoundBlowup is reported.
  double blowup_ratio{10.0};
};

/// Approximates a solution at c = c(h) by minimizing ℐ_k over the box
/// [−A, ψ_k] for a sequence c_k decreasing from c_hi to the bracket midpoint.
/// Throws InvalidArgument if the estimate is minus_infinity.
Solution solve_critical(const GridFunction& h, const ThresholdEstimate& estimate, const CriticalOptions& opts = {});

// Functionals minimized by the solvers, with their gradients with respect to
// the nodal values (assembled vectors, so the pairing with φ is gradᵀφ).
enum class Functional {
  JZero,     // ½∫|∂u|²
  JPositive, // ½∫|∂u|² + c∫u
  IK,        // ½∫|∂u|² + c∫u − ∫heᵘ
};

std::string_view to_string(Functional f) noexcept;

double functional_value(Functional f, const GridFunction& u, const GridFunction& h, double c);
Eigen::VectorXd functional_gradient(Functional f, const GridFunction& u, const GridFunction& h, double c);

/// |∫heᵘ − c|Γ||, trapezoid rule.
double mass_identity_defect(const GridFunction& u, const GridFunction& h, double c);

/// |∫(∂u)²e^{−u} + ∫h|, integrating e^{−u} exactly along each linear cell.
/// This is the quadrature under which the discrete equation satisfies the
/// identity to within the residual.
double energy_identity_defect(const GridFunction& u, const GridFunction& h);

}  // namespace kw::solvers
