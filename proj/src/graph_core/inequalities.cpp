#include "kw/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kw/error.hpp"
#include "kw/quadrature.hpp"

namespace kw {

namespace {

void require_mean_zero(const GridFunction& f)
{
  const double mean = integrate(f) / f.grid().graph().total_length();
  if (std::abs(mean) > kMeanTolerance * std::max(1.0, f.sup_norm())) {
    throw Error(ErrorCode::NotMeanZero, "mean is " + std::to_string(mean));
  }
}

// Round-off allowance when comparing the two sides.
bool leq(double lhs, double rhs) { return lhs <= rhs * (1.0 + 1e-12) + 1e-300; }

}  // namespace

PoincareCheck check_poincare(const GridFunction& f)
{
  require_mean_zero(f);
  const double len = f.grid().graph().total_length();
  const double energy = dirichlet_energy(f);
  const auto& w = f.grid().weights();

  PoincareCheck out;
  out.sup_lhs = f.sup_norm();
  out.sup_rhs = std::sqrt(len) * std::sqrt(energy);
  out.l2_lhs = w.dot(f.values().cwiseAbs2());
  out.l2_rhs = len * len * energy;
  out.holds_pointwise = leq(out.sup_lhs, out.sup_rhs);
  out.holds_l2 = leq(out.l2_lhs, out.l2_rhs);
  return out;
}

MoserCheck check_moser(const GridFunction& f, double beta, double delta)
{
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  require_mean_zero(f);
  const double energy = dirichlet_energy(f);
  if (energy > delta * (1.0 + 1e-12)) {
    throw Error(ErrorCode::SeminormExceedsDelta,
                "∫|∂f|² = " + std::to_string(energy) + " exceeds delta = " + std::to_string(delta));
  }
  const double len = f.grid().graph().total_length();
  const auto& w = f.grid().weights();

  MoserCheck out;
  out.integral = w.dot((beta * f.values().array().square()).exp().matrix());
  // for β ≤ 0 the integrand is at most 1, so the bound is |Γ| itself
  out.bound = std::exp(std::max(beta, 0.0) * len * delta) * len;
  out.holds = leq(out.integral, out.bound);
  return out;
}

}  // namespace kw
