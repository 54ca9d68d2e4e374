#include "kw/quadrature.hpp"

#include <cmath>

namespace kw {

double integrate(const GridFunction& f) { return f.grid().weights().dot(f.values()); }

double dirichlet_energy(const GridFunction& f)
{
  const Grid& grid = f.grid();
  double sum = 0.0;
  for (EdgeIndex j = 0; j < grid.graph().num_edges(); ++j) {
    const int n = grid.cells(j);
    const double hj = grid.spacing(j);
    for (int i = 0; i < n; ++i) {
      const double d = f[grid.node(j, i + 1)] - f[grid.node(j, i)];
      sum += d * d / hj;
    }
  }
  return sum;
}

Norms norms(const GridFunction& f)
{
  const auto& w = f.grid().weights();
  Norms out;
  out.l2 = std::sqrt(w.dot(f.values().cwiseAbs2()));
  out.h1_seminorm = std::sqrt(dirichlet_energy(f));
  out.sup = f.sup_norm();
  out.mean = integrate(f) / f.grid().graph().total_length();
  return out;
}

double h1_norm(const GridFunction& f)
{
  const auto n = norms(f);
  return std::sqrt(n.l2 * n.l2 + n.h1_seminorm * n.h1_seminorm);
}

}  // namespace kw
