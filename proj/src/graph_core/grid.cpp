#include "kw/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kw/error.hpp"

namespace kw {

double Grid::max_spacing() const noexcept
{
  return *std::max_element(impl_->spacing.begin(), impl_->spacing.end());
}

Dof Grid::node(EdgeIndex j, int i) const
{
  const Edge& e = impl_->graph.edge(j);
  const int n = impl_->cells[j];
  if (i == 0) return static_cast<Dof>(e.tail);
  if (i == n) return static_cast<Dof>(e.head);
  return impl_->interior_offset[j] + (i - 1);
}

bool Grid::matches(const Grid& other) const noexcept
{
  if (impl_ == other.impl_) return true;
  return impl_->cells == other.impl_->cells && impl_->graph == other.impl_->graph;
}

Grid build_grid(const MetricGraph& graph, const std::vector<int>& cells_per_edge)
{
  if (cells_per_edge.size() != graph.num_edges()) {
    throw Error(ErrorCode::InvalidArgument, "one cell count per edge required");
  }
  auto impl = std::make_shared<Grid::Impl>();
  impl->graph = graph;
  impl->cells = cells_per_edge;
  Dof next = static_cast<Dof>(graph.num_vertices());
  for (EdgeIndex j = 0; j < graph.num_edges(); ++j) {
    const int n = cells_per_edge[j];
    if (n < 2) {
      throw Error(ErrorCode::ResolutionTooCoarse,
                  "edge '" + graph.edge(j).id + "' needs at least 2 cells, got " + std::to_string(n));
    }
    impl->spacing.push_back(graph.edge(j).length / n);
    impl->interior_offset.push_back(next);
    next += n - 1;
  }
  impl->num_dofs = next;

  impl->weights = Eigen::VectorXd::Zero(next);
  for (EdgeIndex j = 0; j < graph.num_edges(); ++j) {
    const Edge& e = graph.edge(j);
    const double hj = impl->spacing[j];
    impl->weights[static_cast<Dof>(e.tail)] += 0.5 * hj;
    impl->weights[static_cast<Dof>(e.head)] += 0.5 * hj;
    for (int i = 1; i < impl->cells[j]; ++i) {
      impl->weights[impl->interior_offset[j] + (i - 1)] = hj;
    }
  }
  return Grid(std::move(impl));
}

Grid build_grid(const MetricGraph& graph, int cells)
{
  return build_grid(graph, std::vector<int>(graph.num_edges(), cells));
}

Grid build_grid(const MetricGraph& graph, double target_spacing)
{
  if (!(target_spacing > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "target spacing must be positive");
  }
  std::vector<int> cells;
  for (const Edge& e : graph.edges()) {
    // guard against ceil(4.0000000001) when l_j is an exact multiple
    cells.push_back(static_cast<int>(std::ceil(e.length / target_spacing - 1e-9)));
  }
  return build_grid(graph, cells);
}

GridFunction::GridFunction(Grid grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values))
{
  if (values_.size() != grid_.num_dofs()) {
    throw Error(ErrorCode::InvalidArgument, "value count does not match grid DOF count");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorCode::NonfiniteValue, "grid function has non-finite entries");
  }
}

GridFunction GridFunction::constant(const Grid& grid, double value)
{
  return GridFunction(grid, Eigen::VectorXd::Constant(grid.num_dofs(), value));
}

std::vector<double> GridFunction::edge_trace(EdgeIndex j) const
{
  const int n = grid_.cells(j);
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) out[static_cast<std::size_t>(i)] = values_[grid_.node(j, i)];
  return out;
}

void require_same_grid(const GridFunction& a, const GridFunction& b, const char* context)
{
  if (!a.grid().matches(b.grid())) {
    throw Error(ErrorCode::GridMismatch, std::string(context) + ": functions live on different grids");
  }
}

GridFunction GridFunction::operator+(const GridFunction& o) const
{
  require_same_grid(*this, o, "operator+");
  return GridFunction(grid_, values_ + o.values_);
}

GridFunction GridFunction::operator-(const GridFunction& o) const
{
  require_same_grid(*this, o, "operator-");
  return GridFunction(grid_, values_ - o.values_);
}

GridFunction GridFunction::operator*(double a) const { return GridFunction(grid_, values_ * a); }

GridFunction GridFunction::operator+(double a) const
{
  return GridFunction(grid_, values_.array() + a);
}

namespace {

bool agree(double a, double b)
{
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= kContinuityTolerance * scale;
}

// Fills interior nodes from `value(j, i)`; vertex DOFs take the value of the
// lowest-indexed incident edge and the others are checked against it.
template <class ValueAt>
GridFunction assemble_samples(const Grid& grid, ValueAt value)
{
  const MetricGraph& g = grid.graph();
  Eigen::VectorXd v(grid.num_dofs());
  std::vector<bool> set(g.num_vertices(), false);
  for (EdgeIndex j = 0; j < g.num_edges(); ++j) {
    const int n = grid.cells(j);
    for (int i = 0; i <= n; ++i) {
      const double x = value(j, i);
      const Dof d = grid.node(j, i);
      if (i == 0 || i == n) {
        const auto vi = static_cast<std::size_t>(d);
        if (!set[vi]) {
          v[d] = x;
          set[vi] = true;
        } else if (!agree(v[d], x)) {
          throw Error(ErrorCode::ContinuityMismatch,
                      "profiles disagree at vertex '" + g.vertex_ids()[vi] + "' (" + std::to_string(v[d]) +
                          " vs " + std::to_string(x) + " on edge '" + g.edge(j).id + "')");
        }
      } else {
        v[d] = x;
      }
    }
  }
  return GridFunction(grid, std::move(v));
}

}  // namespace

GridFunction sample_function(const Grid& grid, const std::vector<EdgeProfile>& profiles)
{
  if (profiles.size() != grid.graph().num_edges()) {
    throw Error(ErrorCode::InvalidArgument, "one profile per edge required");
  }
  return assemble_samples(grid, [&](EdgeIndex j, int i) { return profiles[j](grid.position(j, i)); });
}

GridFunction sample_function(const Grid& grid, const EdgeProfile& profile)
{
  return assemble_samples(grid, [&](EdgeIndex j, int i) { return profile(grid.position(j, i)); });
}

GridFunction sample_function(const Grid& grid, const std::vector<std::vector<double>>& samples)
{
  if (samples.size() != grid.graph().num_edges()) {
    throw Error(ErrorCode::InvalidArgument, "one sample list per edge required");
  }
  for (const auto& s : samples) {
    if (s.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two samples per edge");
  }
  return assemble_samples(grid, [&](EdgeIndex j, int i) {
    const auto& s = samples[j];
    const double t = static_cast<double>(i) / grid.cells(j) * static_cast<double>(s.size() - 1);
    const auto k = std::min(static_cast<std::size_t>(t), s.size() - 2);
    const double frac = t - static_cast<double>(k);
    return (1.0 - frac) * s[k] + frac * s[k + 1];
  });
}

}  // namespace kw
