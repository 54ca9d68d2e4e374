#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "kw/graph.hpp"

namespace kw {

using Dof = Eigen::Index;

/// Uniform per-edge discretization of a metric graph.
///
/// Degrees of freedom: one per vertex (indices 0..|V|-1, in vertex order),
/// followed by the n_j - 1 interior nodes of each edge in edge order. Node i
/// of edge j sits at arclength s = i * l_j / n_j from the tail; node 0 is the
/// tail vertex DOF and node n_j is the head vertex DOF, so every function on
/// the grid is continuous at the vertices by construction.
///
/// Grid is a cheap handle onto immutable shared state; copies compare equal.
class Grid {
public:
  const MetricGraph& graph() const noexcept { return impl_->graph; }

  Dof num_dofs() const noexcept { return impl_->num_dofs; }
  int cells(EdgeIndex j) const { return impl_->cells.at(j); }
  const std::vector<int>& cells() const noexcept { return impl_->cells; }
  /// h_j = l_j / n_j
  double spacing(EdgeIndex j) const { return impl_->spacing.at(j); }
  double max_spacing() const noexcept;

  /// Global DOF of node i (0 <= i <= n_j) of edge j.
  Dof node(EdgeIndex j, int i) const;
  /// Arclength of node i on edge j, measured from the tail.
  double position(EdgeIndex j, int i) const { return i * spacing(j); }

  /// Trapezoid weights (diagonal of the lumped mass): h_j/2 per incident edge
  /// end at a vertex DOF, h_j at interior nodes.
  const Eigen::VectorXd& weights() const noexcept { return impl_->weights; }

  /// Same discretization (identical handle, or equal graph and cell counts).
  bool matches(const Grid& other) const noexcept;
  bool operator==(const Grid& other) const noexcept { return matches(other); }

private:
  struct Impl {
    MetricGraph graph;
    std::vector<int> cells;
    std::vector<double> spacing;
    std::vector<Dof> interior_offset;
    Dof num_dofs{0};
    Eigen::VectorXd weights;
  };

  explicit Grid(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  friend Grid build_grid(const MetricGraph&, const std::vector<int>&);

  std::shared_ptr<const Impl> impl_;
};

/// Per-edge cell counts; every n_j must be >= 2 (ResolutionTooCoarse).
Grid build_grid(const MetricGraph& graph, const std::vector<int>& cells_per_edge);
/// Same cell count on every edge.
Grid build_grid(const MetricGraph& graph, int cells);
/// n_j = ceil(l_j / target_spacing); throws ResolutionTooCoarse if any n_j < 2.
Grid build_grid(const MetricGraph& graph, double target_spacing);

/// A continuous function on the network, stored by its nodal values.
class GridFunction {
public:
  /// Throws NonfiniteValue if any entry is not finite, InvalidArgument on a
  /// size mismatch.
  GridFunction(Grid grid, Eigen::VectorXd values);

  static GridFunction constant(const Grid& grid, double value);
  static GridFunction zero(const Grid& grid) { return constant(grid, 0.0); }

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  Dof size() const noexcept { return values_.size(); }
  double operator[](Dof i) const { return values_[i]; }

  /// Values at nodes 0..n_j of edge j (the trace u_j), tail to head.
  std::vector<double> edge_trace(EdgeIndex j) const;

  double max() const { return values_.maxCoeff(); }
  double min() const { return values_.minCoeff(); }
  double sup_norm() const { return values_.cwiseAbs().maxCoeff(); }

  GridFunction operator+(const GridFunction& o) const;
  GridFunction operator-(const GridFunction& o) const;
  GridFunction operator*(double a) const;
  GridFunction operator+(double a) const;
  GridFunction operator-(double a) const { return *this + (-a); }

private:
  Grid grid_;
  Eigen::VectorXd values_;
};

inline GridFunction operator*(double a, const GridFunction& f) { return f * a; }

/// Throws GridMismatch unless both functions live on the same grid.
void require_same_grid(const GridFunction& a, const GridFunction& b, const char* context);

using EdgeProfile = std::function<double(double)>;

/// Relative tolerance for vertex agreement in sample_function.
inline constexpr double kContinuityTolerance = 1e-10;

/// Samples one callable per edge at the grid nodes. Edges sharing a vertex
/// must agree there to kContinuityTolerance (relative); the stored vertex
/// value is the one from the lowest-indexed incident edge.
GridFunction sample_function(const Grid& grid, const std::vector<EdgeProfile>& profiles);
/// Same profile on every edge.
GridFunction sample_function(const Grid& grid, const EdgeProfile& profile);
/// Uniformly spaced samples per edge (first sample at the tail, last at the
/// head, at least two per edge), linearly interpolated onto the grid nodes.
GridFunction sample_function(const Grid& grid, const std::vector<std::vector<double>>& samples);

}  // namespace kw
