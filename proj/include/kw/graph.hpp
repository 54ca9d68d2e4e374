#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace kw {

using VertexIndex = std::size_t;
using EdgeIndex = std::size_t;

/// An edge of the network, identified with the interval [0, length].
/// The arclength coordinate runs from tail to head.
struct Edge {
  std::string id;
  VertexIndex tail{0};
  VertexIndex head{0};
  double length{1.0};

  bool operator==(const Edge&) const = default;
};

/// Input description of one edge, referring to vertices by id.
struct EdgeSpec {
  std::string id;
  std::string tail;
  std::string head;
  double length{1.0};
};

struct GraphSpec {
  std::vector<std::string> vertices;
  std::vector<EdgeSpec> edges;
};

/// Finite connected metric graph. Parallel edges are allowed, self-loops are
/// not. Immutable once built; construct through build_graph().
class MetricGraph {
public:
  std::size_t num_vertices() const noexcept { return vertex_ids_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  const std::vector<std::string>& vertex_ids() const noexcept { return vertex_ids_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(EdgeIndex j) const { return edges_.at(j); }

  /// Edges incident to vertex i (Inc_i), in increasing edge index.
  const std::vector<EdgeIndex>& incident(VertexIndex i) const { return incidence_.at(i); }

  /// Total length |Γ|.
  double total_length() const noexcept { return total_length_; }

  std::optional<VertexIndex> find_vertex(const std::string& id) const;
  std::optional<EdgeIndex> find_edge(const std::string& id) const;

  bool operator==(const MetricGraph&) const = default;

private:
  friend MetricGraph build_graph(const GraphSpec& spec);

  std::vector<std::string> vertex_ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeIndex>> incidence_;
  double total_length_{0.0};
};

/// Validates the description and builds the graph.
/// Throws Error with EmptySpec, DuplicateId, DanglingEndpoint, SelfLoop,
/// NonpositiveLength or DisconnectedGraph.
MetricGraph build_graph(const GraphSpec& spec);

}  // namespace kw
