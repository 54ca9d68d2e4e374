#include "kw/graph.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "kw/error.hpp"

namespace kw {

std::string_view to_string(ErrorCode code) noexcept
{
  switch (code) {
    case ErrorCode::EmptySpec: return "EmptySpec";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NonpositiveLength: return "NonpositiveLength";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::ContinuityMismatch: return "ContinuityMismatch";
    case ErrorCode::NonfiniteValue: return "NonfiniteValue";
    case ErrorCode::NotMeanZero: return "NotMeanZero";
    case ErrorCode::SeminormExceedsDelta: return "SeminormExceedsDelta";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NonpositiveShift: return "NonpositiveShift";
    case ErrorCode::IncompatibleRHS: return "IncompatibleRHS";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::MarginTooLarge: return "MarginTooLarge";
    case ErrorCode::IntegralNotNegative: return "IntegralNotNegative";
    case ErrorCode::HNotNonpositive: return "HNotNonpositive";
    case ErrorCode::OrderingViolated: return "OrderingViolated";
    case ErrorCode::NotAdmissible: return "NotAdmissible";
    case ErrorCode::FeasibilityFailure: return "FeasibilityFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::KirchhoffDefect: return "KirchhoffDefect";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

std::optional<VertexIndex> MetricGraph::find_vertex(const std::string& id) const
{
  for (VertexIndex i = 0; i < vertex_ids_.size(); ++i) {
    if (vertex_ids_[i] == id) return i;
  }
  return std::nullopt;
}

std::optional<EdgeIndex> MetricGraph::find_edge(const std::string& id) const
{
  for (EdgeIndex j = 0; j < edges_.size(); ++j) {
    if (edges_[j].id == id) return j;
  }
  return std::nullopt;
}

MetricGraph build_graph(const GraphSpec& spec)
{
  if (spec.vertices.empty() || spec.edges.empty()) {
    throw Error(ErrorCode::EmptySpec, "graph needs at least one vertex and one edge");
  }

  MetricGraph g;
  std::unordered_map<std::string, VertexIndex> vindex;
  for (const auto& id : spec.vertices) {
    if (!vindex.emplace(id, g.vertex_ids_.size()).second) {
      throw Error(ErrorCode::DuplicateId, "vertex '" + id + "' listed twice");
    }
    g.vertex_ids_.push_back(id);
  }
  g.incidence_.resize(g.vertex_ids_.size());

  std::unordered_set<std::string> edge_ids;
  for (const auto& e : spec.edges) {
    if (!edge_ids.insert(e.id).second) {
      throw Error(ErrorCode::DuplicateId, "edge '" + e.id + "' listed twice");
    }
    auto t = vindex.find(e.tail);
    auto h = vindex.find(e.head);
    if (t == vindex.end() || h == vindex.end()) {
      throw Error(ErrorCode::DanglingEndpoint, "edge '" + e.id + "' refers to an unknown vertex");
    }
    if (t->second == h->second) {
      throw Error(ErrorCode::SelfLoop, "edge '" + e.id + "' has tail == head");
    }
    if (!(e.length > 0.0) || !std::isfinite(e.length)) {
      throw Error(ErrorCode::NonpositiveLength, "edge '" + e.id + "' must have positive finite length");
    }
    const EdgeIndex j = g.edges_.size();
    g.edges_.push_back(Edge{e.id, t->second, h->second, e.length});
    g.incidence_[t->second].push_back(j);
    g.incidence_[h->second].push_back(j);
    g.total_length_ += e.length;
  }

  // connectivity by graph search from vertex 0
  std::vector<bool> seen(g.num_vertices(), false);
  std::vector<VertexIndex> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const VertexIndex v = stack.back();
    stack.pop_back();
    for (EdgeIndex j : g.incidence_[v]) {
      const Edge& e = g.edges_[j];
      const VertexIndex w = e.tail == v ? e.head : e.tail;
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  for (VertexIndex v = 0; v < seen.size(); ++v) {
    if (!seen[v]) {
      throw Error(ErrorCode::DisconnectedGraph,
                  "vertex '" + g.vertex_ids_[v] + "' is not reachable from '" + g.vertex_ids_[0] + "'");
    }
  }
  return g;
}

}  // namespace kw
