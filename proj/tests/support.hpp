#pragma once

// Graph fixtures and random generators shared by the test binaries.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kw/graph.hpp"
#include "kw/grid.hpp"
#include "kw/quadrature.hpp"

namespace kw::testing {

inline constexpr double pi = std::numbers::pi;

inline MetricGraph single_edge(double length = 1.0)
{
  return build_graph({{"v0", "v1"}, {{"e0", "v0", "v1", length}}});
}

/// Centre "c" joined to leaves by edges oriented centre → leaf.
inline MetricGraph star(int legs, double length = 1.0)
{
  GraphSpec spec;
  spec.vertices.push_back("c");
  for (int i = 1; i <= legs; ++i) {
    spec.vertices.push_back("v" + std::to_string(i));
    spec.edges.push_back({"e" + std::to_string(i - 1), "c", "v" + std::to_string(i), length});
  }
  return build_graph(spec);
}

inline MetricGraph path3()
{
  return build_graph({{"a", "b", "c", "d"}, {{"e0", "a", "b", 0.5}, {"e1", "b", "c", 1.0}, {"e2", "c", "d", 0.75}}});
}

inline MetricGraph triangle()
{
  return build_graph({{"a", "b", "c"}, {{"e0", "a", "b", 1.0}, {"e1", "b", "c", 0.8}, {"e2", "c", "a", 1.2}}});
}

/// Two vertices joined by two parallel edges plus a pendant edge.
inline MetricGraph parallel_pendant()
{
  return build_graph(
      {{"a", "b", "c"}, {{"e0", "a", "b", 1.0}, {"e1", "a", "b", 0.6}, {"e2", "b", "c", 0.4}}});
}

/// Five topologies used by the parameter sweeps.
inline std::vector<MetricGraph> topologies()
{
  return {single_edge(), star(3), path3(), triangle(), parallel_pendant()};
}

/// Random connected graph with 2..max_edges edges: a random tree plus extra
/// (possibly parallel) edges. Lengths in [0.3, 1.5].
inline MetricGraph random_graph(std::mt19937& rng, int max_edges = 6)
{
  std::uniform_int_distribution<int> edge_count(2, max_edges);
  std::uniform_real_distribution<double> len(0.3, 1.5);
  const int m = edge_count(rng);
  std::uniform_int_distribution<int> tree_size(2, m + 1);
  const int nv = std::min(tree_size(rng), m + 1);

  GraphSpec spec;
  for (int i = 0; i < nv; ++i) spec.vertices.push_back("v" + std::to_string(i));
  int e = 0;
  for (int i = 1; i < nv; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    spec.edges.push_back({"e" + std::to_string(e++), "v" + std::to_string(parent(rng)), "v" + std::to_string(i), len(rng)});
  }
  std::uniform_int_distribution<int> pick(0, nv - 1);
  while (e < m) {
    const int a = pick(rng);
    const int b = pick(rng);
    if (a == b) continue;
    spec.edges.push_back({"e" + std::to_string(e++), "v" + std::to_string(a), "v" + std::to_string(b), len(rng)});
  }
  return build_graph(spec);
}

/// Random continuous function: linear interpolation of random vertex values
/// plus a few random sine modes vanishing at both ends of each edge.
inline GridFunction random_function(const Grid& grid, std::mt19937& rng, double amplitude = 1.0, int modes = 3)
{
  const MetricGraph& g = grid.graph();
  std::uniform_real_distribution<double> coef(-amplitude, amplitude);
  std::vector<double> vertex_values(g.num_vertices());
  for (auto& v : vertex_values) v = coef(rng);
  std::vector<EdgeProfile> profiles;
  for (const Edge& e : g.edges()) {
    std::vector<double> a(static_cast<std::size_t>(modes));
    for (auto& x : a) x = coef(rng) / 2.0;
    const double ft = vertex_values[e.tail];
    const double fh = vertex_values[e.head];
    const double l = e.length;
    profiles.emplace_back([=](double s) {
      double v = ft + (fh - ft) * s / l;
      for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * std::sin(pi * static_cast<double>(k + 1) * s / l);
      return v;
    });
  }
  return sample_function(grid, profiles);
}

inline GridFunction centred(const GridFunction& f)
{
  return f - integrate(f) / f.grid().graph().total_length();
}

}  // namespace kw::testing
