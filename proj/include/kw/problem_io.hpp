#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kw/expression.hpp"
#include "kw/graph.hpp"
#include "kw/grid.hpp"

namespace kw {

/// h on one edge: an expression in s, or uniformly spaced samples tail→head.
using EdgeData = std::variant<Expression, std::vector<double>>;

/// Parsed problem file:
///
///   {"vertices": ["v0", {"id": "v1", "x": 0.0, "y": 1.0}, ...],
///    "edges": [{"id": "e0", "tail": "v0", "head": "v1", "length": 1.0, "cells": 64}, ...],
///    "h": {"e0": "cos(pi*s) - 0.1", "e1": [0.0, 0.5, 1.0]}   // or one string for every edge
///    "c": -1.0}
///
/// Vertex coordinates are accepted and ignored. "cells" is optional per edge.
struct ProblemSpec {
  MetricGraph graph;
  std::vector<std::optional<int>> cells;  // per edge
  std::vector<EdgeData> h;                // per edge
  std::optional<double> c;
};

/// Throws Error(ParseError) for schema violations, plus the build_graph errors.
ProblemSpec parse_problem(const nlohmann::json& doc);
ProblemSpec load_problem(const std::string& path);

/// Edge cell counts: `override_cells` on every edge if given; otherwise the
/// per-edge "cells" entry, or else the default ceil(l_j / (min_l / 32)).
Grid make_grid(const ProblemSpec& spec, std::optional<int> override_cells = std::nullopt);

/// Evaluates h on the grid (expressions sampled, sample lists interpolated).
GridFunction sample_h(const ProblemSpec& spec, const Grid& grid);

}  // namespace kw
