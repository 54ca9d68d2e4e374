#include "kw/problem_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "kw/error.hpp"

namespace kw {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }

std::string id_of(const json& v, const char* what)
{
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  parse_fail(std::string(what) + " id must be a string or integer");
}

EdgeData parse_edge_data(const json& v, const std::string& edge)
{
  if (v.is_string()) return Expression(v.get<std::string>());
  if (v.is_number()) return Expression(v.dump());
  if (v.is_array()) {
    std::vector<double> samples;
    for (const auto& x : v) {
      if (!x.is_number()) parse_fail("h samples for edge '" + edge + "' must be numbers");
      samples.push_back(x.get<double>());
    }
    if (samples.size() < 2) parse_fail("h samples for edge '" + edge + "' need at least two entries");
    return samples;
  }
  parse_fail("h for edge '" + edge + "' must be an expression string or a sample array");
}

}  // namespace

ProblemSpec parse_problem(const json& doc)
{
  if (!doc.is_object()) parse_fail("problem file must be a JSON object");
  if (!doc.contains("vertices") || !doc["vertices"].is_array()) parse_fail("missing array 'vertices'");
  if (!doc.contains("edges") || !doc["edges"].is_array()) parse_fail("missing array 'edges'");
  if (!doc.contains("h")) parse_fail("missing 'h'");

  GraphSpec gspec;
  for (const auto& v : doc["vertices"]) {
    gspec.vertices.push_back(v.is_object() ? id_of(v.value("id", json()), "vertex") : id_of(v, "vertex"));
  }

  std::vector<std::optional<int>> cells;
  for (const auto& e : doc["edges"]) {
    if (!e.is_object()) parse_fail("each edge must be an object");
    for (const char* key : {"id", "tail", "head", "length"}) {
      if (!e.contains(key)) parse_fail(std::string("edge is missing '") + key + "'");
    }
    if (!e["length"].is_number()) parse_fail("edge length must be a number");
    gspec.edges.push_back(
        EdgeSpec{id_of(e["id"], "edge"), id_of(e["tail"], "vertex"), id_of(e["head"], "vertex"), e["length"].get<double>()});
    if (e.contains("cells")) {
      if (!e["cells"].is_number_integer()) parse_fail("edge 'cells' must be an integer");
      cells.emplace_back(e["cells"].get<int>());
    } else {
      cells.emplace_back(std::nullopt);
    }
  }

  ProblemSpec spec{build_graph(gspec), std::move(cells), {}, std::nullopt};

  const json& h = doc["h"];
  if (h.is_object()) {
    for (const Edge& e : spec.graph.edges()) {
      if (!h.contains(e.id)) parse_fail("no h given for edge '" + e.id + "'");
      spec.h.push_back(parse_edge_data(h[e.id], e.id));
    }
    for (const auto& [key, _] : h.items()) {
      if (!spec.graph.find_edge(key)) parse_fail("h refers to unknown edge '" + key + "'");
    }
  } else {
    const EdgeData shared = parse_edge_data(h, "*");
    spec.h.assign(spec.graph.num_edges(), shared);
  }

  if (doc.contains("c")) {
    if (!doc["c"].is_number()) parse_fail("'c' must be a number");
    spec.c = doc["c"].get<double>();
  }
  return spec;
}

ProblemSpec load_problem(const std::string& path)
{
  std::ifstream in(path);
  if (!in) parse_fail("cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    parse_fail(std::string("malformed JSON in '") + path + "': " + e.what());
  }
  return parse_problem(doc);
}

Grid make_grid(const ProblemSpec& spec, std::optional<int> override_cells)
{
  const auto& edges = spec.graph.edges();
  if (override_cells) return build_grid(spec.graph, *override_cells);

  double min_len = edges.front().length;
  for (const Edge& e : edges) min_len = std::min(min_len, e.length);
  const double target = min_len / 32.0;

  std::vector<int> cells;
  for (EdgeIndex j = 0; j < edges.size(); ++j) {
    cells.push_back(spec.cells[j] ? *spec.cells[j]
                                  : static_cast<int>(std::ceil(edges[j].length / target - 1e-9)));
  }
  return build_grid(spec.graph, cells);
}

GridFunction sample_h(const ProblemSpec& spec, const Grid& grid)
{
  const bool all_expr = std::all_of(spec.h.begin(), spec.h.end(),
                                    [](const EdgeData& d) { return std::holds_alternative<Expression>(d); });
  if (all_expr) {
    std::vector<EdgeProfile> profiles;
    for (const auto& d : spec.h) profiles.emplace_back(std::get<Expression>(d));
    return sample_function(grid, profiles);
  }
  // Mixed input: turn expressions into samples at the grid nodes first.
  std::vector<std::vector<double>> samples;
  for (EdgeIndex j = 0; j < spec.h.size(); ++j) {
    if (const auto* expr = std::get_if<Expression>(&spec.h[j])) {
      std::vector<double> s;
      for (int i = 0; i <= grid.cells(j); ++i) s.push_back((*expr)(grid.position(j, i)));
      samples.push_back(std::move(s));
    } else {
      samples.push_back(std::get<std::vector<double>>(spec.h[j]));
    }
  }
  return sample_function(grid, samples);
}

}  // namespace kw
