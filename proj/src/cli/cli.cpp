#include "kw/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "kw/assembly.hpp"
#include "kw/error.hpp"
#include "kw/problem_io.hpp"
#include "kw/quadrature.hpp"
#include "kw/solvers.hpp"
#include "kw/verify.hpp"

namespace kw::cli {

namespace {

using nlohmann::json;
using namespace kw::solvers;

std::string fmt17(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string default_prefix(const std::string& problem_file)
{
  const auto dot = problem_file.find_last_of('.');
  const auto slash = problem_file.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return problem_file;
  return problem_file.substr(0, dot);
}

void write_file(const std::string& path, const std::string& text)
{
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  f << text;
}

json verdict_json(const SolvabilityVerdict& v)
{
  return {{"status", to_string(v.status)},
          {"reason", to_string(v.reason)},
          {"integral_h", v.integral_h},
          {"max_h", v.max_h},
          {"min_h", v.min_h}};
}

json grid_json(const Grid& grid)
{
  json edges = json::array();
  for (EdgeIndex j = 0; j < grid.graph().num_edges(); ++j) {
    edges.push_back({{"id", grid.graph().edge(j).id}, {"cells", grid.cells(j)}, {"spacing", grid.spacing(j)}});
  }
  return {{"dofs", grid.num_dofs()}, {"edges", edges}};
}

// Largest pointwise residual, located by edge and arclength.
json residual_peak(const assembly::Residual& r, const Grid& grid)
{
  Eigen::Index at = 0;
  r.pointwise.cwiseAbs().maxCoeff(&at);
  const MetricGraph& g = grid.graph();
  for (EdgeIndex j = 0; j < g.num_edges(); ++j) {
    for (int i = 0; i <= grid.cells(j); ++i) {
      if (grid.node(j, i) == at) {
        return {{"edge", g.edge(j).id}, {"s", grid.position(j, i)}, {"value", r.pointwise[at]}};
      }
    }
  }
  return nullptr;
}

json identities_json(const GridFunction& u, const GridFunction& h, double c)
{
  const verify::IdentityReport id = verify::identity_report(u, h, c);
  json j{{"mass_defect", id.mass_defect}, {"weak_residual", id.weak_residual}};
  if (id.energy_defect) j["energy_defect"] = *id.energy_defect;
  return j;
}

int exit_for(SolveStatus status)
{
  switch (status) {
    case SolveStatus::Converged: return Ok;
    case SolveStatus::NotSolvable: return NotSolvable;
    default: return SolverFailed;
  }
}

struct Loaded {
  GridFunction h;
  double c;
};

// h sampled on the problem grid and c from the flag or the file.
Loaded load(const std::string& path, std::optional<int> cells, std::optional<double> c_flag, bool need_c)
{
  const ProblemSpec spec = load_problem(path);
  const Grid grid = make_grid(spec, cells);
  double c = 0.0;
  if (c_flag) c = *c_flag;
  else if (spec.c) c = *spec.c;
  else if (need_c) throw Error(ErrorCode::ParseError, "no value of c in the problem file and no --c given");
  return {sample_h(spec, grid), c};
}

struct SolveArgs {
  std::string problem;
  std::optional<double> c;
  double tol{1e-8};
  int max_iter{5000};
  std::optional<int> cells;
  std::string out;
};

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err)
{
  std::optional<Loaded> in;
  try {
    in = load(a.problem, a.cells, a.c, true);
  } catch (const std::exception& e) {
    err << "kw solve: " << e.what() << '\n';
    return InputError;
  }
  const GridFunction& h = in->h;
  const Grid& grid = h.grid();
  const double c = in->c;

  SolveOptions opts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  std::optional<Solution> solved;
  try {
    solved = solve(KWProblem{h, c}, opts);
  } catch (const Error& e) {
    err << "kw solve: " << e.what() << '\n';
    return SolverFailed;
  }
  const Solution& s = *solved;

  json report{{"command", "solve"},
              {"problem", a.problem},
              {"c", c},
              {"status", to_string(s.status)},
              {"message", s.report.message},
              {"verdict", verdict_json(s.verdict)},
              {"iterations", s.report.iterations},
              {"final_residual", s.report.final_residual},
              {"tol", a.tol},
              {"grid", grid_json(grid)}};
  if (s.report.multiplier) report["lambda"] = *s.report.multiplier;
  if (s.report.functional) report["functional"] = *s.report.functional;
  if (!s.report.monotone_history.empty()) report["monotone_steps"] = s.report.monotone_history.size();
  if (s.converged()) report["identities"] = identities_json(s.u, h, c);

  const std::string prefix = a.out.empty() ? default_prefix(a.problem) : a.out;
  try {
    if (s.converged()) {
      std::ostringstream csv;
      write_solution_csv(csv, s.u);
      write_file(prefix + ".solution.csv", csv.str());
    }
    write_file(prefix + ".report", report.dump(2) + "\n");
  } catch (const Error& e) {
    err << "kw solve: " << e.what() << '\n';
    return InputError;
  }

  out << to_string(s.status);
  if (!s.converged()) out << " (" << (s.verdict.ok() ? s.report.message : to_string(s.verdict.reason)) << ")";
  out << ": c = " << c << ", iterations = " << s.report.iterations << ", residual = " << s.report.final_residual
      << '\n';
  return exit_for(s.status);
}

struct ThresholdArgs {
  std::string problem;
  double bracket_tol{0.0};
  std::string out;
};

int cmd_threshold(const ThresholdArgs& a, std::ostream& out, std::ostream& err)
{
  std::optional<Loaded> in;
  try {
    in = load(a.problem, std::nullopt, std::nullopt, false);
  } catch (const std::exception& e) {
    err << "kw threshold: " << e.what() << '\n';
    return InputError;
  }
  const GridFunction& h = in->h;

  ThresholdOptions opts;
  opts.bracket_tol = a.bracket_tol;
  json report{{"command", "threshold"}, {"problem", a.problem}, {"integral_h", integrate(h)}};
  int code = Ok;
  try {
    const ThresholdEstimate est = estimate_threshold(h, opts);
    report["minus_infinity"] = est.minus_infinity;
    if (!est.minus_infinity) {
      report["c_lo"] = est.c_lo;
      report["c_hi"] = est.c_hi;
      report["analytic_upper_bound"] = est.analytic_upper_bound;
      report["bracket_tol"] = est.bracket_tol;
      report["probes"] = est.probes;
    }
    out << (est.minus_infinity ? std::string("minus_infinity")
                               : "[" + fmt17(est.c_lo) + ", " + fmt17(est.c_hi) + "]")
        << '\n';
  } catch (const Error& e) {
    if (e.code() != ErrorCode::IntegralNotNegative) {
      err << "kw threshold: " << e.what() << '\n';
      return SolverFailed;
    }
    report["error"] = e.what();
    err << "kw threshold: " << e.what() << '\n';
    code = NotSolvable;
  }

  const std::string prefix = a.out.empty() ? default_prefix(a.problem) : a.out;
  try {
    write_file(prefix + ".threshold.report", report.dump(2) + "\n");
  } catch (const Error& e) {
    err << "kw threshold: " << e.what() << '\n';
    return InputError;
  }
  return code;
}

struct VerifyArgs {
  std::string problem;
  std::string solution;
  std::optional<double> c;
  double tol{1e-8};
  std::optional<int> cells;
  std::string out;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err)
{
  std::optional<Loaded> in;
  std::optional<GridFunction> read;
  try {
    in = load(a.problem, a.cells, a.c, true);
    std::ifstream file(a.solution);
    if (!file) throw Error(ErrorCode::ParseError, "cannot open " + a.solution);
    read = read_solution_csv(file, in->h.grid());
  } catch (const std::exception& e) {
    err << "kw verify: " << e.what() << '\n';
    return InputError;
  }
  const GridFunction& h = in->h;
  const GridFunction& u = *read;
  const double c = in->c;
  const Grid& grid = u.grid();
  const assembly::Residual r = assembly::apply_residual(u, h, c);
  const double len = grid.graph().total_length();
  const json identities = identities_json(u, h, c);
  // The energy identity is the residual tested against e^{−u}, so it is
  // reported but not judged separately.
  const bool pass = r.weak_residual_norm <= a.tol && identities["mass_defect"].get<double>() <= a.tol * len;

  json report{{"command", "verify"},
              {"problem", a.problem},
              {"solution", a.solution},
              {"c", c},
              {"tol", a.tol},
              {"pass", pass},
              {"weak_residual", r.weak_residual_norm},
              {"residual_peak", residual_peak(r, grid)},
              {"identities", identities}};
  out << report.dump(2) << '\n';
  if (!a.out.empty()) {
    try {
      write_file(a.out + ".verify.report", report.dump(2) + "\n");
    } catch (const Error& e) {
      err << "kw verify: " << e.what() << '\n';
      return InputError;
    }
  }
  return pass ? Ok : VerifyFailed;
}

}  // namespace

void write_solution_csv(std::ostream& os, const GridFunction& u)
{
  const Grid& grid = u.grid();
  const MetricGraph& g = grid.graph();
  std::vector<EdgeIndex> order(g.num_edges());
  std::iota(order.begin(), order.end(), EdgeIndex{0});
  std::sort(order.begin(), order.end(), [&](EdgeIndex x, EdgeIndex y) { return g.edge(x).id < g.edge(y).id; });

  os << "edge_id,s,u\n";
  for (EdgeIndex j : order) {
    for (int i = 0; i <= grid.cells(j); ++i) {
      os << g.edge(j).id << ',' << fmt17(grid.position(j, i)) << ',' << fmt17(u[grid.node(j, i)]) << '\n';
    }
  }
}

GridFunction read_solution_csv(std::istream& is, const Grid& grid)
{
  const MetricGraph& g = grid.graph();
  std::map<std::string, std::vector<std::pair<double, double>>> rows;
  std::string line;
  if (!std::getline(is, line) || line.rfind("edge_id,s,u", 0) != 0) {
    throw Error(ErrorCode::ParseError, "solution file must start with the header edge_id,s,u");
  }
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto p1 = line.find(',');
    const auto p2 = p1 == std::string::npos ? p1 : line.find(',', p1 + 1);
    if (p2 == std::string::npos) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected 3 fields");
    try {
      rows[line.substr(0, p1)].emplace_back(std::stod(line.substr(p1 + 1, p2 - p1 - 1)), std::stod(line.substr(p2 + 1)));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad number");
    }
  }

  Eigen::VectorXd values = Eigen::VectorXd::Constant(grid.num_dofs(), std::nan(""));
  const double scale_tol = 1e-12;
  for (EdgeIndex j = 0; j < g.num_edges(); ++j) {
    const Edge& e = g.edge(j);
    const auto it = rows.find(e.id);
    if (it == rows.end()) throw Error(ErrorCode::GridMismatch, "edge " + e.id + " missing from the solution");
    const auto& samples = it->second;
    if (static_cast<int>(samples.size()) != grid.cells(j) + 1) {
      throw Error(ErrorCode::GridMismatch, "edge " + e.id + " has " + std::to_string(samples.size()) +
                                               " samples, the grid has " + std::to_string(grid.cells(j) + 1));
    }
    for (int i = 0; i <= grid.cells(j); ++i) {
      const auto [s, v] = samples[static_cast<std::size_t>(i)];
      if (std::abs(s - grid.position(j, i)) > 1e-9 * e.length) {
        throw Error(ErrorCode::GridMismatch, "edge " + e.id + ": sample " + std::to_string(i) + " at s = " +
                                                 fmt17(s) + ", expected " + fmt17(grid.position(j, i)));
      }
      const Dof d = grid.node(j, i);
      if (!std::isnan(values[d]) && std::abs(values[d] - v) > scale_tol * std::max(1.0, std::abs(v))) {
        throw Error(ErrorCode::ContinuityMismatch, "edges disagree at vertex " + g.vertex_ids()[static_cast<std::size_t>(d)]);
      }
      values[d] = v;
    }
    rows.erase(it);
  }
  if (!rows.empty()) throw Error(ErrorCode::GridMismatch, "unknown edge " + rows.begin()->first + " in the solution");
  return GridFunction(grid, std::move(values));
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Kazdan-Warner equation on metric graphs", "kw"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "solve the problem in a problem file");
  solve_cmd->add_option("problem", sa.problem, "problem file (JSON)")->required();
  solve_cmd->add_option("--c", sa.c, "override c from the file");
  solve_cmd->add_option("--tol", sa.tol, "residual tolerance")->capture_default_str();
  solve_cmd->add_option("--max-iter", sa.max_iter, "iteration limit")->capture_default_str();
  solve_cmd->add_option("--cells", sa.cells, "cells on every edge")->check(CLI::Range(2, 1 << 24));
  solve_cmd->add_option("--out", sa.out, "output prefix (default: problem file without extension)");

  ThresholdArgs ta;
  auto* thr_cmd = app.add_subcommand("threshold", "bracket the solvability threshold c(h)");
  thr_cmd->add_option("problem", ta.problem, "problem file (JSON)")->required();
  thr_cmd->add_option("--bracket-tol", ta.bracket_tol, "bracket width (default 1e-4 of the analytic bound)");
  thr_cmd->add_option("--out", ta.out, "output prefix");

  VerifyArgs va;
  auto* ver_cmd = app.add_subcommand("verify", "check a solution file against a problem");
  ver_cmd->add_option("problem", va.problem, "problem file (JSON)")->required();
  ver_cmd->add_option("solution", va.solution, "solution CSV")->required();
  ver_cmd->add_option("--c", va.c, "override c from the file");
  ver_cmd->add_option("--tol", va.tol, "pass threshold for the residual")->capture_default_str();
  ver_cmd->add_option("--cells", va.cells, "cells on every edge")->check(CLI::Range(2, 1 << 24));
  ver_cmd->add_option("--out", va.out, "also write <prefix>.verify.report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? Ok : InputError;
  }

  if (solve_cmd->parsed()) return cmd_solve(sa, out, err);
  if (thr_cmd->parsed()) return cmd_threshold(ta, out, err);
  return cmd_verify(va, out, err);
}

}  // namespace kw::cli
