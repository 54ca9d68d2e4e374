#pragma once

// Command-line front end: `kw solve`, `kw threshold`, `kw verify`.

#include <iosfwd>
#include <string>

#include "kw/grid.hpp"

namespace kw::cli {

enum ExitCode : int {
  Ok = 0,
  InputError = 1,
  NotSolvable = 2,
  SolverFailed = 3,
  VerifyFailed = 4,
};

/// argv[0] is the program name, argv[1] the subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Header `edge_id,s,u`; edges sorted by id, samples tail→head, s the
/// arclength from the tail, values printed with 17 significant digits.
void write_solution_csv(std::ostream& os, const GridFunction& u);

/// Reads a CSV written by write_solution_csv back onto `grid`. Throws
/// Error(GridMismatch) when edges, sample counts or positions disagree and
/// Error(ContinuityMismatch) when two edges disagree at a shared vertex.
GridFunction read_solution_csv(std::istream& is, const Grid& grid);

}  // namespace kw::cli
