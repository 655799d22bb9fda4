#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "edmfde/types.hpp"

namespace edmfde::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInternalError = 2;

/// Threshold grid from a spec string: "sim" (simulation grid), "default"
/// (real-data grid), "log:LO:HI:N", or a comma-separated list.
std::vector<double> parse_grid(const std::string& spec, FdeMethod method);

/// Runs one command line. `argv[0]` is the program name. CSV goes to
/// `--out` when given, otherwise to `out`; usage and diagnostics go to `err`.
int cli_dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace edmfde::cli
