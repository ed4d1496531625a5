#pragma once

// Command-line front end, callable in-process so tests can drive it.

#include <iosfwd>
#include <string>
#include <vector>

namespace tvs::cli {

enum ExitCode { Ok = 0, InputError = 2, Infeasible = 3, Numerical = 4 };

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvs::cli
