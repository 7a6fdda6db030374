#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace panoflow::cli {

/// Runs the command line `args` (without the program name). Normal output goes
/// to `out`, diagnostics to `err`. Returns the process exit code:
/// 0 ok, 2 usage, 3 contract, 4 format, 5 I/O, 6 numeric, 1 anything else.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}
