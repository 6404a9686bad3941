#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scalelaw::cli {

// Runs one command line (program name excluded). Returns the process exit
// code: 0 success, 2 input/parse error, 3 ill-posed fit, 4 infeasible design
// query. Errors go to `err` as `code: <tag>: <message>`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scalelaw::cli
