#ifndef SBR_CLI_HPP
#define SBR_CLI_HPP

#include "sbr/multi_level.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sbr::cli {

enum ExitCode : int {
    kSuccess = 0,
    kConfigFailure = 2,
    kNumericalFailure = 3,
    kUsageFailure = 4,
};

/// Runs one command line (without the program name). Tables go to `out` or to
/// the --out file; errors are a single line on `err`.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Shortest decimal text that parses back to the same double.
std::string format_exact(double value);

/// Six significant digits, optionally scaled to percent.
std::string format_proportion(double value, bool percent);

/// "a,a1,b,b1,c,c1,d".
multi::State parse_state(const std::string &text);

} // namespace sbr::cli

#endif
