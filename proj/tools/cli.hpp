#ifndef MRSID_TOOLS_CLI_HPP
#define MRSID_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace mrsid::cli {

// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalFailure = 3 };

inline constexpr const char* kToolVersion = "0.1.0";

// Runs one command line (args[0] is the program name). Normal output goes to
// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mrsid::cli

#endif  // MRSID_TOOLS_CLI_HPP
