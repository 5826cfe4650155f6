#pragma once

// Command-line front end. Subcommands: gen-data, fit-surrogate, sweep-arch,
// train, eval, rolling, balance-sim, report.
// Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace dhc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
// argv without the program name
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dhc
