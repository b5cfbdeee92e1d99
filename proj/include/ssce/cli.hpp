#pragma once

#include <string>
#include <vector>

namespace ssce {

inline constexpr const char* tool_version = "1.0.0";

// Exit codes; kept distinct so scripts can tell failure classes apart.
inline constexpr int exit_ok = 0;             // success, no warnings
inline constexpr int exit_other = 1;          // unexpected/numerical failure
inline constexpr int exit_parse = 2;          // malformed input file
inline constexpr int exit_nonconvergence = 3; // estimator did not converge
inline constexpr int exit_config = 4;         // invalid flags or configuration
inline constexpr int exit_warnings = 5;       // converged, but with warnings

// Runs the tool on argv-style arguments (program name excluded).
int run_cli(const std::vector<std::string>& args);

} // namespace ssce
