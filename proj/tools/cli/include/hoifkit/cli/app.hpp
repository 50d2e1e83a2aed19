#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hoifkit::cli {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kConfigError = 2, kRejected = 3 };

/// Writes `content` to a sibling temporary file and renames it over `path`.
void atomic_write(const std::string& path, const std::string& content);

/// Parses argv, runs the subcommand and returns the process exit code.
/// The one-line JSON summary goes to `out`, diagnostics and usage to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hoifkit::cli
