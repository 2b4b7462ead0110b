#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fairnorm {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitInvariant = 3,
};

/// Hex SHA-1 of the git blob object holding `content` (what `git hash-object` prints).
std::string git_blob_sha1(std::string_view content);

/// Runs the command line `args` (program name excluded).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fairnorm
