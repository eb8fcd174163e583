#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace modecert::cli {

/// Exit codes of every subcommand.
inline constexpr int kCertified = 0;
inline constexpr int kNotCertified = 1;
inline constexpr int kUsageError = 2;

/// Entry point shared by the executable and the tests. args excludes the
/// program name. Returns the process exit status.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace modecert::cli
