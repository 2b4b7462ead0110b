#pragma once

#include <string>
#include <string_view>

namespace fairnorm {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict full-string parses; return false on trailing junk or overflow.
bool parse_double(std::string_view s, double& out);
bool parse_int64(std::string_view s, long long& out);

std::string_view trim(std::string_view s) noexcept;

}  // namespace fairnorm
