#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drowsy {

/// Six decimals, '.' separator, no exponent; negative zero prints as "0.000000".
std::string format_fixed6(double v);

/// Strict whole-token parsers; nullopt on any trailing garbage.
std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<double> parse_real(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

} // namespace drowsy
