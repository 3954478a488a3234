#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mortboost::text {

std::string_view trim(std::string_view s) noexcept;

/// Splits on a single character; keeps empty fields.
std::vector<std::string_view> split(std::string_view s, char delimiter);

/// Splits on runs of blanks/tabs.
std::vector<std::string_view> split_ws(std::string_view s);

/// Lines without their terminators; accepts LF and CRLF.
std::vector<std::string_view> lines(std::string_view s);

bool iequals(std::string_view a, std::string_view b) noexcept;
std::string to_lower(std::string_view s);

std::optional<std::int64_t> parse_int(std::string_view s) noexcept;
std::optional<double> parse_double(std::string_view s) noexcept;

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

} // namespace mortboost::text
