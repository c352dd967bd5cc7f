#pragma once

// Small text helpers shared by the parsers and writers.

#include <charconv>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace flowlatin::text {

/// Strict decimal integer: the whole of `s` must be consumed, no '+', no
/// surrounding blanks. Out-of-range values yield nullopt.
template <std::integral T>
std::optional<T> parse_integer(std::string_view s) {
  if (s.empty()) return std::nullopt;
  T out{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return out;
}

/// Strict decimal or scientific double, also "inf"/"nan" spellings.
std::optional<double> parse_double(std::string_view s);

/// Shortest text that parses back to exactly `v`.
std::string format_double_exact(double v);

/// At most 6 significant digits, trailing zeros removed ("0.5", "1", "142.857").
std::string format_double_short(double v);

std::vector<std::string_view> split(std::string_view s, char sep);

/// Splits on '\n', dropping one trailing '\r' per line and the empty
/// remainder after a final newline.
std::vector<std::string_view> lines(std::string_view s);

bool is_space(char c) noexcept;

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace flowlatin::text
