#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace pdv {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Duration = std::chrono::seconds;

/// Parses an RFC 3339 instant ("2024-01-01T00:00:00Z", optional fraction and offset).
Timestamp parse_rfc3339(std::string_view text);

/// Like parse_rfc3339 but accepts a prefix; `consumed` receives its length.
/// Returns nullopt when no timestamp starts at the beginning of `text`.
std::optional<Timestamp> scan_rfc3339(std::string_view text, std::size_t& consumed);

/// UTC, "Z" suffix, milliseconds only when non-zero.
std::string format_rfc3339(Timestamp t);

/// "15s", "30m", "1h". Throws unknown-duration-unit for other suffixes.
Duration parse_duration(std::string_view text);

/// Largest of h/m/s that divides the value exactly.
std::string format_duration(Duration d);

}  // namespace pdv
