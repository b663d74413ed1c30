#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace bsodiag {

/// Signed offset in whole minutes from the outage instant. Negative values
/// lie before the outage.
struct TimeRef {
  std::int64_t minutes = 0;

  constexpr TimeRef() = default;
  constexpr explicit TimeRef(std::int64_t m) : minutes(m) {}

  constexpr double hours() const { return static_cast<double>(minutes) / 60.0; }

  friend constexpr auto operator<=>(TimeRef, TimeRef) = default;
  friend constexpr TimeRef operator+(TimeRef t, std::int64_t m) { return TimeRef{t.minutes + m}; }
  friend constexpr TimeRef operator-(TimeRef t, std::int64_t m) { return TimeRef{t.minutes - m}; }
};

using SysSeconds = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DDTHH:MM:SSZ` (UTC). Throws ParseError on anything else.
SysSeconds parse_iso8601(std::string_view text);
std::string format_iso8601(SysSeconds t);

/// Offset of `absolute` from `origin`, floored to whole minutes.
TimeRef to_relative(SysSeconds absolute, SysSeconds origin);
SysSeconds to_absolute(TimeRef relative, SysSeconds origin);

}  // namespace bsodiag
