#include "bsodiag/time.hpp"

#include <charconv>
#include <cstdio>

#include "bsodiag/error.hpp"

namespace bsodiag {

namespace {

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  auto field = text.substr(pos, len);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError("timestamp", "bad numeric field in '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

SysSeconds parse_iso8601(std::string_view text) {
  // 2023-05-01T12:34:56Z
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != 'Z') {
    throw ParseError("timestamp", "expected YYYY-MM-DDTHH:MM:SSZ, got '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{parse_field(text, 0, 4)}, month{static_cast<unsigned>(parse_field(text, 5, 2))},
                           day{static_cast<unsigned>(parse_field(text, 8, 2))}};
  if (!ymd.ok()) throw ParseError("timestamp", "invalid calendar date '" + std::string(text) + "'");
  const int hh = parse_field(text, 11, 2);
  const int mm = parse_field(text, 14, 2);
  const int ss = parse_field(text, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw ParseError("timestamp", "invalid time of day '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_iso8601(SysSeconds t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

TimeRef to_relative(SysSeconds absolute, SysSeconds origin) {
  using namespace std::chrono;
  return TimeRef{floor<minutes>(absolute - origin).count()};
}

SysSeconds to_absolute(TimeRef relative, SysSeconds origin) {
  return origin + std::chrono::minutes{relative.minutes};
}

}  // namespace bsodiag
