#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <string_view>

#include "ailp/error.hpp"

namespace ailp {

using Timestamp = std::chrono::sys_seconds;

/// Injectable time source. Tests and fixture runs pin it; live runs use now().
using Clock = std::function<Timestamp()>;

inline Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

inline Clock system_clock() { return &system_now; }

inline Clock fixed_clock(Timestamp t) {
  return [t] { return t; };
}

/// "YYYY-MM-DDTHH:MM:SSZ"
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(hms.hours().count()), static_cast<long long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return buf;
}

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SSZ" and "YYYY-MM-DDTHH:MM:SS+00:00".
/// Fractional seconds are ignored. Non-UTC offsets are applied.
inline Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const std::string s(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3 || consumed != 10) {
    throw Error(ErrorKind::Parse, "bad timestamp: " + s);
  }
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') throw Error(ErrorKind::Parse, "bad timestamp: " + s);
    int n = 0;
    if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d:%2d%n", &h, &mi, &se, &n) != 3 || n != 8) {
      throw Error(ErrorKind::Parse, "bad timestamp: " + s);
    }
    pos += 9;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
  }
  int offset_minutes = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      // UTC
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() - pos == 6 && s[pos + 3] == ':') {
      int oh = 0, om = 0;
      if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2) {
        throw Error(ErrorKind::Parse, "bad timestamp offset: " + s);
      }
      offset_minutes = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
    } else {
      throw Error(ErrorKind::Parse, "bad timestamp: " + s);
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) throw Error(ErrorKind::Parse, "bad timestamp: " + s);
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{se} - minutes{offset_minutes};
}

}  // namespace ailp
