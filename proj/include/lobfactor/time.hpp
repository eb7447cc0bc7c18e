#pragma once

// Timestamps are nanoseconds since the Unix epoch (UTC). Days are UTC calendar days.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "lobfactor/error.hpp"

namespace lobfactor {

using Timestamp = std::int64_t;

inline constexpr std::int64_t kNanosPerSecond = 1'000'000'000;
inline constexpr std::int64_t kNanosPerDay = 86'400 * kNanosPerSecond;

/// Floor division so that pre-epoch timestamps land on the right day.
constexpr std::int64_t day_index(Timestamp ts) noexcept {
    std::int64_t d = ts / kNanosPerDay;
    if (ts % kNanosPerDay < 0) --d;
    return d;
}

constexpr std::int64_t time_of_day_ns(Timestamp ts) noexcept {
    return ts - day_index(ts) * kNanosPerDay;
}

namespace detail {

inline bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    const char* first = s.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc{} && ptr == first + len;
}

} // namespace detail

/// Parses "YYYY-MM-DDTHH:MM:SS[.fffffffff][Z]". A space may replace the 'T'.
inline Timestamp parse_iso8601(std::string_view s) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
    const bool ok = detail::parse_fixed(s, 0, 4, y) && s.size() > 4 && s[4] == '-' &&
                    detail::parse_fixed(s, 5, 2, mo) && s.size() > 7 && s[7] == '-' &&
                    detail::parse_fixed(s, 8, 2, d) && s.size() > 10 &&
                    (s[10] == 'T' || s[10] == ' ') && detail::parse_fixed(s, 11, 2, hh) &&
                    s.size() > 13 && s[13] == ':' && detail::parse_fixed(s, 14, 2, mm) &&
                    s.size() > 16 && s[16] == ':' && detail::parse_fixed(s, 17, 2, ss);
    if (!ok) throw Error("io.BadTimestamp", "malformed timestamp '" + std::string(s) + "'");

    std::size_t pos = 19;
    std::int64_t frac = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits == 9) {
                throw Error("io.BadTimestamp",
                            "more than nanosecond precision in '" + std::string(s) + "'");
            }
            frac = frac * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) throw Error("io.BadTimestamp", "empty fraction in '" + std::string(s) + "'");
        for (; digits < 9; ++digits) frac *= 10;
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
    if (pos != s.size()) throw Error("io.BadTimestamp", "trailing text in '" + std::string(s) + "'");

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
        throw Error("io.BadTimestamp", "invalid calendar value in '" + std::string(s) + "'");
    }
    const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
    return days * kNanosPerDay + (static_cast<std::int64_t>(hh) * 3600 + mm * 60 + ss) * kNanosPerSecond +
           frac;
}

/// Inverse of parse_iso8601, always with nine fractional digits and a trailing 'Z'.
inline std::string format_iso8601(Timestamp ts) {
    using namespace std::chrono;
    const std::int64_t days = day_index(ts);
    const std::int64_t tod = ts - days * kNanosPerDay;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    const std::int64_t secs = tod / kNanosPerSecond;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%09lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                  static_cast<long long>(secs % 60), static_cast<long long>(tod % kNanosPerSecond));
    return buf;
}

/// Daily trading window as offsets from midnight, closed on both ends.
struct TradingWindow {
    std::int64_t start_ns = 10 * 3600 * kNanosPerSecond;
    std::int64_t end_ns = 16 * 3600 * kNanosPerSecond;

    bool contains(Timestamp ts) const noexcept {
        const auto tod = time_of_day_ns(ts);
        return tod >= start_ns && tod <= end_ns;
    }

    /// "HH:MM-HH:MM"
    static TradingWindow parse(std::string_view s) {
        int h1 = 0, m1 = 0, h2 = 0, m2 = 0;
        const bool ok = s.size() == 11 && detail::parse_fixed(s, 0, 2, h1) && s[2] == ':' &&
                        detail::parse_fixed(s, 3, 2, m1) && s[5] == '-' &&
                        detail::parse_fixed(s, 6, 2, h2) && s[8] == ':' &&
                        detail::parse_fixed(s, 9, 2, m2);
        if (!ok || h1 > 24 || h2 > 24 || m1 > 59 || m2 > 59) {
            throw Error("config.BadWindow", "window must look like HH:MM-HH:MM, got '" + std::string(s) + "'");
        }
        TradingWindow w;
        w.start_ns = (static_cast<std::int64_t>(h1) * 3600 + m1 * 60) * kNanosPerSecond;
        w.end_ns = (static_cast<std::int64_t>(h2) * 3600 + m2 * 60) * kNanosPerSecond;
        if (w.start_ns >= w.end_ns) {
            throw Error("config.BadWindow", "window start must precede end in '" + std::string(s) + "'");
        }
        return w;
    }

    std::string to_string() const {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%02lld:%02lld-%02lld:%02lld",
                      static_cast<long long>(start_ns / kNanosPerSecond / 3600),
                      static_cast<long long>(start_ns / kNanosPerSecond / 60 % 60),
                      static_cast<long long>(end_ns / kNanosPerSecond / 3600),
                      static_cast<long long>(end_ns / kNanosPerSecond / 60 % 60));
        return buf;
    }
};

} // namespace lobfactor
