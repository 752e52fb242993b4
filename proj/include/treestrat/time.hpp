#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace treestrat {

// Minute instant with the exchange-local UTC offset it was quoted in.
// Ordering is by instant; equality is exact (instant and offset), which is
// what persistence round-trip checks want.
struct Timestamp {
    std::int64_t epoch_sec{0};
    std::int32_t offset_min{0};

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
    friend auto operator<=>(const Timestamp& a, const Timestamp& b) {
        return a.epoch_sec <=> b.epoch_sec;
    }
};

// Civil calendar day, stored as days since 1970-01-01.
struct Date {
    std::int32_t days{0};

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date&, const Date&) = default;
};

// Half-open interval [start, end) over instants.
struct TimeRange {
    Timestamp start;
    Timestamp end;

    bool contains(const Timestamp& t) const {
        return start.epoch_sec <= t.epoch_sec && t.epoch_sec < end.epoch_sec;
    }
    bool valid() const { return start.epoch_sec < end.epoch_sec; }
};

// Trading day of the bar in exchange-local time.
Date local_date(const Timestamp& t);

Date make_date(int year, unsigned month, unsigned day);

// "YYYY-MM-DD"
std::string to_string(const Date& d);
Date parse_date(std::string_view text);

// ISO-8601 with offset, e.g. "2022-01-03T09:15:00+05:30". "Z" is accepted on
// input and normalized to "+00:00" on output.
std::string to_iso(const Timestamp& t);
Timestamp parse_iso(std::string_view text);

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute,
                         int second = 0, std::int32_t offset_min = 0);

}  // namespace treestrat
