#include "treestrat/time.hpp"

#include <charconv>
#include <chrono>
#include <stdexcept>

namespace treestrat {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

[[noreturn]] void bad_timestamp(std::string_view text) {
    throw std::runtime_error("unparseable timestamp: '" + std::string(text) + "'");
}

int parse_fixed_uint(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    if (pos + len > text.size()) throw std::runtime_error("truncated field");
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') throw std::runtime_error("non-digit in numeric field");
        value = value * 10 + (c - '0');
    }
    return value;
}

void append_2d(std::string& out, int v) {
    out.push_back(static_cast<char>('0' + v / 10));
    out.push_back(static_cast<char>('0' + v % 10));
}

}  // namespace

Date local_date(const Timestamp& t) {
    std::int64_t local = t.epoch_sec + std::int64_t(t.offset_min) * 60;
    return Date{static_cast<std::int32_t>(floor_div(local, 86400))};
}

Date make_date(int year, unsigned month, unsigned day) {
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok()) throw std::runtime_error("invalid calendar date");
    return Date{static_cast<std::int32_t>(std::chrono::sys_days(ymd).time_since_epoch().count())};
}

std::string to_string(const Date& d) {
    std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{d.days}}};
    int y = static_cast<int>(ymd.year());
    std::string out;
    out.reserve(10);
    out += std::to_string(y / 1000 % 10);
    out += std::to_string(y / 100 % 10);
    out += std::to_string(y / 10 % 10);
    out += std::to_string(y % 10);
    out.push_back('-');
    append_2d(out, static_cast<int>(static_cast<unsigned>(ymd.month())));
    out.push_back('-');
    append_2d(out, static_cast<int>(static_cast<unsigned>(ymd.day())));
    return out;
}

Date parse_date(std::string_view text) {
    try {
        if (text.size() != 10 || text[4] != '-' || text[7] != '-')
            throw std::runtime_error("bad shape");
        int y = parse_fixed_uint(text, 0, 4);
        int mo = parse_fixed_uint(text, 5, 2);
        int dd = parse_fixed_uint(text, 8, 2);
        return make_date(y, static_cast<unsigned>(mo), static_cast<unsigned>(dd));
    } catch (const std::exception&) {
        throw std::runtime_error("unparseable date: '" + std::string(text) + "'");
    }
}

std::string to_iso(const Timestamp& t) {
    std::int64_t local = t.epoch_sec + std::int64_t(t.offset_min) * 60;
    std::int64_t days = floor_div(local, 86400);
    std::int64_t sod = local - days * 86400;
    std::string out = to_string(Date{static_cast<std::int32_t>(days)});
    out.push_back('T');
    append_2d(out, static_cast<int>(sod / 3600));
    out.push_back(':');
    append_2d(out, static_cast<int>(sod / 60 % 60));
    out.push_back(':');
    append_2d(out, static_cast<int>(sod % 60));
    std::int32_t off = t.offset_min;
    out.push_back(off < 0 ? '-' : '+');
    if (off < 0) off = -off;
    append_2d(out, off / 60);
    out.push_back(':');
    append_2d(out, off % 60);
    return out;
}

Timestamp parse_iso(std::string_view text) {
    try {
        if (text.size() < 20) throw std::runtime_error("too short");
        if (text[4] != '-' || text[7] != '-') throw std::runtime_error("bad date separators");
        if (text[10] != 'T' && text[10] != ' ') throw std::runtime_error("bad date/time separator");
        if (text[13] != ':' || text[16] != ':') throw std::runtime_error("bad time separators");
        int y = parse_fixed_uint(text, 0, 4);
        int mo = parse_fixed_uint(text, 5, 2);
        int dd = parse_fixed_uint(text, 8, 2);
        int hh = parse_fixed_uint(text, 11, 2);
        int mi = parse_fixed_uint(text, 14, 2);
        int ss = parse_fixed_uint(text, 17, 2);
        if (hh > 23 || mi > 59 || ss > 60) throw std::runtime_error("time field out of range");

        std::int32_t offset_min = 0;
        char tz = text[19];
        if (tz == 'Z') {
            if (text.size() != 20) throw std::runtime_error("trailing characters");
        } else if (tz == '+' || tz == '-') {
            if (text.size() != 25 || text[22] != ':') throw std::runtime_error("bad offset");
            int oh = parse_fixed_uint(text, 20, 2);
            int om = parse_fixed_uint(text, 23, 2);
            if (oh > 18 || om > 59) throw std::runtime_error("offset out of range");
            offset_min = oh * 60 + om;
            if (tz == '-') offset_min = -offset_min;
        } else {
            throw std::runtime_error("missing offset");
        }
        return make_timestamp(y, static_cast<unsigned>(mo), static_cast<unsigned>(dd), hh, mi, ss,
                              offset_min);
    } catch (const std::exception&) {
        bad_timestamp(text);
    }
}

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute, int second,
                         std::int32_t offset_min) {
    Date d = make_date(year, month, day);
    std::int64_t local =
        std::int64_t(d.days) * 86400 + hour * 3600 + minute * 60 + second;
    return Timestamp{local - std::int64_t(offset_min) * 60, offset_min};
}

}  // namespace treestrat
