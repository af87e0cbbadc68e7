#include "tracelens/text_format.hpp"

#include "tracelens/errors.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace tracelens {

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    std::array<char, 32> buf;
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

std::string format_double17(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    std::array<char, 48> buf;
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
    std::string s(buf.data(), p);
    // to_chars drops trailing zeros; restore them so every value carries
    // exactly 17 significant digits.
    size_t exp = s.find('e');
    std::string mant = exp == std::string::npos ? s : s.substr(0, exp);
    int sig = 0;
    bool leading = true;
    for (char c : mant) {
        if (c < '0' || c > '9') continue;
        if (leading && c == '0') continue;
        leading = false;
        ++sig;
    }
    if (sig == 0) sig = 1;
    if (sig < 17) {
        if (mant.find('.') == std::string::npos) mant += '.';
        mant.append(static_cast<size_t>(17 - sig), '0');
    }
    return exp == std::string::npos ? mant : mant + s.substr(exp);
}

double parse_double(std::string_view text, std::string_view what) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
        throw InputError("bad " + std::string(what) + ": '" + std::string(text) + "'");
    return v;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
        throw InputError("bad " + std::string(what) + ": '" + std::string(text) + "'");
    return v;
}

namespace {

// Howard Hinnant's civil-days algorithm; valid over the whole int range.
std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += (m <= 2);
}

int two_digits(std::string_view s, size_t at, std::string_view what) {
    if (!std::isdigit(static_cast<unsigned char>(s[at])) ||
        !std::isdigit(static_cast<unsigned char>(s[at + 1])))
        throw InputError("bad timestamp " + std::string(what) + " in '" + std::string(s) + "'");
    return (s[at] - '0') * 10 + (s[at + 1] - '0');
}

} // namespace

std::int64_t parse_timestamp(std::string_view text) {
    // YYYY-MM-DD HH:MM:SS, exactly 19 chars
    if (text.size() != 19 || text[4] != '-' || text[7] != '-' ||
        text[10] != ' ' || text[13] != ':' || text[16] != ':')
        throw InputError("bad timestamp: '" + std::string(text) + "'");
    for (int i : {0, 1, 2, 3})
        if (!std::isdigit(static_cast<unsigned char>(text[i])))
            throw InputError("bad timestamp year in '" + std::string(text) + "'");
    std::int64_t year = (text[0] - '0') * 1000 + (text[1] - '0') * 100 +
                        (text[2] - '0') * 10 + (text[3] - '0');
    int month = two_digits(text, 5, "month");
    int day = two_digits(text, 8, "day");
    int hh = two_digits(text, 11, "hour");
    int mm = two_digits(text, 14, "minute");
    int ss = two_digits(text, 17, "second");
    if (month < 1 || month > 12 || day < 1 || hh > 23 || mm > 59 || ss > 59)
        throw InputError("timestamp out of range: '" + std::string(text) + "'");
    std::int64_t t = days_from_civil(year, month, day) * 86400 + hh * 3600 + mm * 60 + ss;
    // Catches Feb 30 and friends.
    if (format_timestamp(t) != text)
        throw InputError("invalid calendar date: '" + std::string(text) + "'");
    return t;
}

std::string format_timestamp(std::int64_t t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) { rem += 86400; days -= 1; }
    std::int64_t y; int m, d;
    civil_from_days(days, y, m, d);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02d %02d:%02d:%02d",
                  static_cast<long long>(y), m, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return std::string(buf);
}

} // namespace tracelens
