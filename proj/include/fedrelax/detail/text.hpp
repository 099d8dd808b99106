#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "fedrelax/error.hpp"

namespace fedrelax::detail {

// Formats with 17 significant digits so the value round-trips exactly.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Strict finite decimal literal: the whole token must parse and the
// value must be finite ("inf"/"nan" are rejected).
inline double parse_double(std::string_view token, const std::string& where) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw error(errc::parse, where + ": not a finite number: '" + std::string(token) + "'");
    }
    return value;
}

inline long long parse_int(std::string_view token, const std::string& where) {
    long long value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw error(errc::parse, where + ": not an integer: '" + std::string(token) + "'");
    }
    return value;
}

inline std::vector<std::string_view> split_csv_row(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace fedrelax::detail
