#pragma once

// Text formatting shared by the CSV writers.

#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace twistval {

/// %.17g, with "nan" for non-finite values; round-trips through strtod.
inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace twistval
