#pragma once

#include <cstdio>
#include <string>

namespace tgmem {

// Shortest representation that round-trips a double exactly; locale-free.
// Keeps CSV artifacts byte-stable across runs.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[32];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

// 1234567 -> "1,234,567"; for human-facing summary lines only.
inline std::string with_thousands(std::size_t n) {
    std::string digits = std::to_string(n);
    std::string out;
    out.reserve(digits.size() + digits.size() / 3);
    std::size_t lead = digits.size() % 3 == 0 ? 3 : digits.size() % 3;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i != 0 && (i - lead) % 3 == 0 && i >= lead) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

}  // namespace tgmem
