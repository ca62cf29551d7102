#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace psp {

// Shortest round-trip decimal form; keeps golden dumps byte-stable.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    // normalize "-0" so dumps do not depend on the sign of a zero
    if (s == "-0") s = "0";
    return s;
}

} // namespace psp
