#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace tkmx {

// Rounds half away from zero at the given number of decimals.
inline double round_half_up(double value, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

inline std::string fixed(double value, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, round_half_up(value, decimals));
    std::string s(buf);
    if (s == "-0" || s.rfind("-0.", 0) == 0) {
        // avoid printing negative zero
        bool all_zero = true;
        for (char c : s.substr(1)) {
            if (c != '0' && c != '.') {
                all_zero = false;
            }
        }
        if (all_zero) {
            s.erase(0, 1);
        }
    }
    return s;
}

} // namespace tkmx
