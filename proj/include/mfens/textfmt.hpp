#ifndef MFENS_TEXTFMT_HPP
#define MFENS_TEXTFMT_HPP

#include <cstdio>
#include <string>

namespace mfens {

// 17 significant digits: round-trip exact for 64-bit doubles.
inline std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// 10 significant digits, used for human-facing CSV/report output.
inline std::string fmt_g10(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace mfens

#endif
