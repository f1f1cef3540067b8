#pragma once

#include <cstdio>
#include <string>

namespace nldiss::detail {

// Short %g rendering for error messages; std::to_string prints 1e-9 as 0.000000.
inline std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

}  // namespace nldiss::detail
