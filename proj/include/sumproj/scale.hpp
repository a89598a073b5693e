#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sumproj {

// Dyadic resolution delta = 2^-m. All grids, separations and covering
// counts in the library are anchored to one of these. m is capped at 20
// so that every grid-aligned coordinate is exactly representable and cell
// arithmetic in doubles is unambiguous.
struct Scale {
    int m = 1;

    explicit Scale(int m_) : m(m_) {
        if (m < 1 || m > 20)
            throw std::invalid_argument("Scale: m must be in [1, 20], got " + std::to_string(m));
    }

    double delta() const { return std::ldexp(1.0, -m); }

    // log2(1/delta); the library uses base-2 logs throughout so thresholds
    // are exactly computable.
    double log_inv_delta() const { return static_cast<double>(m); }

    // delta^x as a positive double (x may be negative).
    double delta_pow(double x) const { return std::exp2(-static_cast<double>(m) * x); }

    friend bool operator==(const Scale& a, const Scale& b) { return a.m == b.m; }
    friend bool operator!=(const Scale& a, const Scale& b) { return a.m != b.m; }
};

}  // namespace sumproj
