#pragma once

#include <cmath>
#include <stdexcept>

#include "ringberry/numeric.hpp"

namespace ringberry {

struct EllipticKE {
    double K;
    double E;
};

// Complete elliptic integrals of the first and second kind, parameter
// m = k^2 in [0, 1). Arithmetic-geometric mean iteration, converges
// quadratically to ~1e-15.
inline EllipticKE elliptic_ke(double m) {
    if (m < 0.0 || m >= 1.0) throw std::domain_error("elliptic_ke: need 0 <= m < 1");
    double a = 1.0;
    double b = std::sqrt(1.0 - m);
    double sum = 0.5 * m;  // 2^{n-1} c_n^2 accumulator, n = 0 term with c_0^2 = m
    double p2 = 0.5;
    for (int i = 0; i < 64; ++i) {
        double c = 0.5 * (a - b);
        double an = 0.5 * (a + b);
        double bn = std::sqrt(a * b);
        p2 *= 2.0;
        sum += p2 * c * c;
        a = an;
        b = bn;
        if (c < 1e-16 * a) break;
    }
    EllipticKE out;
    out.K = pi / (2.0 * a);
    out.E = out.K * (1.0 - sum);
    return out;
}

}  // namespace ringberry
