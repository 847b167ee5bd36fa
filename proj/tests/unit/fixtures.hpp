#pragma once
// Designs and small oracles shared by the unit tests.
#include <cmath>
#include <random>

#include "ssdlasso/design.hpp"

namespace fixtures {

// Sylvester Hadamard matrix of order 2^m.
inline ssdlasso::IntMatrix sylvester(int order) {
    ssdlasso::IntMatrix h(1, 1);
    h(0, 0) = 1;
    while (h.rows() < order) {
        const auto m = h.rows();
        ssdlasso::IntMatrix next(2 * m, 2 * m);
        next << h, h, h, -h;
        h = next;
    }
    return h;
}

// Columns 1..p of the Sylvester matrix: balanced and orthogonal.
inline ssdlasso::Design hadamard_design(int n, int p) {
    return ssdlasso::Design(sylvester(n).block(0, 1, n, p));
}

inline ssdlasso::Design random_design(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    ssdlasso::IntMatrix x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = coin(rng) ? 1 : -1;
    return ssdlasso::Design(x);
}

// Taylor series of the normal integral; fine for |x| < 6.
inline double series_cdf(double x) {
    double term = x, sum = x;
    for (int k = 1; k < 400; ++k) {
        term *= -x * x / (2.0 * k);
        sum += term / (2.0 * k + 1.0);
    }
    return 0.5 + sum / std::sqrt(2.0 * M_PI);
}

inline bool within(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace fixtures
