#include "hamesc/quadrature.hpp"

#include <cmath>

namespace hamesc {

GaussLegendre64::GaussLegendre64() {
    // Newton iteration on Legendre P_64 from the Chebyshev initial guess.
    for (int i = 0; i < 32; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (64 + 0.5));
        double p0 = 1.0, p1 = x, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = x;
            for (int j = 2; j <= 64; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = 64.0 * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        p0 = 1.0;
        p1 = x;
        for (int j = 2; j <= 64; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = 64.0 * (x * p1 - p0) / (x * x - 1.0);
        node[i] = x;
        weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

const GaussLegendre64& GaussLegendre64::instance() {
    static const GaussLegendre64 g;
    return g;
}

}  // namespace hamesc
