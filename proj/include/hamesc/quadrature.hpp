#pragma once

#include <array>
#include <functional>

namespace hamesc {

// 64-point Gauss-Legendre rule, nodes stored as 32 symmetric half-pairs.
// The nodes come from a deterministic Newton iteration, so every build and
// every thread sees bit-identical values.
struct GaussLegendre64 {
    std::array<double, 32> node;    // positive half-nodes on (0, 1)
    std::array<double, 32> weight;

    static const GaussLegendre64& instance();

    template <class Fn>
    double integrate(double a, double b, Fn&& f) const {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0.0;
        for (int i = 0; i < 32; ++i)
            s += weight[i] * (f(c + h * node[i]) + f(c - h * node[i]));
        return s * h;
    }

  private:
    GaussLegendre64();
};

}  // namespace hamesc
