#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace hamesc {

// Counter-based generator: output i is a pure function of (key, i), so
// substreams can be handed to worker threads in any order without changing
// the numbers any one consumer sees. The mixer is the splitmix64 finalizer.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Independent stream for a named purpose or a point index.
    CounterRng substream(std::uint64_t id) const { return CounterRng(mix(key_ ^ mix(id))); }

    std::uint64_t next_u64() { return mix(key_ ^ counter_++); }

    // Uniform in [0, 1) with 53 significant bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    // Box-Muller without state carry-over: two uniforms per normal keeps the
    // stream position a pure function of the call count.
    double normal() {
        double u1 = next_double();
        const double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    Eigen::VectorXd normal_vector(int dim) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v[i] = normal();
        return v;
    }

    // Uniform direction on the unit sphere; rejects the (measure-zero in
    // practice) near-zero draws.
    Eigen::VectorXd unit_vector(int dim) {
        for (;;) {
            Eigen::VectorXd v = normal_vector(dim);
            const double n = v.norm();
            if (n > 1e-8) return v / n;
        }
    }

    Eigen::VectorXd uniform_in_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
        Eigen::VectorXd v(lo.size());
        for (int i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
        return v;
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace hamesc
