#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace hamesc::ode {

// Dormand-Prince 5(4) with the standard order-4 continuous extension.

enum class Status { completed, stopped_at_radius, step_underflow, max_steps_exceeded };

struct Options {
    double rtol = 1e-10;
    double atol = 1e-12;
    long max_steps = 2'000'000;
    double max_step = std::numeric_limits<double>::infinity();
    // When positive, integration halts (flagged, not an error) once the norm
    // of the first `radius_dim` state components reaches this value.
    double stop_radius = 0.0;
    int radius_dim = 0;
};

struct StepRecord {
    double t0 = 0.0;
    double h = 0.0;  // signed
    std::array<Eigen::VectorXd, 5> rcont;
};

class DenseSolution {
  public:
    void add(StepRecord s) { steps_.push_back(std::move(s)); }
    bool empty() const { return steps_.empty(); }
    double t_begin() const { return steps_.front().t0; }
    double t_end() const { return steps_.back().t0 + steps_.back().h; }

    bool covers(double t) const {
        if (steps_.empty()) return false;
        double a = t_begin(), b = t_end();
        if (a > b) std::swap(a, b);
        const double slack = 1e-9 * std::max(1.0, b - a);
        return t >= a - slack && t <= b + slack;
    }

    Eigen::VectorXd eval(double t) const {
        if (!covers(t))
            throw std::invalid_argument("DenseSolution::eval: time outside covered span");
        // Pull edge queries (endpoint rounding) back into the span.
        {
            double a = t_begin(), b = t_end();
            if (a > b) std::swap(a, b);
            t = std::clamp(t, a, b);
        }
        // Segments are monotone in t0; binary search on the signed direction.
        const bool fwd = steps_.front().h > 0.0;
        size_t lo = 0, hi = steps_.size() - 1;
        while (lo < hi) {
            const size_t mid = (lo + hi + 1) / 2;
            const bool before = fwd ? (steps_[mid].t0 <= t) : (steps_[mid].t0 >= t);
            if (before) lo = mid; else hi = mid - 1;
        }
        const StepRecord& s = steps_[lo];
        const double th = (t - s.t0) / s.h;
        const double th1 = 1.0 - th;
        return s.rcont[0] +
               th * (s.rcont[1] + th1 * (s.rcont[2] + th * (s.rcont[3] + th1 * s.rcont[4])));
    }

    const std::vector<StepRecord>& segments() const { return steps_; }

  private:
    std::vector<StepRecord> steps_;
};

struct Result {
    Status status = Status::completed;
    double t_final = 0.0;          // last accepted time
    Eigen::VectorXd y_final;       // state there
    DenseSolution dense;
    std::vector<double> t_nodes;   // accepted step times, including t0
    std::vector<Eigen::VectorXd> y_nodes;
    long accepted = 0;
    long rejected = 0;
};

namespace dp5 {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Error weights: order-5 minus embedded order-4 solution.
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous-extension weights.
inline constexpr double d1 = -12715105075.0 / 11282082432.0;
inline constexpr double d3 = 87487479700.0 / 32700410799.0;
inline constexpr double d4 = -10690763975.0 / 1880347072.0;
inline constexpr double d5 = 701980252875.0 / 199316789632.0;
inline constexpr double d6 = -1453857185.0 / 822651844.0;
inline constexpr double d7 = 69997945.0 / 29380423.0;
}  // namespace dp5

template <class RHS>
Result integrate(RHS&& rhs, Eigen::VectorXd y0, double t0, double t1, const Options& opt) {
    if (t1 == t0) throw std::invalid_argument("ode::integrate: zero time span");
    const int n = static_cast<int>(y0.size());
    const double dir = (t1 > t0) ? 1.0 : -1.0;

    Result out;
    out.t_nodes.push_back(t0);
    out.y_nodes.push_back(y0);

    Eigen::VectorXd k1 = rhs(t0, y0);

    // Initial step from the classic |y|/|f| heuristic, clipped to the span.
    double h = 0.01 * std::sqrt((y0.squaredNorm() + 1.0) / (k1.squaredNorm() + 1.0));
    h = std::min({h, std::abs(t1 - t0), opt.max_step});
    h *= dir;

    double t = t0;
    Eigen::VectorXd y = y0;
    Eigen::VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ynew(n), yerr(n);

    auto under = [&](double hh) {
        return std::abs(hh) < 16.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(1.0, std::abs(t));
    };

    while (dir * (t1 - t) > 0.0) {
        if (out.accepted + out.rejected >= opt.max_steps) {
            out.status = Status::max_steps_exceeded;
            break;
        }
        if (under(h)) {
            out.status = Status::step_underflow;
            break;
        }
        bool final_step = false;
        if (dir * (t + h - t1) > 0.0) {
            h = t1 - t;
            final_step = true;
        }

        using namespace dp5;
        k2 = rhs(t + c2 * h, y + h * (a21 * k1));
        k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = rhs(t + h, ynew);
        yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double q = yerr[i] / sc;
            err += q * q;
        }
        err = std::sqrt(err / n);

        if (err <= 1.0) {
            StepRecord rec;
            rec.t0 = t;
            rec.h = h;
            const Eigen::VectorXd ydiff = ynew - y;
            const Eigen::VectorXd bspl = h * k1 - ydiff;
            rec.rcont[0] = y;
            rec.rcont[1] = ydiff;
            rec.rcont[2] = bspl;
            rec.rcont[3] = ydiff - h * k7 - bspl;
            rec.rcont[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            out.dense.add(std::move(rec));

            t = final_step ? t1 : t + h;  // land on the endpoint exactly
            y = ynew;
            k1 = k7;  // FSAL
            ++out.accepted;
            out.t_nodes.push_back(t);
            out.y_nodes.push_back(y);

            if (opt.stop_radius > 0.0 && opt.radius_dim > 0 &&
                y.head(opt.radius_dim).norm() >= opt.stop_radius) {
                out.status = Status::stopped_at_radius;
                break;
            }
        } else {
            ++out.rejected;
        }

        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::clamp(fac, 0.2, 10.0);
        h *= fac;
        if (std::abs(h) > opt.max_step) h = dir * opt.max_step;
    }

    out.t_final = t;
    out.y_final = y;
    return out;
}

}  // namespace hamesc::ode
