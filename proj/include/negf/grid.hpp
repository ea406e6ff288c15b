// grid.hpp — uniform two-time grid with trapezoid weights

#pragma once

#include <cmath>
#include <vector>

#include "negf/common.hpp"

namespace negf {

// Uniform grid t_k = k*dt, k = 0..n, with n*dt = t_max.
struct TimeGrid {
    double t_max{0.0};
    double dt{0.0};
    int n{0};  // number of steps; n+1 points

    static TimeGrid make(double t_max, double dt) {
        if (dt <= 0.0) throw ConfigError("grid.dt: must be > 0");
        const double ratio = t_max / dt;
        const int n = static_cast<int>(std::lround(ratio));
        if (n < 1 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
            throw ConfigError("grid.t_max: must be an integer multiple of dt");
        TimeGrid g;
        g.t_max = t_max;
        g.dt = dt;
        g.n = n;
        return g;
    }

    int points() const { return n + 1; }
    double t(int k) const { return k * dt; }

    // Trapezoid weight of point k on [0, t_max].
    double weight(int k) const { return (k == 0 || k == n) ? 0.5 * dt : dt; }

    // Trapezoid weight of point k on the sub-interval [t_a, t_b] (grid indices a <= k <= b).
    // An empty interval (a == b) carries zero weight.
    static double segment_weight(int k, int a, int b, double dt) {
        if (a == b) return 0.0;
        return (k == a || k == b) ? 0.5 * dt : dt;
    }

    TimeGrid refined() const { return make(t_max, 0.5 * dt); }

    bool same_as(const TimeGrid& o) const {
        return n == o.n && std::abs(dt - o.dt) < 1e-15 && std::abs(t_max - o.t_max) < 1e-12;
    }
};

// A grid-sampled function with matrix values.
using GridFunction = std::vector<MatrixXcd>;

// A grid-sampled function with vector values (e.g. a one-particle wave packet per time).
using GridVectorFunction = std::vector<VectorXcd>;

}  // namespace negf
