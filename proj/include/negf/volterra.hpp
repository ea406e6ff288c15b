// volterra.hpp — discrete Volterra operator algebra on the time grid: application,
// composition, and the group inverse by causal forward substitution.
//
// A Volterra operator is V = I - B with a lower-triangular matrix-valued kernel
// B(t_k, t_k'), k' <= k. All integrals are trapezoid sums; on the sub-interval
// [t_k', t_k] the end points carry weight dt/2 and an empty interval carries none.

#pragma once

#include <optional>
#include <vector>

#include "negf/common.hpp"
#include "negf/grid.hpp"

namespace negf {

struct VolterraKernel {
    TimeGrid grid;
    int dim{0};
    std::vector<MatrixXcd> tri;  // row-major packed lower triangle, k >= k'
    // Optional growth-bound metadata: ||B(s,s')|| <= bound_b * e^{bound_gamma (s-s')}.
    std::optional<double> bound_b;
    std::optional<double> bound_gamma;

    static VolterraKernel zero(const TimeGrid& g, int dim) {
        VolterraKernel v;
        v.grid = g;
        v.dim = dim;
        const std::size_t np = g.points();
        v.tri.assign(np * (np + 1) / 2, MatrixXcd::Zero(dim, dim));
        return v;
    }

    static std::size_t packed(int k, int kp) {
        return static_cast<std::size_t>(k) * (k + 1) / 2 + kp;
    }

    MatrixXcd& at(int k, int kp) { return tri[packed(k, kp)]; }
    const MatrixXcd& at(int k, int kp) const { return tri[packed(k, kp)]; }

    // Value extended by zero above the diagonal.
    MatrixXcd value(int k, int kp) const {
        return kp <= k ? at(k, kp) : MatrixXcd::Zero(dim, dim);
    }

    VolterraKernel adjoint_mirror() const {
        VolterraKernel out = zero(grid, dim);
        for (int k = 0; k < grid.points(); ++k)
            for (int kp = 0; kp <= k; ++kp) out.at(k, kp) = at(k, kp).adjoint();
        return out;
    }

    double max_norm() const {
        double m = 0.0;
        for (const auto& cell : tri) m = std::max(m, max_abs(cell));
        return m;
    }
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* who) {
    if (!a.same_as(b)) throw ConfigError(std::string(who) + ": grid mismatch");
}

// (V phi)(t_k) = phi(t_k) - sum_{k' <= k} w_{k'} B(t_k, t_k') phi(t_k').
inline GridFunction kernel_apply(const VolterraKernel& b, const GridFunction& phi) {
    if (static_cast<int>(phi.size()) != b.grid.points())
        throw ConfigError("kernel_apply: grid mismatch");
    GridFunction out(phi.size());
    for (int k = 0; k < b.grid.points(); ++k) {
        MatrixXcd acc = phi[k];
        for (int kp = 0; kp <= k; ++kp)
            acc -= TimeGrid::segment_weight(kp, 0, k, b.grid.dt) * (b.at(k, kp) * phi[kp]);
        out[k] = acc;
    }
    return out;
}

// (B1 o B2)(t_k, t_k') = int_{t_k'}^{t_k} B1(t_k, r) B2(r, t_k') dr.
inline VolterraKernel kernel_compose(const VolterraKernel& b1, const VolterraKernel& b2) {
    require_same_grid(b1.grid, b2.grid, "kernel_compose");
    if (b1.dim != b2.dim) throw ConfigError("kernel_compose: dimension mismatch");
    VolterraKernel out = VolterraKernel::zero(b1.grid, b1.dim);
    const double dt = b1.grid.dt;
    parallel_for(b1.grid.points(), [&](int k) {
        for (int kp = 0; kp <= k; ++kp) {
            MatrixXcd acc = MatrixXcd::Zero(b1.dim, b2.dim);
            for (int r = kp; r <= k; ++r)
                acc += TimeGrid::segment_weight(r, kp, k, dt) * (b1.at(k, r) * b2.at(r, kp));
            out.at(k, kp) = acc;
        }
    });
    return out;
}

// Resolvent kernel R of V = I - B, so that V^{-1} = I + R and R = B + B o R.
// Solved by forward substitution in k; the implicit diagonal term
// (I - (dt/2) B(t_k, t_k)) is inverted per step, which requires dt < 1/||B||.
inline VolterraKernel kernel_invert(const VolterraKernel& b) {
    VolterraKernel r = VolterraKernel::zero(b.grid, b.dim);
    const double dt = b.grid.dt;
    const MatrixXcd eye = MatrixXcd::Identity(b.dim, b.dim);
    for (int k = 0; k < b.grid.points(); ++k) {
        const MatrixXcd lhs = eye - 0.5 * dt * b.at(k, k);
        const Eigen::FullPivLU<MatrixXcd> lu(lhs);
        if (!lu.isInvertible())
            throw NumericError("kernel_invert: implicit diagonal solve failed (dt too large)");
        for (int kp = k; kp >= 0; --kp) {
            if (kp == k) {
                r.at(k, k) = b.at(k, k);
                continue;
            }
            MatrixXcd rhs = b.at(k, kp);
            for (int j = kp; j < k; ++j)
                rhs += TimeGrid::segment_weight(j, kp, k, dt) * (b.at(k, j) * r.at(j, kp));
            r.at(k, kp) = lu.solve(rhs);
        }
    }
    if (b.bound_b && b.bound_gamma) {
        r.bound_b = *b.bound_b;
        r.bound_gamma = *b.bound_gamma + *b.bound_b;
    }
    return r;
}

// Truncated iterated-kernel series R ~ B + B o B + B o B o B + ...; retained as an
// independent route to cross-check kernel_invert.
inline VolterraKernel neumann_resolvent(const VolterraKernel& b, int terms) {
    VolterraKernel acc = b;
    VolterraKernel power = b;
    for (int n = 2; n <= terms; ++n) {
        power = kernel_compose(b, power);
        for (std::size_t i = 0; i < acc.tri.size(); ++i) acc.tri[i] += power.tri[i];
    }
    return acc;
}

// Max-norm residual of (I - B)(I + R) - I under the discrete composition.
inline double inverse_residual(const VolterraKernel& b, const VolterraKernel& r) {
    const VolterraKernel br = kernel_compose(b, r);
    double worst = 0.0;
    for (int k = 0; k < b.grid.points(); ++k)
        for (int kp = 0; kp <= k; ++kp)
            worst = std::max(worst, max_abs(r.at(k, kp) - b.at(k, kp) - br.at(k, kp)));
    return worst;
}

}  // namespace negf
