// transport.hpp — lead currents (direct expectation and the spectral-measure current
// formula), the tunneling identity residual, particle density, and conservation.

#pragma once

#include <string>
#include <vector>

#include "negf/common.hpp"
#include "negf/context.hpp"
#include "negf/greens.hpp"

namespace negf {

struct CurrentTrace {
    int lead{0};
    std::string method;  // "direct", "jmw", or "langreth-reconstructed"
    std::vector<double> times;
    std::vector<double> values;
    double max_imag{0.0};  // largest imaginary residue dropped when taking the real part

    double max_abs_diff(const CurrentTrace& other) const {
        double worst = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            worst = std::max(worst, std::abs(values[i] - other.values[i]));
        return worst;
    }
};

// Current operator of lead j: J_j = i d_j (a*(psi_j) a(phi_j) - a*(phi_j) a(psi_j)).
inline ManyBodyOperator current_operator(const EDContext& ctx, int j) {
    const auto& ld = ctx.spec.leads[j];
    const VectorXcd psi = ctx.layout().embed_lead(j, ld.psi);
    const VectorXcd phi = ctx.layout().embed_sample(ld.phi);
    const MatrixXcd a_psi = annihilator(ctx.basis, psi);
    const MatrixXcd a_phi = annihilator(ctx.basis, phi);
    return kImag * ld.d *
           (a_psi.adjoint() * a_phi - a_phi.adjoint() * a_psi);
}

// I_j(t) = < tau_K^t(J_j) > by exact evolution.
inline CurrentTrace direct_current(const EDContext& ctx, int j, const TimeGrid& grid) {
    const StripeOp jop = to_frame_stripe(ctx.frame, current_operator(ctx, j), 0);
    const auto series = expectation_series(ctx.frame, ctx.rho_blk, jop, grid);
    CurrentTrace tr;
    tr.lead = j;
    tr.method = "direct";
    for (int k = 0; k < grid.points(); ++k) {
        tr.times.push_back(grid.t(k));
        tr.values.push_back(series[k].real());
        tr.max_imag = std::max(tr.max_imag, std::abs(series[k].imag()));
    }
    return tr;
}

// <phi_j| K |g-col> for a kernel over the union block {sample sites..., psi columns}.
inline cplx sandwich_row_phi(const GFKernel& kernel, const VectorXcd& phi_sample, int col,
                             int k, int kp) {
    cplx acc = 0.0;
    const MatrixXcd cell = kernel.at(k, kp);
    for (int x = 0; x < phi_sample.size(); ++x) acc += std::conj(phi_sample(x)) * cell(x, col);
    return acc;
}

inline cplx sandwich(const GFKernel& kernel, const VectorXcd& f, const VectorXcd& g, int k,
                     int kp) {
    return (f.adjoint() * kernel.at(k, kp) * g)(0, 0);
}

// I_j(t) = 2 d_j Re <phi_j|G^<(t,t)|psi_j> from a mixed lesser kernel whose column
// `psi_col` holds the lead contact vector.
inline CurrentTrace lesser_form_current(const EDContext& ctx, int j, const GFKernel& mixed_lesser,
                                        int psi_col) {
    const auto& ld = ctx.spec.leads[j];
    CurrentTrace tr;
    tr.lead = j;
    tr.method = "direct";
    for (int k = 0; k < mixed_lesser.grid.points(); ++k) {
        const cplx v = sandwich_row_phi(mixed_lesser, ld.phi, psi_col, k, k);
        tr.times.push_back(mixed_lesser.grid.t(k));
        tr.values.push_back(2.0 * ld.d * v.real());
    }
    return tr;
}

// Spectral-measure current formula:
//   I_j(t) = -2 d_j^2 int_0^t ds int dnu_j(E)
//            Im{ e^{i(t-s)E} <phi_j| G^<(t,s) + G^R(t,s) f_j(E) |phi_j> }.
// The E-integral is an exact finite sum over the point masses of nu_j; the s-integral
// is a trapezoid with the interior value of G^R at s = t.
inline CurrentTrace jmw_current(const EDContext& ctx, int j, const GFKernel& g_less_sample,
                                const GFKernel& g_ret_sample, const TimeGrid& grid) {
    const auto& ld = ctx.spec.leads[j];
    const SpectralMeasure nu = lead_spectral_measure(ld);
    std::vector<double> fermi_at(nu.size());
    for (int m = 0; m < nu.size(); ++m) fermi_at[m] = fermi(ld.beta * (nu.energy[m] - ld.mu));

    CurrentTrace tr;
    tr.lead = j;
    tr.method = "jmw";
    for (int k = 0; k < grid.points(); ++k) {
        double acc = 0.0;
        for (int s = 0; s <= k; ++s) {
            const cplx gl = sandwich(g_less_sample, ld.phi, ld.phi, k, s);
            const cplx gr = sandwich(g_ret_sample, ld.phi, ld.phi, k, s);
            double integrand = 0.0;
            for (int m = 0; m < nu.size(); ++m) {
                const cplx phase = std::exp(kImag * ((grid.t(k) - grid.t(s)) * nu.energy[m]));
                integrand += nu.weight[m] * (phase * (gl + gr * fermi_at[m])).imag();
            }
            acc += TimeGrid::segment_weight(s, 0, k, grid.dt) * integrand;
        }
        tr.times.push_back(grid.t(k));
        tr.values.push_back(-2.0 * ld.d * ld.d * acc);
    }
    return tr;
}

// Residual of the tunneling identity
//   <phi_j|G^<(t,t')|psi_j> = d_j int ( <phi|G^R(t,s)|phi><psi|G_D^<(s,t')|psi>
//                                     + <phi|G^<(t,s)|phi><psi|G_D^A(s,t')|psi> ) ds
// over an evenly spaced sub-grid of (t,t') pairs. The decoupled lead factors are
// exact spectral sums.
inline double langreth_residual(const EDContext& ctx, int j, const GFKernel& mixed_lesser,
                                int psi_col, const GFKernel& g_less_sample,
                                const GFKernel& g_ret_sample, int subgrid = 20) {
    const auto& ld = ctx.spec.leads[j];
    const TimeGrid& grid = mixed_lesser.grid;
    const SpectralMeasure nu = lead_spectral_measure(ld);
    std::vector<double> fermi_at(nu.size());
    for (int m = 0; m < nu.size(); ++m) fermi_at[m] = fermi(ld.beta * (nu.energy[m] - ld.mu));

    auto lead_lesser = [&](double s, double tp) {
        cplx acc = 0.0;
        for (int m = 0; m < nu.size(); ++m)
            acc += nu.weight[m] * fermi_at[m] * std::exp(kImag * ((tp - s) * nu.energy[m]));
        return kImag * acc;
    };
    auto lead_advanced_interior = [&](double s, double tp) {
        cplx acc = 0.0;
        for (int m = 0; m < nu.size(); ++m)
            acc += nu.weight[m] * std::exp(kImag * ((tp - s) * nu.energy[m]));
        return kImag * acc;
    };

    double worst = 0.0;
    for (int a = 0; a < subgrid; ++a) {
        const int k = static_cast<int>(std::lround(a * double(grid.n) / (subgrid - 1)));
        for (int b = 0; b < subgrid; ++b) {
            const int kp = static_cast<int>(std::lround(b * double(grid.n) / (subgrid - 1)));
            cplx rhs = 0.0;
            for (int s = 0; s <= k; ++s)
                rhs += TimeGrid::segment_weight(s, 0, k, grid.dt) *
                       sandwich(g_ret_sample, ld.phi, ld.phi, k, s) *
                       lead_lesser(grid.t(s), grid.t(kp));
            for (int s = 0; s <= kp; ++s)
                rhs += TimeGrid::segment_weight(s, 0, kp, grid.dt) *
                       sandwich(g_less_sample, ld.phi, ld.phi, k, s) *
                       lead_advanced_interior(grid.t(s), grid.t(kp));
            rhs *= ld.d;
            const cplx lhs = sandwich_row_phi(mixed_lesser, ld.phi, psi_col, k, kp);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

// rho(x,t) = Im <x|G^<(t,t)|x> from the kernel diagonal.
inline std::vector<double> particle_density(const GFKernel& g_less_sample, int x) {
    std::vector<double> rho;
    for (int k = 0; k < g_less_sample.grid.points(); ++k)
        rho.push_back(g_less_sample.at(k, k)(x, x).imag());
    return rho;
}

// <tau_K^t(N_x)> by exact evolution (oracle route for the density).
inline std::vector<double> density_by_evolution(const EDContext& ctx, int x,
                                                const TimeGrid& grid) {
    const StripeOp nx = to_frame_stripe(ctx.frame, site_number(ctx.basis, x), 0);
    const auto series = expectation_series(ctx.frame, ctx.rho_blk, nx, grid);
    std::vector<double> out;
    for (const auto& v : series) out.push_back(v.real());
    return out;
}

// Max_t | sum_j I_j(t) - d<N_S>/dt | with centered differences (second-order
// one-sided stencils at the end points).
inline double conservation_residual(const EDContext& ctx,
                                    const std::vector<CurrentTrace>& currents,
                                    const TimeGrid& grid) {
    MatrixXcd q_s = MatrixXcd::Zero(ctx.layout().total, ctx.layout().total);
    q_s.topLeftCorner(ctx.spec.sample_dim(), ctx.spec.sample_dim()) =
        MatrixXcd::Identity(ctx.spec.sample_dim(), ctx.spec.sample_dim());
    const StripeOp ns = to_frame_stripe(ctx.frame, second_quantize(ctx.basis, q_s), 0);
    const auto series = expectation_series(ctx.frame, ctx.rho_blk, ns, grid);
    std::vector<double> n(series.size());
    for (std::size_t k = 0; k < series.size(); ++k) n[k] = series[k].real();

    double worst = 0.0;
    const double dt = grid.dt;
    for (int k = 0; k < grid.points(); ++k) {
        double dn;
        if (k == 0)
            dn = (-3.0 * n[0] + 4.0 * n[1] - n[2]) / (2.0 * dt);
        else if (k == grid.n)
            dn = (3.0 * n[k] - 4.0 * n[k - 1] + n[k - 2]) / (2.0 * dt);
        else
            dn = (n[k + 1] - n[k - 1]) / (2.0 * dt);
        double sum = 0.0;
        for (const auto& tr : currents) sum += tr.values[k];
        worst = std::max(worst, std::abs(sum - dn));
    }
    return worst;
}

}  // namespace negf
