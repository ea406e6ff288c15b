// selfenergy.hpp — Hartree-Fock potential, reducible and irreducible retarded/advanced
// self-energies, the lesser source kernel with its coupling expansion, the lesser
// self-energy, and the dissipativity/positivity diagnostics.
//
// All self-energy kernels are supported on the sample block. Memory kernels are
// stored at reference energy zero; a complex energy z enters as the exact phase
// e^{i (s'-s) z}, which commutes with every composition used here.

#pragma once

#include <vector>

#include "negf/common.hpp"
#include "negf/context.hpp"
#include "negf/greens.hpp"
#include "negf/volterra.hpp"

namespace negf {

enum class SEBranch { retarded, advanced };

inline const char* branch_name(SEBranch b) {
    return b == SEBranch::retarded ? "retarded" : "advanced";
}

struct SelfEnergyKernel {
    SEBranch branch{SEBranch::retarded};
    double energy{0.0};  // metadata; kernels are stored at zero energy
    TimeGrid grid;
    GridFunction inst;  // instantaneous Hermitian part v_HF(t_k); empty when absent
    PairKernel mem;     // memory kernel, zero outside the branch support triangle

    int dim() const { return mem.rows; }
    bool in_support(int k, int kp) const {
        return branch == SEBranch::retarded ? k >= kp : k <= kp;
    }
};

// ------------------------------- composition helpers -------------------------------

// Triangular composition (A o B)(k,k') = int A(k,r) B(r,k') dr over the branch
// triangle: r in [k',k] for retarded kernels, r in [k,k'] for advanced ones.
inline PairKernel compose_triangular(const PairKernel& a, const PairKernel& b, SEBranch br) {
    if (!a.grid.same_as(b.grid)) throw ConfigError("compose_triangular: grid mismatch");
    PairKernel out = PairKernel::zero(a.grid, a.rows, b.cols);
    const double dt = a.grid.dt;
    parallel_for(a.grid.points(), [&](int k) {
        for (int kp = 0; kp < a.grid.points(); ++kp) {
            const int lo = br == SEBranch::retarded ? kp : k;
            const int hi = br == SEBranch::retarded ? k : kp;
            if (lo > hi) continue;
            MatrixXcd acc = MatrixXcd::Zero(a.rows, b.cols);
            for (int r = lo; r <= hi; ++r)
                acc += TimeGrid::segment_weight(r, lo, hi, dt) * (a.at(k, r) * b.at(r, kp));
            out.at(k, kp) = acc;
        }
    });
    return out;
}

// (X o S)(k,k') = int_0^{t_k} X(k,r) S(r,k') dr for retarded X and a full-square S.
inline PairKernel compose_causal_left(const PairKernel& x, const PairKernel& s) {
    if (!x.grid.same_as(s.grid)) throw ConfigError("compose_causal_left: grid mismatch");
    PairKernel out = PairKernel::zero(x.grid, x.rows, s.cols);
    const double dt = x.grid.dt;
    parallel_for(x.grid.points(), [&](int k) {
        for (int kp = 0; kp < x.grid.points(); ++kp) {
            MatrixXcd acc = MatrixXcd::Zero(x.rows, s.cols);
            for (int r = 0; r <= k; ++r)
                acc += TimeGrid::segment_weight(r, 0, k, dt) * (x.at(k, r) * s.at(r, kp));
            out.at(k, kp) = acc;
        }
    });
    return out;
}

// (S o Y)(k,k') = int_0^{t_k'} S(k,r) Y(r,k') dr for advanced Y and a full-square S.
inline PairKernel compose_causal_right(const PairKernel& s, const PairKernel& y) {
    if (!s.grid.same_as(y.grid)) throw ConfigError("compose_causal_right: grid mismatch");
    PairKernel out = PairKernel::zero(s.grid, s.rows, y.cols);
    const double dt = s.grid.dt;
    parallel_for(s.grid.points(), [&](int k) {
        for (int kp = 0; kp < s.grid.points(); ++kp) {
            MatrixXcd acc = MatrixXcd::Zero(s.rows, y.cols);
            for (int r = 0; r <= kp; ++r)
                acc += TimeGrid::segment_weight(r, 0, kp, dt) * (s.at(k, r) * y.at(r, kp));
            out.at(k, kp) = acc;
        }
    });
    return out;
}

// Kernel of Sigma o G: inst(k) G(k,k') + (mem o G)(k,k').
inline PairKernel se_compose_right(const SelfEnergyKernel& se, const PairKernel& g) {
    PairKernel out = compose_triangular(se.mem, g, se.branch);
    if (!se.inst.empty()) {
        for (int k = 0; k < se.grid.points(); ++k)
            for (int kp = 0; kp < se.grid.points(); ++kp) {
                if (!se.in_support(k, kp)) continue;
                out.at(k, kp) += se.inst[k] * g.at(k, kp);
            }
    }
    return out;
}

// Kernel of G o Sigma: G(k,k') inst(k') + (G o mem)(k,k').
inline PairKernel se_compose_left(const PairKernel& g, const SelfEnergyKernel& se) {
    PairKernel out = compose_triangular(g, se.mem, se.branch);
    if (!se.inst.empty()) {
        for (int k = 0; k < se.grid.points(); ++k)
            for (int kp = 0; kp < se.grid.points(); ++kp) {
                if (!se.in_support(k, kp)) continue;
                out.at(k, kp) += g.at(k, kp) * se.inst[kp];
            }
    }
    return out;
}

// Time reflection k -> n-k maps the advanced triangle onto the retarded one and
// commutes with the trapezoid composition.
inline PairKernel time_reflect(const PairKernel& a) {
    PairKernel out = PairKernel::zero(a.grid, a.rows, a.cols);
    const int n = a.grid.n;
    for (int k = 0; k <= n; ++k)
        for (int kp = 0; kp <= n; ++kp) out.at(k, kp) = a.at(n - k, n - kp);
    return out;
}

inline VolterraKernel lower_triangle_of(const PairKernel& a) {
    VolterraKernel v = VolterraKernel::zero(a.grid, a.rows);
    for (int k = 0; k < a.grid.points(); ++k)
        for (int kp = 0; kp <= k; ++kp) v.at(k, kp) = a.at(k, kp);
    return v;
}

inline PairKernel square_of(const VolterraKernel& v) {
    PairKernel out = PairKernel::zero(v.grid, v.dim, v.dim);
    for (int k = 0; k < v.grid.points(); ++k)
        for (int kp = 0; kp <= k; ++kp) out.at(k, kp) = v.at(k, kp);
    return out;
}

// ------------------------------- Hartree-Fock part -------------------------------

// v_HF(s)_{yx} = xi < tau_K^s( {a_y, [W, a*_x]} ) >, Hermitian sample matrix per s.
inline GridFunction hartree_fock_potential(const EDContext& ctx, const TimeGrid& grid) {
    const int ns = ctx.spec.sample_dim();
    GridFunction v(grid.points(), MatrixXcd::Zero(ns, ns));
    if (ctx.spec.xi == 0.0) return v;
    for (int y = 0; y < ns; ++y) {
        for (int x = 0; x < ns; ++x) {
            const MatrixXcd a_y = annihilator(ctx.basis, y);
            const MatrixXcd adag_x = creator(ctx.basis, x);
            const MatrixXcd comm = ctx.ham.W * adag_x - adag_x * ctx.ham.W;
            const MatrixXcd m = a_y * comm + comm * a_y;
            const StripeOp ms = to_frame_stripe(ctx.frame, m, 0);
            const auto series = expectation_series(ctx.frame, ctx.rho_blk, ms, grid);
            for (int k = 0; k < grid.points(); ++k) v[k](y, x) = ctx.spec.xi * series[k];
        }
    }
    return v;
}

// ------------------------------- reducible self-energy -------------------------------

// Commutator family b_x = i xi [W, a_x]; the memory kernel is built from the
// anticommutator correlators of these operators.
inline std::vector<StripeOp> interaction_commutators(const EDContext& ctx) {
    std::vector<StripeOp> ops;
    for (int x = 0; x < ctx.spec.sample_dim(); ++x) {
        const MatrixXcd a_x = annihilator(ctx.basis, x);
        const MatrixXcd b = kImag * ctx.spec.xi * (ctx.ham.W * a_x - a_x * ctx.ham.W);
        ops.push_back(to_frame_stripe(ctx.frame, b, -1));
    }
    return ops;
}

// Anticommutator kernel anti(y,x;k,k') = < { tau^{t_k}(b_y), tau^{t_k'}(b*_x) } >.
inline PairKernel commutator_anticommutator_kernel(const EDContext& ctx, const TimeGrid& grid) {
    const auto ops = interaction_commutators(ctx);
    const PairKernel xy = two_time_products(ctx.frame, ctx.rho_blk, ops, grid,
                                            ProductOrder::OpTimesAdjoint);
    const PairKernel yx = two_time_products(ctx.frame, ctx.rho_blk, ops, grid,
                                            ProductOrder::AdjointTimesOp);
    PairKernel anti = PairKernel::zero(grid, xy.rows, xy.cols);
    for (std::size_t i = 0; i < anti.vals.size(); ++i) anti.vals[i] = xy.vals[i] + yx.vals[i];
    return anti;
}

// Reducible self-energy: instantaneous v_HF plus the memory kernel
//   retarded:  -i theta(s-s')  e^{i(s'-s)z} anti(s,s')
//   advanced:  +i theta(s'-s)  e^{i(s'-s)z} anti(s,s')
// built from one anticommutator dataset (the energy phase stays symbolic).
inline SelfEnergyKernel reducible_kernel(const EDContext& ctx, const TimeGrid& grid,
                                         double energy, SEBranch branch,
                                         const PairKernel* anti_cache = nullptr,
                                         const GridFunction* vhf_cache = nullptr) {
    SelfEnergyKernel se;
    se.branch = branch;
    se.energy = energy;
    se.grid = grid;
    se.inst = vhf_cache ? *vhf_cache : hartree_fock_potential(ctx, grid);
    PairKernel anti =
        anti_cache ? *anti_cache : commutator_anticommutator_kernel(ctx, grid);
    se.mem = PairKernel::zero(grid, anti.rows, anti.cols);
    for (int k = 0; k < grid.points(); ++k)
        for (int kp = 0; kp < grid.points(); ++kp) {
            if (branch == SEBranch::retarded && k >= kp)
                se.mem.at(k, kp) = -kImag * anti.at(k, kp);
            if (branch == SEBranch::advanced && k <= kp)
                se.mem.at(k, kp) = kImag * anti.at(k, kp);
        }
    return se;
}

// Pairing residual || Sigma~^R(s,s')† - Sigma~^A(s',s) || over the grid (zero energy).
inline double adjoint_pairing_residual(const SelfEnergyKernel& ret, const SelfEnergyKernel& adv) {
    double worst = 0.0;
    for (int k = 0; k < ret.grid.points(); ++k)
        for (int kp = 0; kp <= k; ++kp)
            worst = std::max(worst, max_abs(ret.mem.at(k, kp).adjoint() - adv.mem.at(kp, k)));
    if (!ret.inst.empty() && !adv.inst.empty())
        for (int k = 0; k < ret.grid.points(); ++k)
            worst = std::max(worst, max_abs(ret.inst[k].adjoint() - adv.inst[k]));
    return worst;
}

// Max-norm residual of G = G0 + G0 Sigma~ G0 over the branch support.
inline double reducible_identity_residual(const GFKernel& g, const GFKernel& g0,
                                          const SelfEnergyKernel& red) {
    const SEBranch br = red.branch;
    const PairKernel rhs_inner = se_compose_right(red, g0.data);
    const PairKernel rhs = compose_triangular(g0.data, rhs_inner, br);
    double worst = 0.0;
    for (int k = 0; k < red.grid.points(); ++k)
        for (int kp = 0; kp < red.grid.points(); ++kp) {
            if (!red.in_support(k, kp)) continue;
            worst = std::max(worst,
                             max_abs(g.data.at(k, kp) - g0.data.at(k, kp) - rhs.at(k, kp)));
        }
    return worst;
}

// Irreducible self-energy Sigma = Sigma~ (I + G0 Sigma~)^{-1}. The advanced branch
// is solved through the exact time-reflection onto the retarded triangle.
inline SelfEnergyKernel irreducible_from_reducible(const SelfEnergyKernel& red,
                                                   const GFKernel& g0) {
    const SEBranch br = red.branch;
    SelfEnergyKernel out;
    out.branch = br;
    out.energy = red.energy;
    out.grid = red.grid;
    out.inst = red.inst;

    auto build_retarded = [](const SelfEnergyKernel& se, const PairKernel& g0k) {
        // B = -(G0 o Sigma~); (I - B)^{-1} = I + R by forward substitution.
        PairKernel g0_sigma = se_compose_left(g0k, se);
        for (auto& cell : g0_sigma.vals) cell = -cell;
        const VolterraKernel resolvent = kernel_invert(lower_triangle_of(g0_sigma));
        const PairKernel r = square_of(resolvent);
        // Sigma = Sigma~ (I + R): memory = mem + inst R + mem o R.
        PairKernel mem = compose_triangular(se.mem, r, SEBranch::retarded);
        for (int k = 0; k < se.grid.points(); ++k)
            for (int kp = 0; kp <= k; ++kp) {
                mem.at(k, kp) += se.mem.at(k, kp);
                if (!se.inst.empty()) mem.at(k, kp) += se.inst[k] * r.at(k, kp);
            }
        return mem;
    };

    if (br == SEBranch::retarded) {
        out.mem = build_retarded(red, g0.data);
    } else {
        SelfEnergyKernel red_rev;
        red_rev.branch = SEBranch::retarded;
        red_rev.grid = red.grid;
        red_rev.mem = time_reflect(red.mem);
        red_rev.inst = red.inst;
        if (!red.inst.empty()) {
            for (int k = 0; k < red.grid.points(); ++k)
                red_rev.inst[k] = red.inst[red.grid.n - k];
        }
        const PairKernel g0_rev = time_reflect(g0.data);
        out.mem = time_reflect(build_retarded(red_rev, g0_rev));
    }
    return out;
}

// Residual of the Dyson equation in either ordering.
inline double dyson_residual(const GFKernel& g, const GFKernel& g0, const SelfEnergyKernel& irr,
                             bool g0_outside_left) {
    const SEBranch br = irr.branch;
    PairKernel rhs;
    if (g0_outside_left) {
        rhs = compose_triangular(g0.data, se_compose_right(irr, g.data), br);
    } else {
        rhs = compose_triangular(se_compose_left(g.data, irr), g0.data, br);
    }
    double worst = 0.0;
    for (int k = 0; k < irr.grid.points(); ++k)
        for (int kp = 0; kp < irr.grid.points(); ++kp) {
            if (!irr.in_support(k, kp)) continue;
            worst = std::max(worst,
                             max_abs(g.data.at(k, kp) - g0.data.at(k, kp) - rhs.at(k, kp)));
        }
    return worst;
}

// ------------------------------- lesser source kernel -------------------------------

struct LesserSource {
    TimeGrid grid;
    PairKernel s_full;   // S^<(s,s')
    PairKernel s_zero;   // coupling order 0 (closed one-body form)
    PairKernel s_one;    // coupling order 1 (closed one-body form)
};

// Wick-derived sign of the first-order term. The quasi-free four-point function
//   <a*(f1) a(g1) a*(f2) a(g2)> = <a*(f1)a(g1)><a*(f2)a(g2)> + <a*(f1)a(g2)><a(g1)a*(f2)>
// fixes the sign used below; the unit tests pin it against a finite-coupling
// difference of the exact kernel.
inline constexpr double kSOneSign = 1.0;

inline LesserSource lesser_source_kernel(const EDContext& ctx, const TimeGrid& grid) {
    if (!ctx.sample_is_vacuum())
        throw ConfigError(
            "lesser_source_kernel: the sample factor of the initial state must be the vacuum");
    const int ns = ctx.spec.sample_dim();
    const int nm = ctx.layout().total;
    const double xi = ctx.spec.xi;
    const int np = grid.points();

    LesserSource out;
    out.grid = grid;
    out.s_full = PairKernel::zero(grid, ns, ns);
    out.s_zero = PairKernel::zero(grid, ns, ns);
    out.s_one = PairKernel::zero(grid, ns, ns);

    // One-body evolutions.
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es_h(ctx.sys.h);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es_hd(ctx.sys.h_d);
    auto expm = [](const Eigen::SelfAdjointEigenSolver<MatrixXcd>& es, double t) {
        VectorXcd z(es.eigenvalues().size());
        for (long q = 0; q < z.size(); ++q) z(q) = std::exp(kImag * (t * es.eigenvalues()(q)));
        return MatrixXcd(es.eigenvectors() * z.asDiagonal() * es.eigenvectors().adjoint());
    };
    std::vector<MatrixXcd> e_h(np), e_hd(np);
    for (int k = 0; k < np; ++k) {
        e_h[k] = expm(es_h, grid.t(k));
        e_hd[k] = expm(es_hd, grid.t(k));
    }

    // u_x(s) = e^{i s h_D} h_T delta_x (lead-supported).
    std::vector<std::vector<VectorXcd>> u(np, std::vector<VectorXcd>(ns));
    for (int k = 0; k < np; ++k)
        for (int x = 0; x < ns; ++x) u[k][x] = e_hd[k] * (ctx.sys.h_t.col(x));

    const MatrixXcd& varrho = ctx.state.varrho;

    // Order xi^1 cross terms: g_{i,x}(s) = < a*_i tau_K^s(a_x V_x) >.
    std::vector<std::vector<std::vector<cplx>>> gser(
        nm, std::vector<std::vector<cplx>>(ns));
    std::vector<StripeOp> cx_ops;
    for (int x = 0; x < ns; ++x) {
        const MatrixXcd c =
            annihilator(ctx.basis, x) * interaction_neighborhood(ctx.basis, ctx.spec, x);
        cx_ops.push_back(to_frame_stripe(ctx.frame, c, -1));
    }
    for (int i = 0; i < nm; ++i) {
        const StripeOp adag_i = to_frame_stripe(ctx.frame, creator(ctx.basis, i), +1);
        for (int x = 0; x < ns; ++x)
            gser[i][x] = product_series(ctx.frame, ctx.rho_blk, adag_i, cx_ops[x], grid);
    }

    // Order xi^2 term: < tau^{s'}(C_{x'}†) tau^{s}(C_x) >.
    const PairKernel c_yx =
        two_time_products(ctx.frame, ctx.rho_blk, cx_ops, grid, ProductOrder::AdjointTimesOp);

    for (int k = 0; k < np; ++k) {
        for (int kp = 0; kp < np; ++kp) {
            MatrixXcd s00(ns, ns), cross(ns, ns);
            for (int x = 0; x < ns; ++x) {
                for (int xp = 0; xp < ns; ++xp) {
                    s00(x, xp) = u[k][x].dot(varrho * u[kp][xp]);
                    cplx t01 = 0.0, t10 = 0.0;
                    for (int i = 0; i < nm; ++i) {
                        t01 += u[kp][xp](i) * gser[i][x][k];
                        t10 += std::conj(u[k][x](i) * gser[i][xp][kp]);
                    }
                    cross(x, xp) = t01 + t10;
                }
            }
            out.s_zero.at(k, kp) = kImag * s00;
            out.s_full.at(k, kp) =
                kImag * (s00 + xi * cross) + kImag * xi * xi * c_yx.at(k, kp);
        }
    }

    // Closed first-order form (Wick contraction of the order-xi cross terms at
    // fixed free evolution).
    const MatrixXcd& h_t = ctx.sys.h_t;
    for (int k = 0; k < np; ++k) {
        const MatrixXcd rho_k = e_h[k].adjoint() * varrho * e_h[k];  // e^{-ish} rho e^{ish}
        for (int kp = 0; kp < np; ++kp) {
            const MatrixXcd a_kkp = e_h[k].adjoint() * varrho * e_hd[kp] * h_t;
            const MatrixXcd rho_kp = e_h[kp].adjoint() * varrho * e_h[kp];
            const MatrixXcd b_kkp = (e_h[kp].adjoint() * varrho * e_hd[k] * h_t).adjoint();
            MatrixXcd s1(ns, ns);
            for (int x = 0; x < ns; ++x)
                for (int xp = 0; xp < ns; ++xp) {
                    cplx p = 0.0, q = 0.0;
                    for (int y = 0; y < ns; ++y) {
                        p += ctx.spec.w(x, y) *
                             (a_kkp(x, xp) * rho_k(y, y) - rho_k(x, y) * a_kkp(y, xp));
                        q += ctx.spec.w(xp, y) *
                             (b_kkp(x, xp) * rho_kp(y, y) - b_kkp(x, y) * rho_kp(y, xp));
                    }
                    s1(x, xp) = p + q;
                }
            out.s_one.at(k, kp) = kSOneSign * kImag * s1;
        }
    }
    return out;
}

// Independent route to the zeroth-order kernel through the lead spectral measures:
//   S^{<(0)}_{xx'}(s,s') = i sum_j d_j^2 ( sum_m w_m e^{i(s'-s)E_m} f_j(E_m) )
//                          <x|phi_j><phi_j|x'>.
inline PairKernel lesser_source_spectral_route(const ModelSpec& spec, const TimeGrid& grid) {
    const int ns = spec.sample_dim();
    PairKernel out = PairKernel::zero(grid, ns, ns);
    for (int j = 0; j < spec.lead_count(); ++j) {
        const auto& ld = spec.leads[j];
        const SpectralMeasure nu = lead_spectral_measure(ld);
        for (int k = 0; k < grid.points(); ++k)
            for (int kp = 0; kp < grid.points(); ++kp) {
                cplx phase_sum = 0.0;
                for (int m = 0; m < nu.size(); ++m)
                    phase_sum += nu.weight[m] *
                                 std::exp(kImag * ((grid.t(kp) - grid.t(k)) * nu.energy[m])) *
                                 fermi(ld.beta * (nu.energy[m] - ld.mu));
                for (int x = 0; x < ns; ++x)
                    for (int xp = 0; xp < ns; ++xp)
                        out.at(k, kp)(x, xp) += kImag * ld.d * ld.d * phase_sum * ld.phi(x) *
                                                std::conj(ld.phi(xp));
            }
    }
    return out;
}

// Residual of G^<(t,t') = int int G_0^R(t,s) S^<(s,s') G_0^A(s',t') ds ds'.
inline double keldysh_decoupling_residual(const GFKernel& g_less, const PairKernel& source,
                                          const GFKernel& g0_ret, const GFKernel& g0_adv) {
    const PairKernel tmp = compose_causal_left(g0_ret.data, source);
    const PairKernel rhs = compose_causal_right(tmp, g0_adv.data);
    double worst = 0.0;
    for (int k = 0; k < g_less.grid.points(); ++k)
        for (int kp = 0; kp < g_less.grid.points(); ++kp)
            worst = std::max(worst, max_abs(g_less.data.at(k, kp) - rhs.at(k, kp)));
    return worst;
}

// Lesser self-energy Sigma^< = (I - Sigma^R G_0^R) S^< (I - G_0^A Sigma^A).
inline PairKernel lesser_sigma(const PairKernel& source, const SelfEnergyKernel& sigma_ret,
                               const SelfEnergyKernel& sigma_adv, const GFKernel& g0_ret,
                               const GFKernel& g0_adv) {
    const PairKernel xr = se_compose_right(sigma_ret, g0_ret.data);   // Sigma^R G_0^R, retarded
    const PairKernel ya = se_compose_left(g0_adv.data, sigma_adv);    // G_0^A Sigma^A, advanced
    const PairKernel sy = compose_causal_right(source, ya);
    PairKernel out = source;
    const PairKernel xs = compose_causal_left(xr, source);
    const PairKernel xsy = compose_causal_left(xr, sy);
    for (std::size_t i = 0; i < out.vals.size(); ++i)
        out.vals[i] += -xs.vals[i] - sy.vals[i] + xsy.vals[i];
    return out;
}

// Residual of G^<(t,t') = int int G^R(t,s) Sigma^<(s,s') G^A(s',t') ds ds'.
inline double keldysh_identity_residual(const GFKernel& g_less, const GFKernel& g_ret,
                                        const PairKernel& sigma_less, const GFKernel& g_adv) {
    const PairKernel tmp = compose_causal_left(g_ret.data, sigma_less);
    const PairKernel rhs = compose_causal_right(tmp, g_adv.data);
    double worst = 0.0;
    for (int k = 0; k < g_less.grid.points(); ++k)
        for (int kp = 0; kp < g_less.grid.points(); ++kp)
            worst = std::max(worst, max_abs(g_less.data.at(k, kp) - rhs.at(k, kp)));
    return worst;
}

// ------------------------------- dissipativity checks -------------------------------

// Im of the double time integral of <phi(s)| M(z|s,s') |phi(s')> over 0<=s'<=s<=T for a
// retarded memory kernel M stored at zero energy, with z = E - i eta.
inline double retarded_quadratic_form_imag(const PairKernel& mem, const GridVectorFunction& phi,
                                           double energy, double eta) {
    const TimeGrid& g = mem.grid;
    cplx acc = 0.0;
    for (int k = 0; k < g.points(); ++k) {
        for (int kp = 0; kp <= k; ++kp) {
            const double tau = g.t(kp) - g.t(k);  // s' - s <= 0
            const cplx phase = std::exp(kImag * (tau * energy)) * std::exp(eta * tau);
            acc += g.weight(k) * TimeGrid::segment_weight(kp, 0, k, g.dt) * phase *
                   phi[k].dot(mem.at(k, kp) * phi[kp]);
        }
    }
    return acc.imag();
}

// Smallest eigenvalue of the Hermitian part of
//   int_0^T ds int_0^s ds' e^{-eta(s-s')} A_s† A_{s'}
// for a grid family of matrices A_s.
inline double positivity_form_min_eigenvalue(const std::vector<MatrixXcd>& family,
                                             const TimeGrid& g, double eta) {
    const int d = static_cast<int>(family.front().rows());
    MatrixXcd acc = MatrixXcd::Zero(d, d);
    for (int k = 0; k < g.points(); ++k)
        for (int kp = 0; kp <= k; ++kp)
            acc += g.weight(k) * TimeGrid::segment_weight(kp, 0, k, g.dt) *
                   std::exp(-eta * (g.t(k) - g.t(kp))) * (family[k].adjoint() * family[kp]);
    const MatrixXcd herm = 0.5 * (acc + acc.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm);
    return es.eigenvalues().minCoeff();
}

// Im < phi | (z + Sigma^-(z)) phi > on the grid, including the instantaneous part.
inline double irreducible_dissipativity_form(const SelfEnergyKernel& irr,
                                             const GridVectorFunction& phi, double energy,
                                             double eta) {
    const TimeGrid& g = irr.grid;
    double norm2 = 0.0;
    cplx inst_part = 0.0;
    for (int k = 0; k < g.points(); ++k) {
        norm2 += g.weight(k) * phi[k].squaredNorm();
        if (!irr.inst.empty()) inst_part += g.weight(k) * phi[k].dot(irr.inst[k] * phi[k]);
    }
    const double mem_part = retarded_quadratic_form_imag(irr.mem, phi, energy, eta);
    return -eta * norm2 + inst_part.imag() + mem_part;
}

// ------------------------------- effective propagator -------------------------------

struct PropagatorRun {
    GridVectorFunction ode;       // Crank-Nicolson march with the memory term
    GridVectorFunction integral;  // Volterra solve of the equivalent integral equation
    double max_norm_growth{0.0};  // max_k ||phi_k|| / ||phi_0|| - 1
    double route_gap{0.0};        // max_k ||ode_k - integral_k||
};

// Solve i d/ds phi = (h + z) phi + (Sigma^- phi)(s) with phi(0) given, for
// Im z <= 0. The self-energy lives on the sample block and is embedded into the
// full one-particle space.
inline PropagatorRun effective_propagator(const MatrixXcd& h, const SelfEnergyKernel& irr,
                                          cplx z, const VectorXcd& phi0, const TimeGrid& g) {
    const int n_full = static_cast<int>(h.rows());
    const int ns = irr.dim();
    auto embed = [&](const MatrixXcd& m) {
        MatrixXcd out = MatrixXcd::Zero(n_full, n_full);
        out.topLeftCorner(ns, ns) = m;
        return out;
    };
    const double energy = z.real();
    const double eta = -z.imag();
    if (eta < 0.0) throw ConfigError("effective_propagator: Im z must be <= 0");
    auto mem_at = [&](int k, int kp) {
        const double tau = g.t(kp) - g.t(k);
        const cplx phase = std::exp(kImag * (tau * energy)) * std::exp(eta * tau);
        return MatrixXcd(phase * embed(irr.mem.at(k, kp)));
    };

    PropagatorRun run;
    const MatrixXcd eye = MatrixXcd::Identity(n_full, n_full);
    const MatrixXcd hz = h + z * eye;

    // Crank-Nicolson march with trapezoid memory.
    run.ode.assign(g.points(), VectorXcd::Zero(n_full));
    run.ode[0] = phi0;
    std::vector<MatrixXcd> vfull(g.points(), MatrixXcd::Zero(n_full, n_full));
    if (!irr.inst.empty())
        for (int k = 0; k < g.points(); ++k) vfull[k] = embed(irr.inst[k]);
    for (int k = 0; k + 1 < g.points(); ++k) {
        VectorXcd mem_k = VectorXcd::Zero(n_full);
        for (int j = 0; j <= k; ++j)
            mem_k += TimeGrid::segment_weight(j, 0, k, g.dt) * (mem_at(k, j) * run.ode[j]);
        VectorXcd mem_next_known = VectorXcd::Zero(n_full);
        for (int j = 0; j <= k; ++j)
            mem_next_known +=
                TimeGrid::segment_weight(j, 0, k + 1, g.dt) * (mem_at(k + 1, j) * run.ode[j]);
        const MatrixXcd lhs = eye + kImag * (0.5 * g.dt) * (hz + vfull[k + 1]) +
                              kImag * (0.25 * g.dt * g.dt) * mem_at(k + 1, k + 1);
        const VectorXcd rhs = run.ode[k] -
                              kImag * (0.5 * g.dt) * ((hz + vfull[k]) * run.ode[k]) -
                              kImag * (0.5 * g.dt) * (mem_k + mem_next_known);
        Eigen::FullPivLU<MatrixXcd> lu(lhs);
        if (!lu.isInvertible())
            throw NumericError("effective_propagator: implicit step failed (dt too large)");
        run.ode[k + 1] = lu.solve(rhs);
    }

    // Integral-equation route: (I - G_0^-(z) Sigma^-(z)) phi = e^{-is(h+z)} phi0.
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    auto free_prop = [&](double t) {
        VectorXcd zf(es.eigenvalues().size());
        for (long q = 0; q < zf.size(); ++q)
            zf(q) = std::exp(-kImag * (t * es.eigenvalues()(q))) * std::exp(-kImag * (t * z));
        return MatrixXcd(es.eigenvectors() * zf.asDiagonal() * es.eigenvectors().adjoint());
    };
    PairKernel g0 = PairKernel::zero(g, n_full, n_full);
    for (int k = 0; k < g.points(); ++k)
        for (int kp = 0; kp <= k; ++kp) g0.at(k, kp) = -kImag * free_prop(g.t(k) - g.t(kp));
    PairKernel se_full = PairKernel::zero(g, n_full, n_full);
    for (int k = 0; k < g.points(); ++k)
        for (int kp = 0; kp <= k; ++kp) se_full.at(k, kp) = mem_at(k, kp);
    PairKernel b = compose_triangular(g0, se_full, SEBranch::retarded);
    for (int k = 0; k < g.points(); ++k)
        for (int kp = 0; kp <= k; ++kp) b.at(k, kp) += g0.at(k, kp) * vfull[kp];
    const VolterraKernel resolvent = kernel_invert(lower_triangle_of(b));
    GridFunction psi(g.points());
    for (int k = 0; k < g.points(); ++k) psi[k] = free_prop(g.t(k)) * phi0;
    // phi = (I + R) psi
    run.integral.assign(g.points(), VectorXcd::Zero(n_full));
    for (int k = 0; k < g.points(); ++k) {
        VectorXcd acc = psi[k].col(0);
        for (int j = 0; j <= k; ++j)
            acc += TimeGrid::segment_weight(j, 0, k, g.dt) * (resolvent.at(k, j) * psi[j].col(0));
        run.integral[k] = acc;
    }

    const double n0 = run.ode[0].norm();
    for (int k = 0; k < g.points(); ++k) {
        run.max_norm_growth = std::max(run.max_norm_growth, run.ode[k].norm() / n0 - 1.0);
        run.route_gap = std::max(run.route_gap, (run.ode[k] - run.integral[k]).norm());
    }
    return run;
}

}  // namespace negf
