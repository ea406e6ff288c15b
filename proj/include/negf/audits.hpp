// audits.hpp — randomized and exhaustive identity audits shared by the scenario
// pipelines and the acceptance suite

#pragma once

#include <random>
#include <vector>

#include "negf/common.hpp"
#include "negf/context.hpp"
#include "negf/greens.hpp"
#include "negf/selfenergy.hpp"

namespace negf {

using Rng = std::mt19937_64;

inline VectorXcd random_vector(Rng& rng, int n, bool normalize = false) {
    std::normal_distribution<double> dist;
    VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = cplx(dist(rng), dist(rng));
    if (normalize) v /= v.norm();
    return v;
}

inline MatrixXcd random_matrix(Rng& rng, int r, int c) {
    std::normal_distribution<double> dist;
    MatrixXcd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = cplx(dist(rng), dist(rng));
    return m;
}

inline MatrixXcd random_hermitian(Rng& rng, int n) {
    const MatrixXcd m = random_matrix(rng, n, n);
    return 0.5 * (m + m.adjoint());
}

// Exhaustive anticommutation audit over all mode pairs.
inline double car_residual(const FockBasis& basis) {
    double worst = 0.0;
    std::vector<MatrixXcd> a(basis.n_modes);
    for (int i = 0; i < basis.n_modes; ++i) a[i] = annihilator(basis, i);
    const MatrixXcd eye = MatrixXcd::Identity(basis.dim(), basis.dim());
    for (int i = 0; i < basis.n_modes; ++i)
        for (int k = 0; k < basis.n_modes; ++k) {
            const MatrixXcd adk = a[k].adjoint();
            const MatrixXcd mixed = a[i] * adk + adk * a[i] - (i == k ? eye : MatrixXcd::Zero(basis.dim(), basis.dim()));
            worst = std::max(worst, max_abs(mixed));
            worst = std::max(worst, max_abs(a[i] * a[k] + a[k] * a[i]));
        }
    return worst;
}

// {a(f), a*(g)} = <f|g> for random pairs.
inline double car_random_residual(const FockBasis& basis, Rng& rng, int pairs) {
    double worst = 0.0;
    const MatrixXcd eye = MatrixXcd::Identity(basis.dim(), basis.dim());
    for (int p = 0; p < pairs; ++p) {
        const VectorXcd f = random_vector(rng, basis.n_modes);
        const VectorXcd g = random_vector(rng, basis.n_modes);
        const MatrixXcd af = annihilator(basis, f);
        const MatrixXcd adg = creator(basis, g);
        worst = std::max(worst, max_abs(af * adg + adg * af - f.dot(g) * eye));
    }
    return worst;
}

inline double gauge_commutator_residual(const EDContext& ctx) {
    const MatrixXcd n = number_operator(ctx.basis);
    return std::max(max_abs(ctx.ham.K * n - n * ctx.ham.K),
                    max_abs(ctx.ham.K_D * n - n * ctx.ham.K_D));
}

// <M> = 0 for monomials with unequal a / a* counts.
inline double state_gauge_residual(const EDContext& ctx, Rng& rng, int cases) {
    std::uniform_int_distribution<int> mode(0, ctx.basis.n_modes - 1);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        MatrixXcd m = annihilator(ctx.basis, mode(rng)).adjoint();
        if (c % 2 == 1) m = m * annihilator(ctx.basis, mode(rng)).adjoint() *
                            annihilator(ctx.basis, mode(rng));
        worst = std::max(worst, std::abs(expectation(ctx.state.rho, m)));
    }
    return worst;
}

// Randomized thermal boundary-identity suite: gauge-invariant monomials A against
// random lead-supported vectors f.
inline double kms_suite_residual(const EDContext& ctx, Rng& rng, int triples) {
    std::uniform_int_distribution<int> pick_lead(0, ctx.spec.lead_count() - 1);
    std::uniform_int_distribution<int> pick_mode(0, ctx.basis.n_modes - 1);
    std::uniform_int_distribution<int> pick_kind(0, 2);
    double worst = 0.0;
    for (int c = 0; c < triples; ++c) {
        const int j = pick_lead(rng);
        MatrixXcd a_op;
        switch (pick_kind(rng)) {
            case 0:
                a_op = MatrixXcd::Identity(ctx.basis.dim(), ctx.basis.dim());
                break;
            case 1:
                a_op = creator(ctx.basis, pick_mode(rng)) * annihilator(ctx.basis, pick_mode(rng));
                break;
            default:
                a_op = creator(ctx.basis, pick_mode(rng)) * creator(ctx.basis, pick_mode(rng)) *
                       annihilator(ctx.basis, pick_mode(rng)) *
                       annihilator(ctx.basis, pick_mode(rng));
                break;
        }
        const VectorXcd f =
            ctx.layout().embed_lead(j, random_vector(rng, ctx.spec.leads[j].sites()));
        const KmsResidual r =
            kms_residual(ctx.state.rho, ctx.basis, ctx.spec, ctx.layout(), j, a_op, f);
        worst = std::max(worst, r.max());
    }
    return worst;
}

// Determinant correlators against brute-force Fock traces (valid for the vacuum-sample
// product state, which is quasi-free with the reservoir density).
inline double wick_residual(const EDContext& ctx, Rng& rng, int four_point, int six_point) {
    double worst = 0.0;
    auto run_case = [&](int k) {
        std::vector<VectorXcd> fs, gs;
        MatrixXcd prod = MatrixXcd::Identity(ctx.basis.dim(), ctx.basis.dim());
        for (int i = 0; i < k; ++i) {
            fs.push_back(random_vector(rng, ctx.basis.n_modes));
            prod = prod * creator(ctx.basis, fs.back());
        }
        for (int i = 0; i < k; ++i) {
            gs.push_back(random_vector(rng, ctx.basis.n_modes));
            prod = prod * annihilator(ctx.basis, gs.back());
        }
        const cplx trace_route = expectation(ctx.state.rho, prod);
        const cplx det_route = quasifree_correlator(ctx.state.varrho, fs, gs);
        worst = std::max(worst, std::abs(trace_route - det_route));
    };
    for (int c = 0; c < four_point; ++c) run_case(2);
    for (int c = 0; c < six_point; ++c) run_case(3);
    // Unequal counts vanish.
    const VectorXcd f = random_vector(rng, ctx.basis.n_modes);
    const VectorXcd g1 = random_vector(rng, ctx.basis.n_modes);
    const VectorXcd g2 = random_vector(rng, ctx.basis.n_modes);
    worst = std::max(worst, std::abs(expectation(ctx.state.rho, creator(ctx.basis, f) *
                                                                    annihilator(ctx.basis, g1) *
                                                                    annihilator(ctx.basis, g2))));
    return worst;
}

// Interacting kernels against the quasi-free one-body formulas; meaningful at xi = 0.
inline double xi0_reduction_residual(const EDContext& ctx, const GFSet& sample_set) {
    const TimeGrid& grid = sample_set.lesser.grid;
    const auto vecs = ctx.sample_site_vectors();
    const BlockLabels labels = ctx.sample_labels();
    const GFKernel fl = free_kernel(ctx.sys.h, grid, 0.0, GFSpecies::lesser, vecs, vecs, labels,
                                    ctx.state.varrho);
    const GFKernel fg = free_kernel(ctx.sys.h, grid, 0.0, GFSpecies::greater, vecs, vecs, labels,
                                    ctx.state.varrho);
    const GFKernel fr = free_kernel(ctx.sys.h, grid, 0.0, GFSpecies::retarded, vecs, vecs, labels);
    const GFKernel fa = free_kernel(ctx.sys.h, grid, 0.0, GFSpecies::advanced, vecs, vecs, labels);
    double worst = 0.0;
    for (int k = 0; k < grid.points(); ++k)
        for (int kp = 0; kp < grid.points(); ++kp) {
            worst = std::max(worst, max_abs(sample_set.lesser.data.at(k, kp) - fl.data.at(k, kp)));
            worst = std::max(worst, max_abs(sample_set.greater.data.at(k, kp) - fg.data.at(k, kp)));
            worst = std::max(worst,
                             max_abs(sample_set.retarded.data.at(k, kp) - fr.data.at(k, kp)));
            worst = std::max(worst,
                             max_abs(sample_set.advanced.data.at(k, kp) - fa.data.at(k, kp)));
        }
    return worst;
}

// G^<(s,s')† + G^<(s',s) and the greater analogue.
inline double hermiticity_pair_residual(const GFSet& set) {
    double worst = 0.0;
    const int np = set.lesser.grid.points();
    for (int k = 0; k < np; ++k)
        for (int kp = 0; kp < np; ++kp) {
            worst = std::max(worst, max_abs(set.lesser.data.at(k, kp).adjoint() +
                                            set.lesser.data.at(kp, k)));
            worst = std::max(worst, max_abs(set.greater.data.at(k, kp).adjoint() +
                                            set.greater.data.at(kp, k)));
        }
    return worst;
}

// || i (G^>(t,t) - G^<(t,t)) - I || over the grid diagonal.
inline double equal_time_normalization_residual(const GFSet& set) {
    double worst = 0.0;
    const int np = set.lesser.grid.points();
    const MatrixXcd eye = MatrixXcd::Identity(set.lesser.rows(), set.lesser.cols());
    for (int k = 0; k < np; ++k)
        worst = std::max(worst, max_abs(kImag * (set.greater.data.at(k, k) -
                                                 set.lesser.data.at(k, k)) -
                                        eye));
    return worst;
}

// Random polynomial-in-s matrix families for the causal positivity lemma.
inline double positivity_suite_min_eigenvalue(Rng& rng, const TimeGrid& grid,
                                              const std::vector<double>& etas, int families,
                                              int dim = 2) {
    double worst = 0.0;  // most negative eigenvalue seen
    bool first = true;
    for (int c = 0; c < families; ++c) {
        const MatrixXcd m0 = random_matrix(rng, dim, dim);
        const MatrixXcd m1 = random_matrix(rng, dim, dim);
        const MatrixXcd m2 = random_matrix(rng, dim, dim);
        std::vector<MatrixXcd> family(grid.points());
        for (int k = 0; k < grid.points(); ++k) {
            const double u = grid.t(k) / grid.t_max;
            family[k] = m0 + u * m1 + u * u * m2;
        }
        for (double eta : etas) {
            const double ev = positivity_form_min_eigenvalue(family, grid, eta);
            if (first || ev < worst) worst = ev;
            first = false;
        }
    }
    return worst;
}

// Max over random grid functions of Im of the reducible memory quadratic form.
inline double dissipativity_suite_max(const SelfEnergyKernel& reducible_ret, Rng& rng,
                                      const std::vector<double>& etas, int functions) {
    const TimeGrid& grid = reducible_ret.grid;
    double worst = -1e300;
    for (int c = 0; c < functions; ++c) {
        const VectorXcd c0 = random_vector(rng, reducible_ret.dim());
        const VectorXcd c1 = random_vector(rng, reducible_ret.dim());
        GridVectorFunction phi(grid.points());
        for (int k = 0; k < grid.points(); ++k)
            phi[k] = c0 + (grid.t(k) / grid.t_max) * c1;
        for (double eta : etas)
            worst = std::max(worst,
                             retarded_quadratic_form_imag(reducible_ret.mem, phi, 0.0, eta));
    }
    return worst;
}

inline double observed_order(double coarse, double fine) {
    if (fine <= 0.0) return 10.0;
    return std::log2(coarse / fine);
}

}  // namespace negf
