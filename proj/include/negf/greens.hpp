// greens.hpp — two-time Green's function kernels on the grid: interacting (from the
// Fock-space frame) and free/decoupled (from one-body matrix exponentials).
//
// Kernels store "interior" values: on the support boundary of retarded/advanced
// species the stored entry is the limit from inside the support (theta = 1), which
// is what every quadrature needs. The equal-time reading convention theta(0) = 1/2
// is applied only by reported(); with it G^R(t,t) = -(i/2) <{a*,a}> and the two
// spectral-function forms agree on the diagonal.

#pragma once

#include <string>
#include <vector>

#include "negf/common.hpp"
#include "negf/frame.hpp"
#include "negf/grid.hpp"
#include "negf/model.hpp"

namespace negf {

enum class GFSpecies { lesser, greater, retarded, advanced, spectral, keldysh };

inline const char* species_name(GFSpecies s) {
    switch (s) {
        case GFSpecies::lesser: return "lesser";
        case GFSpecies::greater: return "greater";
        case GFSpecies::retarded: return "retarded";
        case GFSpecies::advanced: return "advanced";
        case GFSpecies::spectral: return "spectral";
        case GFSpecies::keldysh: return "keldysh";
    }
    return "?";
}

struct BlockLabels {
    std::vector<std::string> rows, cols;
};

struct GFKernel {
    GFSpecies species{GFSpecies::lesser};
    double energy{0.0};  // metadata; applied as a phase for retarded/advanced readout
    TimeGrid grid;
    BlockLabels block;
    PairKernel data;  // interior values, zero outside the support triangle

    int rows() const { return data.rows; }
    int cols() const { return data.cols; }

    bool carries_energy_phase() const {
        return species == GFSpecies::retarded || species == GFSpecies::advanced;
    }

    // Interior value including the energy phase e^{i (t_k' - t_k) E}.
    MatrixXcd at(int k, int kp) const {
        if (!carries_energy_phase() || energy == 0.0) return data.at(k, kp);
        return std::exp(kImag * ((grid.t(kp) - grid.t(k)) * energy)) * data.at(k, kp);
    }

    // Value under the theta(0) = 1/2 convention (halved diagonal for R/A species).
    MatrixXcd reported(int k, int kp) const {
        MatrixXcd v = at(k, kp);
        if (carries_energy_phase() && k == kp) v *= 0.5;
        return v;
    }

    GFKernel with_energy(double e) const {
        GFKernel out = *this;
        out.energy = e;
        return out;
    }
};

// All interacting species over one block of one-particle vectors, built from a
// single pair of ordered correlator kernels.
struct GFSet {
    GFKernel lesser, greater, retarded, advanced;
};

inline GFSet build_interacting_gf(const SectorFrame& fr, const std::vector<MatrixXcd>& rho_blk,
                                  const std::vector<VectorXcd>& vectors, const BlockLabels& labels,
                                  const TimeGrid& grid) {
    std::vector<StripeOp> ops;
    ops.reserve(vectors.size());
    for (const auto& f : vectors)
        ops.push_back(to_frame_stripe(fr, annihilator(fr.basis, f), -1));

    // xy(i,j;k,k') = < tau^{t_k}(a(f_i)) tau^{t_k'}(a*(f_j)) >
    // yx(i,j;k,k') = < tau^{t_k'}(a*(f_j)) tau^{t_k}(a(f_i)) >
    const PairKernel xy = two_time_products(fr, rho_blk, ops, grid, ProductOrder::OpTimesAdjoint);
    const PairKernel yx = two_time_products(fr, rho_blk, ops, grid, ProductOrder::AdjointTimesOp);

    const int np = grid.points();
    GFSet set;
    for (GFKernel* kp : {&set.lesser, &set.greater, &set.retarded, &set.advanced}) {
        kp->grid = grid;
        kp->block = labels;
        kp->data = PairKernel::zero(grid, static_cast<int>(vectors.size()),
                                    static_cast<int>(vectors.size()));
    }
    set.lesser.species = GFSpecies::lesser;
    set.greater.species = GFSpecies::greater;
    set.retarded.species = GFSpecies::retarded;
    set.advanced.species = GFSpecies::advanced;
    for (int k = 0; k < np; ++k) {
        for (int kk = 0; kk < np; ++kk) {
            set.lesser.data.at(k, kk) = kImag * yx.at(k, kk);
            set.greater.data.at(k, kk) = -kImag * xy.at(k, kk);
            const MatrixXcd anti = xy.at(k, kk) + yx.at(k, kk);
            if (k >= kk) set.retarded.data.at(k, kk) = -kImag * anti;
            if (k <= kk) set.advanced.data.at(k, kk) = kImag * anti;
        }
    }
    return set;
}

// Free/decoupled kernels from a one-body generator; lesser/greater/keldysh species
// additionally need the one-particle density of the quasi-free state.
inline GFKernel free_kernel(const MatrixXcd& h, const TimeGrid& grid, double energy,
                            GFSpecies species, const std::vector<VectorXcd>& row_vectors,
                            const std::vector<VectorXcd>& col_vectors, const BlockLabels& labels,
                            const MatrixXcd& varrho = MatrixXcd()) {
    const bool needs_density = species == GFSpecies::lesser || species == GFSpecies::greater ||
                               species == GFSpecies::keldysh;
    if (needs_density && varrho.size() == 0)
        throw ConfigError("free_kernel: lesser/greater/keldysh species require a one-particle density");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw NumericError("free_kernel: eigensolver failed");
    const int np = grid.points();
    const int nr = static_cast<int>(row_vectors.size());
    const int nc = static_cast<int>(col_vectors.size());

    // Evolved block vectors e^{i t_k h} v.
    auto evolve_all = [&](const std::vector<VectorXcd>& vs) {
        std::vector<std::vector<VectorXcd>> out(np);
        for (int k = 0; k < np; ++k) {
            VectorXcd z(es.eigenvalues().size());
            for (long q = 0; q < z.size(); ++q)
                z(q) = std::exp(kImag * (grid.t(k) * es.eigenvalues()(q)));
            const MatrixXcd u = es.eigenvectors() * z.asDiagonal() * es.eigenvectors().adjoint();
            out[k].reserve(vs.size());
            for (const auto& v : vs) out[k].push_back(u * v);
        }
        return out;
    };
    const auto rows_t = evolve_all(row_vectors);
    const auto cols_t = evolve_all(col_vectors);

    GFKernel out;
    out.species = species;
    out.energy = energy;
    out.grid = grid;
    out.block = labels;
    out.data = PairKernel::zero(grid, nr, nc);

    const MatrixXcd one = MatrixXcd::Identity(h.rows(), h.cols());
    for (int k = 0; k < np; ++k) {
        for (int kk = 0; kk < np; ++kk) {
            MatrixXcd& cell = out.data.at(k, kk);
            for (int i = 0; i < nr; ++i) {
                for (int j = 0; j < nc; ++j) {
                    // <f| e^{-i t_k h} M e^{i t_kk h} |g> = (e^{i t_k h} f)† M (e^{i t_kk h} g)
                    switch (species) {
                        case GFSpecies::retarded:
                            if (k >= kk) cell(i, j) = -kImag * rows_t[k][i].dot(cols_t[kk][j]);
                            break;
                        case GFSpecies::advanced:
                            if (k <= kk) cell(i, j) = kImag * rows_t[k][i].dot(cols_t[kk][j]);
                            break;
                        case GFSpecies::spectral:
                            cell(i, j) = rows_t[k][i].dot(cols_t[kk][j]);
                            break;
                        case GFSpecies::lesser:
                            cell(i, j) = kImag * rows_t[k][i].dot(varrho * cols_t[kk][j]);
                            break;
                        case GFSpecies::greater:
                            cell(i, j) = -kImag * rows_t[k][i].dot((one - varrho) * cols_t[kk][j]);
                            break;
                        case GFSpecies::keldysh:
                            cell(i, j) = -kImag * rows_t[k][i].dot((one - 2.0 * varrho) * cols_t[kk][j]);
                            break;
                    }
                }
            }
        }
    }
    return out;
}

// A = i (G^> - G^<) and G^K = G^< + G^>.
inline GFKernel spectral_function(const GFKernel& lesser, const GFKernel& greater) {
    if (!lesser.grid.same_as(greater.grid))
        throw ConfigError("spectral_function: kernels must share a grid");
    GFKernel a = lesser;
    a.species = GFSpecies::spectral;
    a.energy = 0.0;
    const int np = lesser.grid.points();
    for (int k = 0; k < np; ++k)
        for (int kk = 0; kk < np; ++kk)
            a.data.at(k, kk) = kImag * (greater.data.at(k, kk) - lesser.data.at(k, kk));
    return a;
}

inline GFKernel keldysh_function(const GFKernel& lesser, const GFKernel& greater) {
    if (!lesser.grid.same_as(greater.grid))
        throw ConfigError("keldysh_function: kernels must share a grid");
    GFKernel g = lesser;
    g.species = GFSpecies::keldysh;
    const int np = lesser.grid.points();
    for (int k = 0; k < np; ++k)
        for (int kk = 0; kk < np; ++kk)
            g.data.at(k, kk) = lesser.data.at(k, kk) + greater.data.at(k, kk);
    return g;
}

// Max deviation between the two spectral-function forms i(G^> - G^<) and
// i(G^R - G^A), evaluated with reported values (theta(0) = 1/2).
inline double spectral_identity_residual(const GFSet& set) {
    double worst = 0.0;
    const int np = set.lesser.grid.points();
    for (int k = 0; k < np; ++k)
        for (int kk = 0; kk < np; ++kk) {
            const MatrixXcd lhs =
                kImag * (set.greater.reported(k, kk) - set.lesser.reported(k, kk));
            const MatrixXcd rhs =
                kImag * (set.retarded.reported(k, kk) - set.advanced.reported(k, kk));
            worst = std::max(worst, max_abs(lhs - rhs));
        }
    return worst;
}

}  // namespace negf
