// frame.hpp — particle-number-sector eigenframe of a conserving Hamiltonian and
// fast two-time correlator kernels evaluated in that frame.
//
// Every operator fed to the kernel routines must change the particle number by a
// fixed amount ("stripe" operators): a(f) by -1, a*(f) by +1, commutators like
// [W, a(f)] by -1, number-conserving observables by 0. Diagonalizing per sector
// keeps eigenvectors from mixing sectors (degeneracies across sectors are common),
// which the stripe representation relies on.

#pragma once

#include <cmath>
#include <vector>

#include "negf/common.hpp"
#include "negf/fock.hpp"
#include "negf/grid.hpp"

namespace negf {

struct SectorFrame {
    FockBasis basis;
    std::vector<std::vector<long>> states;  // Fock indices per sector
    std::vector<VectorXd> evals;            // per sector
    std::vector<MatrixXcd> vecs;            // per sector, columns are eigenvectors

    int sectors() const { return basis.n_modes + 1; }
    int sector_dim(int m) const { return static_cast<int>(states[m].size()); }

    static SectorFrame diagonalize(const FockBasis& basis, const MatrixXcd& K) {
        SectorFrame fr;
        fr.basis = basis;
        fr.states.resize(basis.n_modes + 1);
        for (long s = 0; s < basis.dim(); ++s) fr.states[FockBasis::sector_of(s)].push_back(s);
        const double scale = std::max(1.0, max_abs(K));
        double off = 0.0;
        fr.evals.resize(fr.sectors());
        fr.vecs.resize(fr.sectors());
        for (int m = 0; m < fr.sectors(); ++m) {
            const auto& idx = fr.states[m];
            const int d = static_cast<int>(idx.size());
            MatrixXcd block(d, d);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) block(r, c) = K(idx[r], idx[c]);
            Eigen::SelfAdjointEigenSolver<MatrixXcd> es(block);
            if (es.info() != Eigen::Success)
                throw NumericError("frame diagonalization: eigensolver failed");
            fr.evals[m] = es.eigenvalues();
            fr.vecs[m] = es.eigenvectors();
        }
        // The generator must not couple sectors.
        for (long s = 0; s < basis.dim(); ++s)
            for (long sp = 0; sp < basis.dim(); ++sp)
                if (FockBasis::sector_of(s) != FockBasis::sector_of(sp))
                    off = std::max(off, std::abs(K(s, sp)));
        if (off > 1e-12 * scale)
            throw NumericError("frame diagonalization: generator does not conserve particle number");
        return fr;
    }

    // e^{i t lambda} per sector.
    std::vector<VectorXcd> phases(double t) const {
        std::vector<VectorXcd> z(sectors());
        for (int m = 0; m < sectors(); ++m) {
            z[m] = VectorXcd(sector_dim(m));
            for (int q = 0; q < sector_dim(m); ++q) z[m](q) = std::exp(kImag * (t * evals[m](q)));
        }
        return z;
    }

    // Dense eigenbasis with columns in sector-major order; pairs with dense_evals().
    MatrixXcd dense_basis() const {
        const long dim = basis.dim();
        MatrixXcd u = MatrixXcd::Zero(dim, dim);
        long col = 0;
        for (int m = 0; m < sectors(); ++m)
            for (int c = 0; c < sector_dim(m); ++c, ++col)
                for (int r = 0; r < sector_dim(m); ++r) u(states[m][r], col) = vecs[m](r, c);
        return u;
    }

    VectorXd dense_evals() const {
        VectorXd lam(basis.dim());
        long pos = 0;
        for (int m = 0; m < sectors(); ++m)
            for (int q = 0; q < sector_dim(m); ++q) lam(pos++) = evals[m](q);
        return lam;
    }
};

// blocks[m] maps sector m to sector m+shift (rows in m+shift, cols in m).
struct StripeOp {
    int shift{0};
    std::vector<MatrixXcd> blocks;  // empty matrix where the target sector is out of range

    const MatrixXcd& block(int m) const { return blocks[m]; }
};

inline StripeOp to_frame_stripe(const SectorFrame& fr, const MatrixXcd& a, int shift) {
    StripeOp op;
    op.shift = shift;
    op.blocks.resize(fr.sectors());
    double captured = 0.0;
    for (int m = 0; m < fr.sectors(); ++m) {
        const int mt = m + shift;
        if (mt < 0 || mt >= fr.sectors()) continue;
        const auto& cs = fr.states[m];
        const auto& rs = fr.states[mt];
        MatrixXcd sub(rs.size(), cs.size());
        for (std::size_t r = 0; r < rs.size(); ++r)
            for (std::size_t c = 0; c < cs.size(); ++c) sub(r, c) = a(rs[r], cs[c]);
        captured += sub.squaredNorm();
        op.blocks[m] = fr.vecs[mt].adjoint() * sub * fr.vecs[m];
    }
    const double total = a.squaredNorm();
    if (total > 0.0 && std::abs(total - captured) > 1e-20 + 1e-12 * total)
        throw NumericError("to_frame_stripe: operator is not homogeneous of the declared degree");
    return op;
}

inline StripeOp stripe_adjoint(const SectorFrame& fr, const StripeOp& a) {
    StripeOp out;
    out.shift = -a.shift;
    out.blocks.resize(fr.sectors());
    for (int m = 0; m < fr.sectors(); ++m) {
        const int src = m + out.shift;  // out.blocks[m] = (a.blocks[src])†, src -> src+a.shift == m
        if (src < 0 || src >= fr.sectors()) continue;
        if (a.blocks[src].size() > 0) out.blocks[m] = a.blocks[src].adjoint();
    }
    return out;
}

// Block-diagonal frame representation of a gauge-invariant density matrix.
inline std::vector<MatrixXcd> to_frame_blockdiag(const SectorFrame& fr, const MatrixXcd& rho) {
    StripeOp s = to_frame_stripe(fr, rho, 0);
    return std::move(s.blocks);
}

// Matrix-valued kernel over all grid pairs (k, k').
struct PairKernel {
    TimeGrid grid;
    int rows{0}, cols{0};
    std::vector<MatrixXcd> vals;

    static PairKernel zero(const TimeGrid& g, int rows, int cols) {
        PairKernel pk;
        pk.grid = g;
        pk.rows = rows;
        pk.cols = cols;
        pk.vals.assign(static_cast<std::size_t>(g.points()) * g.points(),
                       MatrixXcd::Zero(rows, cols));
        return pk;
    }

    MatrixXcd& at(int k, int kp) { return vals[static_cast<std::size_t>(k) * grid.points() + kp]; }
    const MatrixXcd& at(int k, int kp) const {
        return vals[static_cast<std::size_t>(k) * grid.points() + kp];
    }
};

enum class ProductOrder {
    OpTimesAdjoint,  // entry(i,j; k,k') = < tau^{t_k}(A_i) tau^{t_k'}(A_j†) >
    AdjointTimesOp,  // entry(i,j; k,k') = < tau^{t_k'}(A_j†) tau^{t_k}(A_i) >
};

// Correlator kernel for a family of same-degree operators A_i against their adjoints.
// Exploits entry(i,j;k,k')* = entry(j,i;k',k): only time differences k'-k >= 0 are
// computed, the mirror half is filled by conjugation.
inline PairKernel two_time_products(const SectorFrame& fr, const std::vector<MatrixXcd>& rho_blk,
                                    const std::vector<StripeOp>& ops, const TimeGrid& grid,
                                    ProductOrder order) {
    const int d = static_cast<int>(ops.size());
    const int np = grid.points();
    const int sigma = ops.empty() ? 0 : ops[0].shift;
    std::vector<StripeOp> adj(d);
    for (int i = 0; i < d; ++i) {
        if (ops[i].shift != sigma)
            throw NumericError("two_time_products: mixed operator degrees in one family");
        adj[i] = stripe_adjoint(fr, ops[i]);
    }
    PairKernel out = PairKernel::zero(grid, d, d);

    // Phase tables z_m(t_k).
    std::vector<std::vector<VectorXcd>> ph(np);
    for (int k = 0; k < np; ++k) ph[k] = fr.phases(grid.t(k));

    parallel_for(np, [&](int didx) {
        const double delta = didx * grid.dt;  // t_k' - t_k >= 0
        // Per-sector phase vectors for the fixed difference.
        std::vector<VectorXcd> zd(fr.sectors());
        for (int m = 0; m < fr.sectors(); ++m) {
            zd[m] = VectorXcd(fr.sector_dim(m));
            for (int q = 0; q < fr.sector_dim(m); ++q)
                zd[m](q) = std::exp(kImag * (delta * fr.evals[m](q)));
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                // Weight matrix E[m] such that value(k) = sum_m z_m(t_k)^T E[m] conj(z_m(t_k)).
                std::vector<MatrixXcd> ew(fr.sectors());
                for (int m = 0; m < fr.sectors(); ++m) {
                    const int dm = fr.sector_dim(m);
                    if (dm == 0 || rho_blk[m].size() == 0) continue;
                    MatrixXcd p;
                    if (order == ProductOrder::OpTimesAdjoint) {
                        // P = A_i e^{i delta D} A_j† restricted to sector m.
                        const int mm = m - sigma;
                        if (mm < 0 || mm >= fr.sectors()) continue;
                        if (adj[j].blocks[m].size() == 0 || ops[i].blocks[mm].size() == 0) continue;
                        p = ops[i].blocks[mm] * (zd[mm].asDiagonal() * adj[j].blocks[m]);
                        // E_{qp} = rho_{pq} P_{qp} e^{-i delta lambda_p}
                        ew[m] = rho_blk[m].transpose().cwiseProduct(p) *
                                zd[m].conjugate().asDiagonal();
                    } else {
                        // P = A_j† e^{-i delta D} A_i restricted to sector m.
                        const int mm = m + sigma;
                        if (mm < 0 || mm >= fr.sectors()) continue;
                        if (adj[j].blocks[mm].size() == 0 || ops[i].blocks[m].size() == 0) continue;
                        p = adj[j].blocks[mm] * (zd[mm].conjugate().asDiagonal() * ops[i].blocks[m]);
                        // E_{qp} = rho_{pq} P_{qp} e^{+i delta lambda_q}
                        ew[m] = zd[m].asDiagonal() * rho_blk[m].transpose().cwiseProduct(p);
                    }
                }
                for (int k = 0; k + didx < np; ++k) {
                    const int kp = k + didx;
                    cplx v = 0.0;
                    for (int m = 0; m < fr.sectors(); ++m) {
                        if (ew[m].size() == 0) continue;
                        v += ph[k][m].cwiseProduct(ew[m] * ph[k][m].conjugate()).sum();
                    }
                    out.at(k, kp)(i, j) = v;
                    if (didx > 0) out.at(kp, k)(j, i) = std::conj(v);
                }
            }
        }
    });
    return out;
}

// Time series < tau^{t_k}(B) > for a number-conserving operator B.
inline std::vector<cplx> expectation_series(const SectorFrame& fr,
                                            const std::vector<MatrixXcd>& rho_blk,
                                            const StripeOp& b, const TimeGrid& grid) {
    if (b.shift != 0) throw NumericError("expectation_series: operator must conserve particle number");
    std::vector<cplx> out(grid.points());
    std::vector<MatrixXcd> ew(fr.sectors());
    for (int m = 0; m < fr.sectors(); ++m) {
        if (rho_blk[m].size() == 0 || b.blocks[m].size() == 0) continue;
        ew[m] = rho_blk[m].transpose().cwiseProduct(b.blocks[m]);
    }
    for (int k = 0; k < grid.points(); ++k) {
        const auto z = fr.phases(grid.t(k));
        cplx v = 0.0;
        for (int m = 0; m < fr.sectors(); ++m) {
            if (ew[m].size() == 0) continue;
            v += z[m].cwiseProduct(ew[m] * z[m].conjugate()).sum();
        }
        out[k] = v;
    }
    return out;
}

// Time series < A tau^{t_k}(B) > for stripe operators with opposite degrees.
inline std::vector<cplx> product_series(const SectorFrame& fr,
                                        const std::vector<MatrixXcd>& rho_blk, const StripeOp& a,
                                        const StripeOp& b, const TimeGrid& grid) {
    if (a.shift + b.shift != 0)
        throw NumericError("product_series: operator degrees must cancel");
    // P = rho A (stripe of degree a.shift); value(s) = tr(P e^{isD} B e^{-isD}).
    std::vector<MatrixXcd> pw(fr.sectors());
    for (int m = 0; m < fr.sectors(); ++m) {
        const int mt = m + a.shift;
        if (mt < 0 || mt >= fr.sectors()) continue;
        if (a.blocks[m].size() == 0 || rho_blk[mt].size() == 0 || b.blocks[mt].size() == 0) continue;
        const MatrixXcd p = rho_blk[mt] * a.blocks[m];  // sector m -> m+shift
        pw[m] = p.transpose().cwiseProduct(b.blocks[mt]);  // entries (q in m, p in m+shift)
    }
    std::vector<cplx> out(grid.points());
    for (int k = 0; k < grid.points(); ++k) {
        const auto z = fr.phases(grid.t(k));
        cplx v = 0.0;
        for (int m = 0; m < fr.sectors(); ++m) {
            if (pw[m].size() == 0) continue;
            v += z[m].cwiseProduct(pw[m] * z[m + a.shift].conjugate()).sum();
        }
        out[k] = v;
    }
    return out;
}


// Heisenberg evolution e^{itK} X e^{-itK} as a dense matrix.
inline MatrixXcd evolve_heisenberg(const SectorFrame& fr, const MatrixXcd& x, double t) {
    const MatrixXcd u = fr.dense_basis();
    const VectorXd lam = fr.dense_evals();
    VectorXcd z(lam.size());
    for (long i = 0; i < lam.size(); ++i) z(i) = std::exp(kImag * (t * lam(i)));
    const MatrixXcd xt = u.adjoint() * x * u;
    return u * (z.asDiagonal() * xt * z.conjugate().asDiagonal()) * u.adjoint();
}

}  // namespace negf
