// fock.hpp — fermionic Fock space, CAR ladder operators, second quantization
//
// Mode order is frozen: sample sites first, then lead 1..m sites, exactly as laid
// out by ModeLayout. Basis state i occupies mode k iff bit k of i is set, states
// ordered by the integer i (lexicographic in the occupations). Jordan-Wigner signs
// run over modes below the acted-on mode.

#pragma once

#include <bit>
#include <vector>

#include "negf/common.hpp"
#include "negf/model.hpp"

namespace negf {

using ManyBodyOperator = MatrixXcd;

struct FockBasis {
    int n_modes{0};
    int cap{14};

    static FockBasis make(int n_modes, int cap = 14) {
        if (n_modes > cap)
            throw FockCapError("Fock dimension overflow: " + std::to_string(n_modes) +
                               " modes exceeds the cap of " + std::to_string(cap));
        if (n_modes < 1) throw ConfigError("fock: at least one mode required");
        FockBasis b;
        b.n_modes = n_modes;
        b.cap = cap;
        return b;
    }

    long dim() const { return 1L << n_modes; }
    static int sector_of(long state) { return std::popcount(static_cast<unsigned long>(state)); }

    // Jordan-Wigner sign accumulated over modes below `mode`.
    static double jw_sign(long state, int mode) {
        const long mask = (1L << mode) - 1;
        return (std::popcount(static_cast<unsigned long>(state & mask)) & 1) ? -1.0 : 1.0;
    }
};

// Annihilation operator of mode k as a dense Fock matrix.
inline ManyBodyOperator annihilator(const FockBasis& basis, int mode) {
    const long dim = basis.dim();
    MatrixXcd a = MatrixXcd::Zero(dim, dim);
    const long bit = 1L << mode;
    for (long s = 0; s < dim; ++s) {
        if (s & bit) a(s ^ bit, s) = FockBasis::jw_sign(s, mode);
    }
    return a;
}

inline ManyBodyOperator creator(const FockBasis& basis, int mode) {
    return annihilator(basis, mode).adjoint();
}

// a(f) = sum_k conj(f_k) a_k, antilinear in f.
inline ManyBodyOperator annihilator(const FockBasis& basis, const VectorXcd& f) {
    const long dim = basis.dim();
    MatrixXcd a = MatrixXcd::Zero(dim, dim);
    for (int k = 0; k < basis.n_modes; ++k) {
        const cplx c = std::conj(f(k));
        if (c == cplx(0.0, 0.0)) continue;
        const long bit = 1L << k;
        for (long s = 0; s < dim; ++s)
            if (s & bit) a(s ^ bit, s) += c * FockBasis::jw_sign(s, k);
    }
    return a;
}

inline ManyBodyOperator creator(const FockBasis& basis, const VectorXcd& f) {
    return annihilator(basis, f).adjoint();
}

// Second quantization dGamma(q) = sum_{ij} q_ij a*_i a_j.
inline ManyBodyOperator second_quantize(const FockBasis& basis, const MatrixXcd& q) {
    if (q.rows() != basis.n_modes || q.cols() != basis.n_modes)
        throw ConfigError("second_quantize: operator dimension must equal the mode count");
    const long dim = basis.dim();
    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    for (long s = 0; s < dim; ++s) {
        for (int j = 0; j < basis.n_modes; ++j) {
            const long bj = 1L << j;
            if (!(s & bj)) continue;
            const double sgn_j = FockBasis::jw_sign(s, j);
            const long mid = s ^ bj;
            for (int i = 0; i < basis.n_modes; ++i) {
                const long bi = 1L << i;
                if (mid & bi) continue;
                if (q(i, j) == cplx(0.0, 0.0)) continue;
                out(mid ^ bi, s) += q(i, j) * sgn_j * FockBasis::jw_sign(mid, i);
            }
        }
    }
    return out;
}

inline ManyBodyOperator number_operator(const FockBasis& basis) {
    const long dim = basis.dim();
    MatrixXcd n = MatrixXcd::Zero(dim, dim);
    for (long s = 0; s < dim; ++s) n(s, s) = FockBasis::sector_of(s);
    return n;
}

inline ManyBodyOperator site_number(const FockBasis& basis, int mode) {
    const long dim = basis.dim();
    MatrixXcd n = MatrixXcd::Zero(dim, dim);
    const long bit = 1L << mode;
    for (long s = 0; s < dim; ++s)
        if (s & bit) n(s, s) = 1.0;
    return n;
}

// Pair interaction W = (1/2) sum_{x,y} w(x,y) N_x N_y, supported on the sample modes.
// Diagonal in the occupation basis.
inline ManyBodyOperator build_interaction(const FockBasis& basis, const ModelSpec& spec) {
    const int ns = spec.sample_dim();
    for (int x = 0; x < ns; ++x)
        if (spec.w(x, x) != 0.0) throw ConfigError("model.w: diagonal must be zero");
    const long dim = basis.dim();
    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    for (long s = 0; s < dim; ++s) {
        double v = 0.0;
        for (int x = 0; x < ns; ++x) {
            if (!(s & (1L << x))) continue;
            for (int y = 0; y < ns; ++y)
                if (s & (1L << y)) v += spec.w(x, y);
        }
        out(s, s) = 0.5 * v;
    }
    return out;
}

// V_x = sum_y w(x,y) N_y (sample modes), diagonal.
inline ManyBodyOperator interaction_neighborhood(const FockBasis& basis, const ModelSpec& spec,
                                                 int x) {
    const long dim = basis.dim();
    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    for (long s = 0; s < dim; ++s) {
        double v = 0.0;
        for (int y = 0; y < spec.sample_dim(); ++y)
            if (s & (1L << y)) v += spec.w(x, y);
        out(s, s) = v;
    }
    return out;
}

struct Hamiltonians {
    ManyBodyOperator H;    // dGamma(h)
    ManyBodyOperator H_T;  // dGamma(h_T)
    ManyBodyOperator W;    // pair interaction on the sample
    ManyBodyOperator K;    // H + xi W
    ManyBodyOperator K_D;  // H_S + xi W + H_R = K - H_T
};

inline Hamiltonians build_hamiltonians(const FockBasis& basis, const ModelSpec& spec,
                                       const OneBodySystem& sys) {
    Hamiltonians out;
    out.H = second_quantize(basis, sys.h);
    out.H_T = second_quantize(basis, sys.h_t);
    out.W = build_interaction(basis, spec);
    out.K = out.H + spec.xi * out.W;
    out.K_D = out.K - out.H_T;
    return out;
}

}  // namespace negf
