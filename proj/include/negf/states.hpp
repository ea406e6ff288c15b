// states.hpp — thermal lead states, the product initial state, Wick determinants,
// and the KMS identity residual

#pragma once

#include <vector>

#include "negf/common.hpp"
#include "negf/fock.hpp"
#include "negf/model.hpp"

namespace negf {

// Spectrally computed exp(-(A - min eig)) / normalization-free; the caller normalizes.
// The shift keeps large beta from overflowing.
inline MatrixXcd shifted_exp_neg(const MatrixXcd& a) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
    if (es.info() != Eigen::Success) throw NumericError("shifted_exp_neg: eigensolver failed");
    const double e0 = es.eigenvalues().minCoeff();
    VectorXd w(es.eigenvalues().size());
    for (long k = 0; k < w.size(); ++k) w(k) = std::exp(-(es.eigenvalues()(k) - e0));
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

// Grand-canonical Gibbs state of a single lead on its own Fock space.
inline MatrixXcd gibbs_lead_state(const LeadSpec& lead) {
    if (!(lead.beta > 0.0)) throw ConfigError("lead.beta: must be > 0");
    const FockBasis basis = FockBasis::make(lead.sites());
    const MatrixXcd q = lead.h - lead.mu * MatrixXcd::Identity(lead.sites(), lead.sites());
    const MatrixXcd a = lead.beta * second_quantize(basis, q);
    MatrixXcd rho = shifted_exp_neg(a);
    rho /= rho.trace().real();
    return rho;
}

// Embed an operator acting on the sample Fock factor into the full Fock space.
// Valid for even (gauge-invariant) sample operators; sample modes are the low bits.
inline MatrixXcd lift_sample_operator(const FockBasis& basis, int n_sample,
                                      const MatrixXcd& op_s) {
    const long ds = 1L << n_sample;
    if (op_s.rows() != ds || op_s.cols() != ds)
        throw ConfigError("sample_state: dimension must be 2^{sample sites}");
    const long dim = basis.dim();
    const long dr = dim / ds;
    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    for (long ir = 0; ir < dr; ++ir)
        for (long a = 0; a < ds; ++a)
            for (long b = 0; b < ds; ++b) out(a + ds * ir, b + ds * ir) = op_s(a, b);
    return out;
}

struct InitialState {
    MatrixXcd rho;      // density matrix on the full Fock space
    MatrixXcd varrho;   // one-particle density of the state (leads block, zero on sample)

    void check(double tol = 1e-12) const {
        if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol)
            throw NumericError("initial state: trace must be 1");
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
        if (es.eigenvalues().minCoeff() < -tol)
            throw NumericError("initial state: density matrix must be positive");
    }
};

// Product of per-lead Gibbs states with a gauge-invariant sample factor (vacuum by
// default). All factors commute with the thermal generator, so the product is
// assembled as lift(rho_S) * exp(-sum_j beta_j (H_j - mu_j N_j)) / Z.
inline InitialState initial_product_state(const ModelSpec& spec, const FockBasis& basis,
                                          const MatrixXcd& sample_density = MatrixXcd()) {
    const ModeLayout lay = ModeLayout::of(spec);
    MatrixXcd q_th = MatrixXcd::Zero(lay.total, lay.total);
    for (int j = 0; j < spec.lead_count(); ++j) {
        const auto& ld = spec.leads[j];
        q_th.block(lay.lead_offset[j], lay.lead_offset[j], ld.sites(), ld.sites()) =
            ld.beta * (ld.h - ld.mu * MatrixXcd::Identity(ld.sites(), ld.sites()));
    }
    const MatrixXcd gibbs = shifted_exp_neg(second_quantize(basis, q_th));

    MatrixXcd sample_factor;
    if (sample_density.size() == 0) {
        // Vacuum on the sample: project every sample mode to empty.
        const long dim = basis.dim();
        const long smask = (1L << lay.n_sample) - 1;
        sample_factor = MatrixXcd::Zero(dim, dim);
        for (long s = 0; s < dim; ++s)
            if ((s & smask) == 0) sample_factor(s, s) = 1.0;
    } else {
        sample_factor = lift_sample_operator(basis, lay.n_sample, sample_density);
    }

    InitialState st;
    st.rho = sample_factor * gibbs;
    const double z = st.rho.trace().real();
    if (!(z > 0.0)) throw NumericError("initial_product_state: vanishing partition function");
    st.rho /= z;
    st.varrho = fermi_reservoir_density(spec);
    return st;
}

// Gauge-invariant quasi-free correlator
//   < a*(f_1) ... a*(f_k) a(g_l) ... a(g_1) > = delta_{kl} det{ <g_j | varrho | f_i> }.
// Both lists are passed in operator order (left to right in the product).
inline cplx quasifree_correlator(const MatrixXcd& varrho, const std::vector<VectorXcd>& creators,
                                 const std::vector<VectorXcd>& annihilators) {
    const int k = static_cast<int>(creators.size());
    const int l = static_cast<int>(annihilators.size());
    if (k != l) return 0.0;
    if (k == 0) return 1.0;
    MatrixXcd m(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            // g_j in the formula counts from the right end of the product.
            const VectorXcd& gj = annihilators[l - 1 - (j)];
            m(i, j) = gj.dot(varrho * creators[i]);
        }
    return m.determinant();
}

struct KmsResidual {
    double creation{0.0};
    double annihilation{0.0};
    double max() const { return std::max(creation, annihilation); }
};

// Residual of the thermal boundary identity for lead j:
//   <A a*(f)> = <a*(e^{+beta_j(h_j-mu_j)} f) A>,
//   <A a(f)>  = <a(e^{-beta_j(h_j-mu_j)} f) A>,
// with f supported in lead j. The sign of the exponent follows the antilinearity
// of f -> a(f).
inline KmsResidual kms_residual(const MatrixXcd& rho, const FockBasis& basis,
                                const ModelSpec& spec, const ModeLayout& lay, int j,
                                const MatrixXcd& a_op, const VectorXcd& f_full) {
    for (int i = 0; i < lay.total; ++i) {
        const bool in_lead =
            i >= lay.lead_offset[j] && i < lay.lead_offset[j] + lay.lead_size[j];
        if (!in_lead && std::abs(f_full(i)) > 1e-14)
            throw ConfigError("kms_residual: f must be supported in the probed lead");
    }
    const auto& ld = spec.leads[j];
    const VectorXcd f_lead = f_full.segment(lay.lead_offset[j], lay.lead_size[j]);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(ld.h);
    VectorXd wp(ld.sites()), wm(ld.sites());
    for (int kk = 0; kk < ld.sites(); ++kk) {
        const double x = ld.beta * (es.eigenvalues()(kk) - ld.mu);
        wp(kk) = std::exp(x);
        wm(kk) = std::exp(-x);
    }
    const MatrixXcd ep = es.eigenvectors() * wp.asDiagonal() * es.eigenvectors().adjoint();
    const MatrixXcd em = es.eigenvectors() * wm.asDiagonal() * es.eigenvectors().adjoint();
    const VectorXcd gp = lay.embed_lead(j, ep * f_lead);
    const VectorXcd gm = lay.embed_lead(j, em * f_lead);

    const MatrixXcd adag_f = creator(basis, f_full);
    const MatrixXcd a_f = annihilator(basis, f_full);
    KmsResidual r;
    r.creation = std::abs(expectation(rho, a_op * adag_f) -
                          expectation(rho, creator(basis, gp) * a_op));
    r.annihilation = std::abs(expectation(rho, a_op * a_f) -
                              expectation(rho, annihilator(basis, gm) * a_op));
    return r;
}


}  // namespace negf
