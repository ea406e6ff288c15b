// model.hpp — one-particle setup: sample, finite leads, tunneling, reservoir occupations

#pragma once

#include <string>
#include <vector>

#include "negf/common.hpp"

namespace negf {

struct LeadSpec {
    std::string name;
    MatrixXcd h;    // lead one-body Hamiltonian, Hermitian n x n
    VectorXcd psi;  // contact vector in the lead space, unit norm
    VectorXcd phi;  // contact vector in the sample space, unit norm
    double d{0.0};  // tunneling amplitude
    double beta{1.0};
    double mu{0.0};

    int sites() const { return static_cast<int>(h.rows()); }

    // Uniform open chain with nearest-neighbour hopping; contact on the first site.
    static LeadSpec chain(std::string name, int n_sites, double hopping, double onsite,
                          double d, double beta, double mu) {
        LeadSpec lead;
        lead.name = std::move(name);
        lead.h = MatrixXcd::Zero(n_sites, n_sites);
        for (int i = 0; i < n_sites; ++i) {
            lead.h(i, i) = onsite;
            if (i + 1 < n_sites) {
                lead.h(i, i + 1) = hopping;
                lead.h(i + 1, i) = hopping;
            }
        }
        lead.psi = VectorXcd::Zero(n_sites);
        lead.psi(0) = 1.0;
        lead.d = d;
        lead.beta = beta;
        lead.mu = mu;
        return lead;
    }
};

struct ModelSpec {
    std::vector<std::string> sample_sites;
    MatrixXcd h_sample;  // Hermitian |S| x |S|
    std::vector<LeadSpec> leads;
    MatrixXd w;  // symmetric, zero diagonal, sup|w| <= 1
    double xi{0.0};

    int sample_dim() const { return static_cast<int>(sample_sites.size()); }
    int lead_count() const { return static_cast<int>(leads.size()); }

    void validate() const {
        const int ns = sample_dim();
        if (ns < 1) throw ConfigError("model.sample_sites: at least one site required");
        if (h_sample.rows() != ns || h_sample.cols() != ns)
            throw ConfigError("model.h_sample: dimension must match sample_sites");
        if (!is_hermitian(h_sample, 1e-12)) throw ConfigError("model.h_sample: must be Hermitian");
        if (w.rows() != ns || w.cols() != ns)
            throw ConfigError("model.w: dimension must match sample_sites");
        for (int i = 0; i < ns; ++i) {
            if (w(i, i) != 0.0) throw ConfigError("model.w: diagonal must be zero");
            for (int j = 0; j < ns; ++j) {
                if (w(i, j) != w(j, i)) throw ConfigError("model.w: must be symmetric");
                if (std::abs(w(i, j)) > 1.0 + 1e-12)
                    throw ConfigError("model.w: sup|w| must be <= 1 after normalization");
            }
        }
        if (!std::isfinite(xi)) throw ConfigError("model.xi: must be finite");
        for (std::size_t j = 0; j < leads.size(); ++j) {
            const auto& ld = leads[j];
            const std::string tag = "model.leads[" + std::to_string(j) + "]";
            if (ld.sites() < 1) throw ConfigError(tag + ".h: at least one site required");
            if (!is_hermitian(ld.h, 1e-12)) throw ConfigError(tag + ".h: must be Hermitian");
            if (ld.psi.size() != ld.sites())
                throw ConfigError(tag + ".psi: dimension must match the lead");
            if (ld.phi.size() != ns)
                throw ConfigError(tag + ".phi: dimension must match the sample");
            if (std::abs(ld.psi.norm() - 1.0) > 1e-12)
                throw ConfigError(tag + ".psi: must be a unit vector");
            if (std::abs(ld.phi.norm() - 1.0) > 1e-12)
                throw ConfigError(tag + ".phi: must be a unit vector");
            if (!(ld.beta > 0.0)) throw ConfigError(tag + ".beta: must be > 0");
            if (!std::isfinite(ld.mu)) throw ConfigError(tag + ".mu: must be finite");
        }
    }
};

// Frozen mode layout: sample sites first, then lead 1..m sites.
struct ModeLayout {
    int n_sample{0};
    std::vector<int> lead_offset;  // start index of each lead block
    std::vector<int> lead_size;
    int total{0};

    static ModeLayout of(const ModelSpec& spec) {
        ModeLayout lay;
        lay.n_sample = spec.sample_dim();
        int off = lay.n_sample;
        for (const auto& ld : spec.leads) {
            lay.lead_offset.push_back(off);
            lay.lead_size.push_back(ld.sites());
            off += ld.sites();
        }
        lay.total = off;
        return lay;
    }

    // Embed a lead-local vector into the full one-particle space.
    VectorXcd embed_lead(int j, const VectorXcd& v) const {
        VectorXcd out = VectorXcd::Zero(total);
        out.segment(lead_offset[j], lead_size[j]) = v;
        return out;
    }

    VectorXcd embed_sample(const VectorXcd& v) const {
        VectorXcd out = VectorXcd::Zero(total);
        out.head(n_sample) = v;
        return out;
    }

    VectorXcd sample_site(int x) const {
        VectorXcd out = VectorXcd::Zero(total);
        out(x) = 1.0;
        return out;
    }
};

struct OneBodySystem {
    ModeLayout layout;
    MatrixXcd h_d;  // decoupled: h_S + sum_j h_j, block diagonal
    MatrixXcd h_t;  // tunneling, rank 2 per lead
    MatrixXcd h;    // h_d + h_t
};

inline OneBodySystem build_one_body(const ModelSpec& spec) {
    spec.validate();
    OneBodySystem sys;
    sys.layout = ModeLayout::of(spec);
    const int n = sys.layout.total;
    sys.h_d = MatrixXcd::Zero(n, n);
    sys.h_d.topLeftCorner(spec.sample_dim(), spec.sample_dim()) = spec.h_sample;
    sys.h_t = MatrixXcd::Zero(n, n);
    for (int j = 0; j < spec.lead_count(); ++j) {
        const auto& ld = spec.leads[j];
        const int off = sys.layout.lead_offset[j];
        sys.h_d.block(off, off, ld.sites(), ld.sites()) = ld.h;
        const VectorXcd psi = sys.layout.embed_lead(j, ld.psi);
        const VectorXcd phi = sys.layout.embed_sample(ld.phi);
        sys.h_t += ld.d * (psi * phi.adjoint() + phi * psi.adjoint());
    }
    sys.h = sys.h_d + sys.h_t;
    return sys;
}

// One-particle density of the reservoirs: (I + e^{beta_j (h_j - mu_j)})^{-1} on each lead
// block, zero on the sample.
inline MatrixXcd fermi_reservoir_density(const ModelSpec& spec) {
    const ModeLayout lay = ModeLayout::of(spec);
    MatrixXcd varrho = MatrixXcd::Zero(lay.total, lay.total);
    for (int j = 0; j < spec.lead_count(); ++j) {
        const auto& ld = spec.leads[j];
        if (!is_hermitian(ld.h, 1e-12))
            throw ConfigError("model.leads[" + std::to_string(j) + "].h: must be Hermitian");
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(ld.h);
        VectorXd occ(ld.sites());
        for (int k = 0; k < ld.sites(); ++k)
            occ(k) = fermi(ld.beta * (es.eigenvalues()(k) - ld.mu));
        const MatrixXcd block =
            es.eigenvectors() * occ.asDiagonal() * es.eigenvectors().adjoint();
        varrho.block(lay.lead_offset[j], lay.lead_offset[j], ld.sites(), ld.sites()) = block;
    }
    return varrho;
}

// Point-mass spectral measure of h_j for the contact vector psi_j.
struct SpectralMeasure {
    std::vector<double> energy;
    std::vector<double> weight;  // non-negative, sums to 1

    int size() const { return static_cast<int>(energy.size()); }

    double moment(int m) const {
        double acc = 0.0;
        for (int k = 0; k < size(); ++k) acc += weight[k] * std::pow(energy[k], m);
        return acc;
    }
};

inline SpectralMeasure lead_spectral_measure(const LeadSpec& lead) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(lead.h);
    SpectralMeasure nu;
    for (int k = 0; k < lead.sites(); ++k) {
        nu.energy.push_back(es.eigenvalues()(k));
        nu.weight.push_back(std::norm(es.eigenvectors().col(k).dot(lead.psi)));
    }
    return nu;
}

}  // namespace negf
