// context.hpp — bundled exact-diagonalization context for one model instance

#pragma once

#include "negf/common.hpp"
#include "negf/fock.hpp"
#include "negf/frame.hpp"
#include "negf/greens.hpp"
#include "negf/model.hpp"
#include "negf/states.hpp"

namespace negf {

struct EDContext {
    ModelSpec spec;
    OneBodySystem sys;
    FockBasis basis;
    Hamiltonians ham;
    InitialState state;
    SectorFrame frame;                 // eigenframe of K
    std::vector<MatrixXcd> rho_blk;    // initial state in that frame

    static EDContext build(const ModelSpec& spec, const MatrixXcd& sample_density = MatrixXcd(),
                           int fock_cap = 14) {
        EDContext ctx;
        ctx.spec = spec;
        ctx.sys = build_one_body(spec);
        ctx.basis = FockBasis::make(ctx.sys.layout.total, fock_cap);
        ctx.ham = build_hamiltonians(ctx.basis, spec, ctx.sys);
        ctx.state = initial_product_state(spec, ctx.basis, sample_density);
        ctx.frame = SectorFrame::diagonalize(ctx.basis, ctx.ham.K);
        ctx.rho_blk = to_frame_blockdiag(ctx.frame, ctx.state.rho);
        return ctx;
    }

    const ModeLayout& layout() const { return sys.layout; }

    // True when the sample factor of the initial state is the vacuum.
    bool sample_is_vacuum(double tol = 1e-12) const {
        const long smask = (1L << layout().n_sample) - 1;
        double occupied = 0.0;
        for (long s = 0; s < basis.dim(); ++s)
            if ((s & smask) != 0) occupied += std::abs(state.rho(s, s));
        return occupied <= tol;
    }

    std::vector<VectorXcd> sample_site_vectors() const {
        std::vector<VectorXcd> v;
        for (int x = 0; x < spec.sample_dim(); ++x) v.push_back(layout().sample_site(x));
        return v;
    }

    BlockLabels sample_labels() const {
        BlockLabels b;
        b.rows = spec.sample_sites;
        b.cols = spec.sample_sites;
        return b;
    }
};

}  // namespace negf
