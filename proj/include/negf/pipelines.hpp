// pipelines.hpp — the three named scenario pipelines and artifact emission

#pragma once

#include <set>

#include "negf/scenario.hpp"

namespace negf {

// ------------------------------- currents -------------------------------

namespace detail {

struct CurrentsBundle {
    std::vector<CurrentTrace> direct_all;       // every lead (for conservation)
    std::vector<CurrentTrace> jmw_probe;        // probed leads only
    std::vector<CurrentTrace> langreth_probe;   // probed leads only
    double realness{0.0};
    double form_agreement{0.0};
    double jmw_vs_direct{0.0};
    double conservation{0.0};
};

inline CurrentTrace langreth_reconstructed_current(const EDContext& ctx, int j,
                                                   const GFKernel& g_less_sample,
                                                   const GFKernel& g_ret_sample,
                                                   const TimeGrid& grid) {
    const auto& ld = ctx.spec.leads[j];
    const SpectralMeasure nu = lead_spectral_measure(ld);
    std::vector<double> fermi_at(nu.size());
    for (int m = 0; m < nu.size(); ++m) fermi_at[m] = fermi(ld.beta * (nu.energy[m] - ld.mu));
    CurrentTrace tr;
    tr.lead = j;
    tr.method = "langreth-reconstructed";
    for (int k = 0; k < grid.points(); ++k) {
        cplx mixed = 0.0;
        for (int s = 0; s <= k; ++s) {
            cplx lead_less = 0.0, lead_adv = 0.0;
            for (int m = 0; m < nu.size(); ++m) {
                const cplx ph = std::exp(kImag * ((grid.t(k) - grid.t(s)) * nu.energy[m]));
                lead_less += nu.weight[m] * fermi_at[m] * ph;
                lead_adv += nu.weight[m] * ph;
            }
            mixed += TimeGrid::segment_weight(s, 0, k, grid.dt) *
                     (sandwich(g_ret_sample, ld.phi, ld.phi, k, s) * kImag * lead_less +
                      sandwich(g_less_sample, ld.phi, ld.phi, k, s) * kImag * lead_adv);
        }
        mixed *= ld.d;
        tr.times.push_back(grid.t(k));
        tr.values.push_back(2.0 * ld.d * mixed.real());
    }
    return tr;
}

inline CurrentsBundle run_currents_at(const ScenarioConfig& cfg, const EDContext& ctx,
                                      const TimeGrid& grid, const std::vector<int>& probes) {
    CurrentsBundle out;
    const UnionBlock u = build_union_block(ctx, grid);
    const GFSet sample = slice_set(u.set, sample_indices(ctx));
    for (int j = 0; j < ctx.spec.lead_count(); ++j) {
        out.direct_all.push_back(direct_current(ctx, j, grid));
        out.realness = std::max(out.realness, out.direct_all.back().max_imag);
        const CurrentTrace lf =
            lesser_form_current(ctx, j, u.set.lesser, u.psi_col(j, ctx.spec.sample_dim()));
        out.form_agreement =
            std::max(out.form_agreement, out.direct_all.back().max_abs_diff(lf));
    }
    for (int j : probes) {
        out.jmw_probe.push_back(jmw_current(ctx, j, sample.lesser, sample.retarded, grid));
        out.jmw_vs_direct =
            std::max(out.jmw_vs_direct, out.jmw_probe.back().max_abs_diff(out.direct_all[j]));
        out.langreth_probe.push_back(
            langreth_reconstructed_current(ctx, j, sample.lesser, sample.retarded, grid));
    }
    out.conservation = conservation_residual(ctx, out.direct_all, grid);
    return out;
}

}  // namespace detail

inline ScenarioResult run_currents_pipeline(const ScenarioConfig& cfg, const EDContext& ctx) {
    ScenarioResult res;
    res.report.grid = cfg.grid;
    const std::vector<int>& probes = cfg.run.probe_leads;
    const detail::CurrentsBundle b = detail::run_currents_at(cfg, ctx, cfg.grid, probes);

    res.report.add("current-realness", "lead current operator expectation", b.realness,
                   cfg.tol("current_realness", 1e-10));
    res.report.add("current-two-forms", "lead current from the equal-time lesser function",
                   b.form_agreement, cfg.tol("current_two_forms", 1e-10));
    res.report.add("current-conservation", "particle number balance", b.conservation,
                   cfg.tol("conservation", 1e-6 + 5.0 * cfg.grid.dt * cfg.grid.dt));
    if (!probes.empty()) {
        auto& e = res.report.add("jmw-vs-direct", "Jauho-Meir-Wingreen current formula",
                                 b.jmw_vs_direct, cfg.tol("jmw_vs_direct", 5e-3));
        if (cfg.run.order_check) {
            const detail::CurrentsBundle fine =
                detail::run_currents_at(cfg, ctx, cfg.grid.refined(), probes);
            e.observed_order = observed_order(b.jmw_vs_direct, fine.jmw_vs_direct);
            e.pass = e.pass && e.observed_order >= 1.9;
        }
    }

    // Density diagnostics on the first sample site.
    {
        const UnionBlock u = build_union_block(ctx, cfg.grid);
        const GFSet sample = slice_set(u.set, sample_indices(ctx));
        double range = 0.0, two_routes = 0.0;
        for (int x = 0; x < ctx.spec.sample_dim(); ++x) {
            const auto rho_kernel = particle_density(sample.lesser, x);
            const auto rho_evolved = density_by_evolution(ctx, x, cfg.grid);
            for (int k = 0; k < cfg.grid.points(); ++k) {
                range = std::max({range, -rho_kernel[k], rho_kernel[k] - 1.0});
                two_routes = std::max(two_routes, std::abs(rho_kernel[k] - rho_evolved[k]));
            }
        }
        res.report.add("density-range", "sample particle density bounds", std::max(0.0, range),
                       cfg.tol("density_range", 1e-9));
        res.report.add("density-two-routes", "sample particle density from the lesser function",
                       two_routes, cfg.tol("density_two_routes", 1e-10));
    }

    for (int j : probes) res.traces.push_back(b.direct_all[j]);
    for (const auto& tr : b.jmw_probe) res.traces.push_back(tr);
    for (const auto& tr : b.langreth_probe) res.traces.push_back(tr);
    return res;
}

// ------------------------------- identity audit -------------------------------

inline ScenarioResult run_identity_audit(const ScenarioConfig& cfg, const EDContext& ctx) {
    ScenarioResult res;
    res.report.grid = cfg.grid;
    Rng rng(cfg.run.seed);

    res.report.add("car", "canonical anticommutation relations",
                   std::max(car_residual(ctx.basis), car_random_residual(ctx.basis, rng, 5)),
                   cfg.tol("car", 1e-13));
    res.report.add("gauge-invariance", "particle number conservation of the dynamics",
                   gauge_commutator_residual(ctx), cfg.tol("gauge", 1e-12));
    res.report.add("state-gauge-invariance", "gauge invariance of the initial state",
                   state_gauge_residual(ctx, rng, 10), cfg.tol("state_gauge", 1e-13));
    res.report.add("kms-identity", "thermal boundary identity of the reservoirs",
                   kms_suite_residual(ctx, rng, 50), cfg.tol("kms", 1e-10));
    if (ctx.sample_is_vacuum())
        res.report.add("wick-determinants", "quasi-free determinant correlators",
                       wick_residual(ctx, rng, 5, 3), cfg.tol("wick", 1e-10));

    const UnionBlock u = build_union_block(ctx, cfg.grid);
    const GFSet sample = slice_set(u.set, sample_indices(ctx));

    res.report.add("spectral-identity", "two forms of the spectral function",
                   spectral_identity_residual(sample), cfg.tol("spectral_identity", 1e-9));
    res.report.add("hermiticity-pairs", "conjugation symmetry of lesser/greater functions",
                   hermiticity_pair_residual(sample), cfg.tol("hermiticity", 1e-11));
    res.report.add("equal-time-normalization", "equal-time spectral normalization",
                   equal_time_normalization_residual(sample),
                   cfg.tol("equal_time_normalization", 1e-11));
    {
        double keldysh_eq = 0.0;
        const GFKernel gk = keldysh_function(sample.lesser, sample.greater);
        for (int k = 0; k < cfg.grid.points(); ++k)
            keldysh_eq = std::max(keldysh_eq,
                                  max_abs(gk.data.at(k, k).adjoint() + gk.data.at(k, k)));
        res.report.add("keldysh-equal-time", "anti-hermiticity of the Keldysh function",
                       keldysh_eq, cfg.tol("keldysh_equal_time", 1e-11));
    }
    // Conjugation pairing at every probe energy (the energy enters as an exact phase).
    {
        double worst = 0.0;
        std::vector<double> energies = cfg.run.energy_sweep;
        if (energies.empty()) energies = {0.0};
        for (double e : energies) {
            const GFKernel gr = sample.retarded.with_energy(e);
            const GFKernel ga = sample.advanced.with_energy(e);
            for (int k = 0; k < cfg.grid.points(); ++k)
                for (int kp = 0; kp <= k; ++kp)
                    worst = std::max(worst, max_abs(gr.at(k, kp).adjoint() - ga.at(kp, k)));
        }
        res.report.add("retarded-advanced-pairing", "conjugation pairing of causal functions",
                       worst, cfg.tol("ra_pairing", 1e-11));
    }

    std::vector<int> probes = cfg.run.probe_leads;
    if (probes.empty())
        for (int j = 0; j < ctx.spec.lead_count(); ++j) probes.push_back(j);
    double langreth = 0.0;
    for (int j : probes) {
        const GFKernel mixed = u.set.lesser;
        langreth = std::max(
            langreth, langreth_residual(ctx, j, mixed, u.psi_col(j, ctx.spec.sample_dim()),
                                        sample.lesser, sample.retarded));
    }
    auto& le = res.report.add("langreth-identity", "Langreth tunneling identity", langreth,
                              cfg.tol("langreth", 5e-3));
    if (cfg.run.order_check) {
        const TimeGrid fine_grid = cfg.grid.refined();
        const UnionBlock uf = build_union_block(ctx, fine_grid);
        const GFSet sf = slice_set(uf.set, sample_indices(ctx));
        double fine = 0.0;
        for (int j : probes)
            fine = std::max(fine, langreth_residual(ctx, j, uf.set.lesser,
                                                    uf.psi_col(j, ctx.spec.sample_dim()),
                                                    sf.lesser, sf.retarded));
        le.observed_order = observed_order(langreth, fine);
        le.pass = le.pass && le.observed_order >= 1.9;
    }

    if (ctx.sample_is_vacuum()) {
        const LesserSource src = lesser_source_kernel(ctx, cfg.grid);
        const auto vecs = ctx.sample_site_vectors();
        const GFKernel g0r = free_kernel(ctx.sys.h, cfg.grid, 0.0, GFSpecies::retarded, vecs,
                                         vecs, ctx.sample_labels());
        const GFKernel g0a = free_kernel(ctx.sys.h, cfg.grid, 0.0, GFSpecies::advanced, vecs,
                                         vecs, ctx.sample_labels());
        res.report.add("keldysh-decoupling", "decoupling Keldysh identity",
                       keldysh_decoupling_residual(sample.lesser, src.s_full, g0r, g0a),
                       cfg.tol("keldysh_decoupling", 1e-2));
        const PairKernel s0_spectral = lesser_source_spectral_route(ctx.spec, cfg.grid);
        double s0 = 0.0;
        for (std::size_t i = 0; i < src.s_zero.vals.size(); ++i)
            s0 = std::max(s0, max_abs(src.s_zero.vals[i] - s0_spectral.vals[i]));
        res.report.add("lesser-source-order0", "closed form of the decoupled source kernel", s0,
                       cfg.tol("lesser_source_order0", 1e-10));
    }

    if (ctx.spec.xi == 0.0)
        res.report.add("free-reduction", "reduction to the one-body theory",
                       xi0_reduction_residual(ctx, sample), cfg.tol("xi0_reduction", 1e-9));

    if (cfg.run.export_kernels) {
        for (const GFKernel* k : {&sample.lesser, &sample.greater, &sample.retarded,
                                  &sample.advanced}) {
            ExportedKernel ek;
            ek.name = std::string("kernel_") + species_name(k->species) + "_sample";
            ek.kind = "greens";
            ek.gf = *k;
            ek.grid = cfg.grid;
            ek.block = k->block;
            res.kernels.push_back(std::move(ek));
        }
    }
    return res;
}

// ------------------------------- self-energy audit -------------------------------

inline ScenarioResult run_selfenergy_audit(const ScenarioConfig& cfg, const EDContext& ctx) {
    ScenarioResult res;
    res.report.grid = cfg.grid;
    Rng rng(cfg.run.seed);
    const auto vecs = ctx.sample_site_vectors();
    const BlockLabels labels = ctx.sample_labels();

    struct Resolution {
        GFSet sample;
        GFKernel g0r, g0a;
        GridFunction vhf;
        PairKernel anti;
        SelfEnergyKernel red_r, red_a, irr_r, irr_a;
    };
    auto build = [&](const TimeGrid& grid) {
        Resolution r;
        r.sample = build_interacting_gf(ctx.frame, ctx.rho_blk, vecs, labels, grid);
        r.g0r = free_kernel(ctx.sys.h, grid, 0.0, GFSpecies::retarded, vecs, vecs, labels);
        r.g0a = free_kernel(ctx.sys.h, grid, 0.0, GFSpecies::advanced, vecs, vecs, labels);
        r.vhf = hartree_fock_potential(ctx, grid);
        r.anti = commutator_anticommutator_kernel(ctx, grid);
        r.red_r = reducible_kernel(ctx, grid, 0.0, SEBranch::retarded, &r.anti, &r.vhf);
        r.red_a = reducible_kernel(ctx, grid, 0.0, SEBranch::advanced, &r.anti, &r.vhf);
        r.irr_r = irreducible_from_reducible(r.red_r, r.g0r);
        r.irr_a = irreducible_from_reducible(r.red_a, r.g0a);
        return r;
    };
    Resolution r = build(cfg.grid);

    double vhf_herm = 0.0;
    for (const auto& v : r.vhf) vhf_herm = std::max(vhf_herm, max_abs(v - v.adjoint()));
    res.report.add("hartree-fock-hermiticity", "self-adjointness of the mean-field potential",
                   vhf_herm, cfg.tol("vhf_hermitian", 1e-11));
    res.report.add("self-energy-pairing", "conjugation pairing of the reducible self-energy",
                   adjoint_pairing_residual(r.red_r, r.red_a), cfg.tol("adjoint_pairing", 1e-10));
    {
        // The two branch constructions must agree through conjugation (a discrete
        // algebra identity, independent of the grid error).
        double worst = 0.0;
        for (int k = 0; k < cfg.grid.points(); ++k)
            for (int kp = 0; kp <= k; ++kp)
                worst = std::max(worst, max_abs(r.irr_r.mem.at(k, kp).adjoint() -
                                                r.irr_a.mem.at(kp, k)));
        res.report.add("irreducible-branch-pairing",
                       "conjugation pairing of the irreducible self-energy", worst,
                       cfg.tol("irreducible_pairing", 1e-10));
    }

    auto& red_entry = res.report.add(
        "reducible-identity", "reducible self-energy identity",
        std::max(reducible_identity_residual(r.sample.retarded, r.g0r, r.red_r),
                 reducible_identity_residual(r.sample.advanced, r.g0a, r.red_a)),
        cfg.tol("reducible_identity", 5e-3));
    auto& dyson_entry = res.report.add(
        "dyson-equation", "retarded/advanced Dyson equation",
        std::max({dyson_residual(r.sample.retarded, r.g0r, r.irr_r, true),
                  dyson_residual(r.sample.retarded, r.g0r, r.irr_r, false),
                  dyson_residual(r.sample.advanced, r.g0a, r.irr_a, true),
                  dyson_residual(r.sample.advanced, r.g0a, r.irr_a, false)}),
        cfg.tol("dyson", 5e-3));
    if (cfg.run.order_check) {
        const Resolution f = build(cfg.grid.refined());
        const double red_fine =
            std::max(reducible_identity_residual(f.sample.retarded, f.g0r, f.red_r),
                     reducible_identity_residual(f.sample.advanced, f.g0a, f.red_a));
        red_entry.observed_order = observed_order(red_entry.residual, red_fine);
        red_entry.pass = red_entry.pass && red_entry.observed_order >= 1.9;
        const double dyson_fine =
            std::max({dyson_residual(f.sample.retarded, f.g0r, f.irr_r, true),
                      dyson_residual(f.sample.retarded, f.g0r, f.irr_r, false),
                      dyson_residual(f.sample.advanced, f.g0a, f.irr_a, true),
                      dyson_residual(f.sample.advanced, f.g0a, f.irr_a, false)});
        dyson_entry.observed_order = observed_order(dyson_entry.residual, dyson_fine);
        dyson_entry.pass = dyson_entry.pass && dyson_entry.observed_order >= 1.9;
    }

    std::optional<LesserSource> src;
    std::optional<PairKernel> sigma_less;
    if (ctx.sample_is_vacuum()) {
        src = lesser_source_kernel(ctx, cfg.grid);
        sigma_less = lesser_sigma(src->s_full, r.irr_r, r.irr_a, r.g0r, r.g0a);
        res.report.add(
            "keldysh-identity", "Keldysh identity for the lesser function",
            keldysh_identity_residual(r.sample.lesser, r.sample.retarded, *sigma_less,
                                      r.sample.advanced),
            cfg.tol("keldysh_identity", 1e-2));
    }

    res.report.add("retarded-dissipativity", "dissipativity of the reducible memory kernel",
                   std::max(0.0, dissipativity_suite_max(r.red_r, rng, cfg.run.eta_list, 10)),
                   cfg.tol("dissipativity", 1e-8));
    res.report.add(
        "causal-positivity", "causal positivity lemma",
        std::max(0.0, -positivity_suite_min_eigenvalue(rng, cfg.grid, cfg.run.eta_list, 50)),
        cfg.tol("positivity", 1e-8));
    {
        double worst = -1e300;
        for (double eta : cfg.run.eta_list) {
            for (int c = 0; c < 5; ++c) {
                GridVectorFunction phi(cfg.grid.points());
                const VectorXcd c0 = random_vector(rng, ctx.spec.sample_dim());
                const VectorXcd c1 = random_vector(rng, ctx.spec.sample_dim());
                for (int k = 0; k < cfg.grid.points(); ++k)
                    phi[k] = c0 + (cfg.grid.t(k) / cfg.grid.t_max) * c1;
                worst = std::max(worst,
                                 irreducible_dissipativity_form(r.irr_r, phi, 0.0, eta));
            }
        }
        res.report.add("resolvent-dissipativity",
                       "dissipativity of the irreducible self-energy", std::max(0.0, worst),
                       cfg.tol("resolvent_dissipativity", 1e-8));
    }
    {
        Rng prng(cfg.run.seed + 7);
        VectorXcd phi0 = VectorXcd::Zero(ctx.layout().total);
        phi0.head(ctx.spec.sample_dim()) =
            random_vector(prng, ctx.spec.sample_dim(), /*normalize=*/true);
        const PropagatorRun run = effective_propagator(ctx.sys.h, r.irr_r, 0.0, phi0, cfg.grid);
        res.report.add("propagator-contractivity", "contractive effective propagator",
                       std::max(0.0, run.max_norm_growth),
                       cfg.tol("contractivity", 10.0 * cfg.grid.dt));
        res.report.add("propagator-two-routes",
                       "effective propagator against its integral equation", run.route_gap,
                       cfg.tol("propagator_routes", 20.0 * cfg.grid.dt * cfg.grid.dt));
    }

    if (cfg.run.xi_sweep.size() >= 2 && ctx.sample_is_vacuum()) {
        std::vector<double> ratios;
        for (double xi : cfg.run.xi_sweep) {
            ModelSpec spec_xi = ctx.spec;
            spec_xi.xi = xi;
            const EDContext cxi = EDContext::build(spec_xi);
            const LesserSource sxi = lesser_source_kernel(cxi, cfg.grid);
            double diff = 0.0;
            for (std::size_t i = 0; i < sxi.s_full.vals.size(); ++i)
                diff = std::max(diff, max_abs(sxi.s_full.vals[i] - sxi.s_zero.vals[i] -
                                              xi * sxi.s_one.vals[i]));
            ratios.push_back(diff / (xi * xi));
        }
        const double lo = *std::min_element(ratios.begin(), ratios.end());
        const double hi = *std::max_element(ratios.begin(), ratios.end());
        res.report.add("source-expansion-order", "coupling expansion of the source kernel",
                       lo > 0.0 ? hi / lo - 1.0 : 0.0,
                       cfg.tol("source_expansion_band", 0.2));
    }

    if (cfg.run.export_kernels) {
        auto push_plain = [&](const std::string& name, const std::string& kind,
                              const PairKernel& data) {
            ExportedKernel ek;
            ek.name = name;
            ek.kind = kind;
            ek.plain = data;
            ek.grid = cfg.grid;
            ek.block = labels;
            res.kernels.push_back(std::move(ek));
        };
        push_plain("kernel_selfenergy_reducible_R", "reducible_R", r.red_r.mem);
        push_plain("kernel_selfenergy_irreducible_R", "irreducible_R", r.irr_r.mem);
        if (src) push_plain("kernel_selfenergy_lesser_source", "lesser_source_S", src->s_full);
        if (sigma_less) push_plain("kernel_selfenergy_lesser", "lesser", *sigma_less);
    }
    return res;
}

// ------------------------------- dispatch and emission -------------------------------

inline ScenarioResult run_pipeline(const ScenarioConfig& cfg) {
    MatrixXcd sample_density;  // vacuum by default
    const EDContext ctx = EDContext::build(cfg.model, sample_density);
    if (cfg.run.pipeline == "currents") return run_currents_pipeline(cfg, ctx);
    if (cfg.run.pipeline == "identity-audit") return run_identity_audit(cfg, ctx);
    return run_selfenergy_audit(cfg, ctx);
}

inline void emit_outputs(const ScenarioResult& res, const ScenarioConfig& cfg,
                         const std::filesystem::path& out_dir) {
    atomic_write(out_dir / "report.json", res.report.to_json().dump(2) + "\n");
    if (!res.traces.empty())
        atomic_write(out_dir / "currents.csv", currents_csv_body(res.traces));
    for (const auto& ek : res.kernels) {
        if (ek.gf) {
            atomic_write(out_dir / (ek.name + ".csv"), kernel_csv_body(*ek.gf));
            atomic_write(out_dir / (ek.name + ".json"),
                         kernel_sidecar(*ek.gf, ek.kind, cfg.hash).dump(2) + "\n");
        } else if (ek.plain) {
            atomic_write(out_dir / (ek.name + ".csv"),
                         kernel_csv_body(*ek.plain, ek.grid, ek.block));
            atomic_write(out_dir / (ek.name + ".json"),
                         plain_kernel_sidecar(ek.kind, ek.energy, ek.grid, ek.block, cfg.hash)
                                 .dump(2) +
                             "\n");
        }
    }
}

}  // namespace negf
