// scenario.hpp — JSON scenario configs, the named audit pipelines, and artifact
// emission for the command-line runner

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "negf/audits.hpp"
#include "negf/context.hpp"
#include "negf/export.hpp"
#include "negf/selfenergy.hpp"
#include "negf/transport.hpp"

namespace negf {

struct RunConfig {
    std::string pipeline{"currents"};
    std::vector<int> probe_leads;
    std::vector<double> xi_sweep;
    std::vector<double> energy_sweep;
    std::vector<double> eta_list{0.0, 0.5, 2.0};
    std::string out_dir{"out"};
    std::uint64_t seed{1};
    bool order_check{false};
    bool export_kernels{false};
    std::map<std::string, double> tolerances;
};

struct ScenarioConfig {
    ModelSpec model;
    TimeGrid grid;
    RunConfig run;
    std::uint64_t hash{0};

    double tol(const std::string& name, double fallback) const {
        const auto it = run.tolerances.find(name);
        return it == run.tolerances.end() ? fallback : it->second;
    }
};

// ------------------------------- config parsing -------------------------------

namespace detail {

inline const json& need(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + "." + key + ": missing");
    return j.at(key);
}

inline cplx parse_complex(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(where + ": expected a [re, im] pair");
    return cplx(j[0].get<double>(), j[1].get<double>());
}

inline MatrixXcd parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nested array");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    MatrixXcd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
            throw ConfigError(where + ": ragged rows");
        for (int c = 0; c < cols; ++c)
            m(r, c) = parse_complex(j[r][c], where + "[" + std::to_string(r) + "][" +
                                                 std::to_string(c) + "]");
    }
    return m;
}

inline MatrixXd parse_real_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nested array");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
            throw ConfigError(where + ": ragged rows");
        for (int c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw ConfigError(where + ": expected real numbers");
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

inline VectorXcd parse_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    VectorXcd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v(i) = parse_complex(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const json& j) {
    using detail::need;
    ScenarioConfig cfg;
    const json& jm = need(j, "model", "config");
    for (const auto& s : need(jm, "sample_sites", "model"))
        cfg.model.sample_sites.push_back(s.get<std::string>());
    cfg.model.h_sample = detail::parse_matrix(need(jm, "h_sample", "model"), "model.h_sample");
    cfg.model.w = detail::parse_real_matrix(need(jm, "w", "model"), "model.w");
    cfg.model.xi = need(jm, "xi", "model").get<double>();
    int lead_index = 0;
    for (const auto& jl : need(jm, "leads", "model")) {
        const std::string where = "model.leads[" + std::to_string(lead_index++) + "]";
        LeadSpec lead;
        lead.name = jl.value("name", "lead" + std::to_string(lead_index - 1));
        if (jl.contains("chain")) {
            const json& jc = jl.at("chain");
            lead = LeadSpec::chain(lead.name, need(jc, "sites", where + ".chain").get<int>(),
                                   jc.value("hopping", 1.0), jc.value("onsite", 0.0), 0.0, 1.0,
                                   0.0);
        } else if (jl.contains("h")) {
            lead.h = detail::parse_matrix(jl.at("h"), where + ".h");
            lead.psi = VectorXcd::Zero(lead.sites());
            if (lead.sites() > 0) lead.psi(0) = 1.0;
        } else {
            throw ConfigError(where + ": needs either a chain block or an h matrix");
        }
        if (jl.contains("psi")) lead.psi = detail::parse_vector(jl.at("psi"), where + ".psi");
        lead.phi = detail::parse_vector(need(jl, "phi", where), where + ".phi");
        lead.d = need(jl, "d", where).get<double>();
        lead.beta = need(jl, "beta", where).get<double>();
        lead.mu = need(jl, "mu", where).get<double>();
        cfg.model.leads.push_back(lead);
    }
    cfg.model.validate();

    const json& jg = need(j, "grid", "config");
    cfg.grid = TimeGrid::make(need(jg, "t_max", "grid").get<double>(),
                              need(jg, "dt", "grid").get<double>());

    if (j.contains("run")) {
        const json& jr = j.at("run");
        cfg.run.pipeline = jr.value("pipeline", cfg.run.pipeline);
        if (jr.contains("probe_leads"))
            for (const auto& p : jr.at("probe_leads")) {
                const int lead = p.get<int>();
                if (lead < 0 || lead >= cfg.model.lead_count())
                    throw ConfigError("run.probe_leads: lead index out of range");
                cfg.run.probe_leads.push_back(lead);
            }
        if (jr.contains("xi_sweep"))
            for (const auto& x : jr.at("xi_sweep")) cfg.run.xi_sweep.push_back(x.get<double>());
        if (jr.contains("energy_sweep"))
            for (const auto& x : jr.at("energy_sweep"))
                cfg.run.energy_sweep.push_back(x.get<double>());
        if (jr.contains("eta_list")) {
            cfg.run.eta_list.clear();
            for (const auto& x : jr.at("eta_list")) {
                const double eta = x.get<double>();
                if (eta < 0.0) throw ConfigError("run.eta_list: eta must be >= 0");
                cfg.run.eta_list.push_back(eta);
            }
        }
        cfg.run.out_dir = jr.value("out_dir", cfg.run.out_dir);
        cfg.run.seed = jr.value("seed", cfg.run.seed);
        cfg.run.order_check = jr.value("order_check", cfg.run.order_check);
        cfg.run.export_kernels = jr.value("export_kernels", cfg.run.export_kernels);
        if (jr.contains("tolerances"))
            for (const auto& [key, value] : jr.at("tolerances").items())
                cfg.run.tolerances[key] = value.get<double>();
    }
    if (cfg.run.pipeline != "currents" && cfg.run.pipeline != "identity-audit" &&
        cfg.run.pipeline != "selfenergy-audit")
        throw ConfigError("run.pipeline: unknown pipeline '" + cfg.run.pipeline + "'");
    cfg.hash = fnv1a(j.dump());
    return cfg;
}

inline ScenarioConfig parse_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_scenario(j);
}

// ------------------------------- pipeline plumbing -------------------------------

struct ExportedKernel {
    std::string name;  // file stem
    std::string kind;  // sidecar kind
    std::optional<GFKernel> gf;
    std::optional<PairKernel> plain;
    TimeGrid grid;
    BlockLabels block;
    double energy{0.0};
};

struct ScenarioResult {
    ResidualReport report;
    std::vector<CurrentTrace> traces;
    std::vector<ExportedKernel> kernels;
};

// Union Green's function block: sample sites first, then one contact column per lead.
struct UnionBlock {
    GFSet set;
    int psi_col(int lead, int n_sample) const { return n_sample + lead; }
};

inline UnionBlock build_union_block(const EDContext& ctx, const TimeGrid& grid) {
    std::vector<VectorXcd> vecs = ctx.sample_site_vectors();
    BlockLabels labels = ctx.sample_labels();
    for (int j = 0; j < ctx.spec.lead_count(); ++j) {
        vecs.push_back(ctx.layout().embed_lead(j, ctx.spec.leads[j].psi));
        labels.rows.push_back("psi:" + ctx.spec.leads[j].name);
        labels.cols.push_back("psi:" + ctx.spec.leads[j].name);
    }
    UnionBlock u;
    u.set = build_interacting_gf(ctx.frame, ctx.rho_blk, vecs, labels, grid);
    return u;
}

inline GFKernel slice_kernel(const GFKernel& big, const std::vector<int>& rows,
                             const std::vector<int>& cols) {
    GFKernel out;
    out.species = big.species;
    out.energy = big.energy;
    out.grid = big.grid;
    for (int r : rows) out.block.rows.push_back(big.block.rows[r]);
    for (int c : cols) out.block.cols.push_back(big.block.cols[c]);
    out.data = PairKernel::zero(big.grid, static_cast<int>(rows.size()),
                                static_cast<int>(cols.size()));
    for (int k = 0; k < big.grid.points(); ++k)
        for (int kp = 0; kp < big.grid.points(); ++kp)
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (std::size_t j = 0; j < cols.size(); ++j)
                    out.data.at(k, kp)(i, j) = big.data.at(k, kp)(rows[i], cols[j]);
    return out;
}

inline GFSet slice_set(const GFSet& big, const std::vector<int>& idx) {
    GFSet out;
    out.lesser = slice_kernel(big.lesser, idx, idx);
    out.greater = slice_kernel(big.greater, idx, idx);
    out.retarded = slice_kernel(big.retarded, idx, idx);
    out.advanced = slice_kernel(big.advanced, idx, idx);
    return out;
}

inline std::vector<int> sample_indices(const EDContext& ctx) {
    std::vector<int> idx(ctx.spec.sample_dim());
    for (int i = 0; i < ctx.spec.sample_dim(); ++i) idx[i] = i;
    return idx;
}

}  // namespace negf
