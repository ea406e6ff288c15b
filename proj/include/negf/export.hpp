// export.hpp — CSV/JSON artifact emission with atomic writes and a residual report

#pragma once

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "negf/common.hpp"
#include "negf/greens.hpp"
#include "negf/transport.hpp"

namespace negf {

using json = nlohmann::json;

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Write-then-rename so partially written artifacts never appear under the final name.
inline void atomic_write(const std::filesystem::path& path, const std::string& body) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericError("atomic_write: cannot open " + tmp.string());
        out << body;
        if (!out.good()) throw NumericError("atomic_write: write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct ResidualEntry {
    std::string name;     // stable machine-readable identity slug
    std::string anchor;   // identity the residual audits, by its physics name
    double residual{0.0};
    double tolerance{0.0};
    bool pass{false};
    double observed_order{-1.0};  // filled by paired half-step runs; -1 when absent
};

struct ResidualReport {
    TimeGrid grid;
    std::vector<ResidualEntry> entries;

    ResidualEntry& add(const std::string& name, const std::string& anchor, double residual,
                       double tolerance) {
        ResidualEntry e;
        e.name = name;
        e.anchor = anchor;
        e.residual = residual;
        e.tolerance = tolerance;
        e.pass = residual <= tolerance;
        entries.push_back(e);
        return entries.back();
    }

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }

    json to_json() const {
        json out;
        out["grid"] = {{"t_max", grid.t_max}, {"dt", grid.dt}, {"points", grid.points()}};
        out["entries"] = json::array();
        for (const auto& e : entries) {
            json je = {{"name", e.name},
                       {"anchor", e.anchor},
                       {"residual", e.residual},
                       {"tolerance", e.tolerance},
                       {"pass", e.pass}};
            if (e.observed_order >= 0.0) je["observed_order"] = e.observed_order;
            out["entries"].push_back(je);
        }
        out["all_pass"] = all_pass();
        return out;
    }

    void print(std::FILE* stream = stdout) const {
        std::fprintf(stream, "%-34s %-12s %-12s %s\n", "identity", "residual", "tolerance",
                     "status");
        for (const auto& e : entries) {
            std::fprintf(stream, "%-34s %-12.3e %-12.3e %s", e.name.c_str(), e.residual,
                         e.tolerance, e.pass ? "pass" : "FAIL");
            if (e.observed_order >= 0.0) std::fprintf(stream, "  order=%.2f", e.observed_order);
            std::fprintf(stream, "\n");
        }
    }
};

// Kernel CSV: columns (s, s', row_site, col_site, re, im), rows ordered by
// (k, k', row, col). Values follow the theta(0) = 1/2 reading convention.
inline std::string kernel_csv_body(const GFKernel& kernel) {
    std::string body = "s,s_prime,row_site,col_site,re,im\n";
    for (int k = 0; k < kernel.grid.points(); ++k)
        for (int kp = 0; kp < kernel.grid.points(); ++kp) {
            const MatrixXcd cell = kernel.reported(k, kp);
            for (int i = 0; i < kernel.rows(); ++i)
                for (int j = 0; j < kernel.cols(); ++j) {
                    body += format_double(kernel.grid.t(k));
                    body += ',';
                    body += format_double(kernel.grid.t(kp));
                    body += ',';
                    body += kernel.block.rows[i];
                    body += ',';
                    body += kernel.block.cols[j];
                    body += ',';
                    body += format_double(cell(i, j).real());
                    body += ',';
                    body += format_double(cell(i, j).imag());
                    body += '\n';
                }
        }
    return body;
}

inline json kernel_sidecar(const GFKernel& kernel, const std::string& kind,
                           std::uint64_t config_hash) {
    json side;
    side["schema"] = "kernel-csv-v1";
    side["kind"] = kind;
    side["species"] = species_name(kernel.species);
    side["energy"] = kernel.energy;
    side["grid"] = {{"t_max", kernel.grid.t_max},
                    {"dt", kernel.grid.dt},
                    {"points", kernel.grid.points()}};
    side["block"] = {{"rows", kernel.block.rows}, {"cols", kernel.block.cols}};
    side["config_hash"] = config_hash;
    side["version"] = "0.1.0";
    side["created"] = []() {
        char buf[32];
        const std::time_t now = std::time(nullptr);
        std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&now));
        return std::string(buf);
    }();
    return side;
}

// Plain kernel CSV for self-energy objects (interior values, no reading convention).
inline std::string kernel_csv_body(const PairKernel& data, const TimeGrid& grid,
                                   const BlockLabels& block) {
    std::string body = "s,s_prime,row_site,col_site,re,im\n";
    for (int k = 0; k < grid.points(); ++k)
        for (int kp = 0; kp < grid.points(); ++kp) {
            const MatrixXcd& cell = data.at(k, kp);
            for (int i = 0; i < data.rows; ++i)
                for (int j = 0; j < data.cols; ++j) {
                    body += format_double(grid.t(k));
                    body += ',';
                    body += format_double(grid.t(kp));
                    body += ',';
                    body += block.rows[i];
                    body += ',';
                    body += block.cols[j];
                    body += ',';
                    body += format_double(cell(i, j).real());
                    body += ',';
                    body += format_double(cell(i, j).imag());
                    body += '\n';
                }
        }
    return body;
}

inline json plain_kernel_sidecar(const std::string& kind, double energy, const TimeGrid& grid,
                                 const BlockLabels& block, std::uint64_t config_hash) {
    json side;
    side["schema"] = "kernel-csv-v1";
    side["kind"] = kind;
    side["energy"] = energy;
    side["grid"] = {{"t_max", grid.t_max}, {"dt", grid.dt}, {"points", grid.points()}};
    side["block"] = {{"rows", block.rows}, {"cols", block.cols}};
    side["config_hash"] = config_hash;
    side["version"] = "0.1.0";
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&now));
    side["created"] = buf;
    return side;
}

// Current traces CSV: columns (t, I, method, lead); rows ordered by lead, method,
// then t ascending.
inline std::string currents_csv_body(std::vector<CurrentTrace> traces) {
    std::sort(traces.begin(), traces.end(), [](const CurrentTrace& a, const CurrentTrace& b) {
        if (a.lead != b.lead) return a.lead < b.lead;
        return a.method < b.method;
    });
    std::string body = "t,I,method,lead\n";
    for (const auto& tr : traces)
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            body += format_double(tr.times[i]);
            body += ',';
            body += format_double(tr.values[i]);
            body += ',';
            body += tr.method;
            body += ',';
            body += std::to_string(tr.lead);
            body += '\n';
        }
    return body;
}

}  // namespace negf
