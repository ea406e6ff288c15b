// negfwb.cpp — scenario runner: executes a named pipeline from a JSON config and
// emits CSV/JSON result bundles plus a residual report.
//
// Exit codes: 0 all residuals pass, 1 residual failure, 2 invalid config,
// 3 Fock dimension overflow, 4 numerical failure.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "negf/pipelines.hpp"

int main(int argc, char** argv) {
    CLI::App app{"negfwb — non-equilibrium Green's function transport workbench"};
    app.require_subcommand(1);

    CLI::App* run = app.add_subcommand("run", "run a scenario config");
    std::string config_path;
    std::string out_dir;
    std::optional<double> dt_override, xi_override;
    std::optional<std::uint64_t> seed_override;
    std::string pipeline_override;
    run->add_option("config", config_path, "scenario config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (default: run.out_dir)");
    run->add_option("--dt", dt_override, "override the grid step");
    run->add_option("--xi", xi_override, "override the interaction strength");
    run->add_option("--seed", seed_override, "override the random seed");
    run->add_option("--pipeline", pipeline_override,
                    "override the pipeline (currents | identity-audit | selfenergy-audit)");

    CLI11_PARSE(app, argc, argv);

    try {
        negf::ScenarioConfig cfg = negf::parse_scenario_file(config_path);
        if (dt_override) cfg.grid = negf::TimeGrid::make(cfg.grid.t_max, *dt_override);
        if (xi_override) {
            cfg.model.xi = *xi_override;
            cfg.model.validate();
        }
        if (seed_override) cfg.run.seed = *seed_override;
        if (!pipeline_override.empty()) {
            if (pipeline_override != "currents" && pipeline_override != "identity-audit" &&
                pipeline_override != "selfenergy-audit")
                throw negf::ConfigError("run.pipeline: unknown pipeline '" + pipeline_override +
                                        "'");
            cfg.run.pipeline = pipeline_override;
        }
        if (!out_dir.empty()) cfg.run.out_dir = out_dir;

        const negf::ScenarioResult res = negf::run_pipeline(cfg);
        negf::emit_outputs(res, cfg, cfg.run.out_dir);
        res.report.print();
        std::printf("report: %s\n", (std::filesystem::path(cfg.run.out_dir) / "report.json")
                                        .string()
                                        .c_str());
        return res.report.all_pass() ? 0 : 1;
    } catch (const negf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const negf::FockCapError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const negf::NumericError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
