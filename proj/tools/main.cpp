#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "asyncdiff/config.hpp"
#include "asyncdiff/errors.hpp"
#include "asyncdiff/runner.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw asyncdiff::ConfigError("cannot read config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int env_threads() {
    const char* v = std::getenv("ASYNCDIFF_THREADS");
    if (!v) return 1;
    const int n = std::atoi(v);
    return n > 0 ? n : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"asynchronous diffusion learning: simulation and steady-state theory"};
    app.require_subcommand(1);

    std::string config_path, out_path, preset_name;
    std::uint64_t seed = 0;
    int runs = 0, mc_draws = 0;
    bool paper_scale = false, exact = false;
    bool seed_set = false, runs_set = false;

    const auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--out", out_path, "output path");
        cmd->add_option("--seed", seed, "master seed override")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--runs", runs, "repetition count override")
            ->each([&](const std::string&) { runs_set = true; });
        cmd->add_flag("--paper-scale", paper_scale, "use the publication dataset size (N=10^6)");
        cmd->add_flag("--exact", exact, "force exact moment matrices");
        cmd->add_option("--mc-draws", mc_draws,
                        "estimate combine moments by Monte Carlo with this many draws");
    };

    CLI::App* c_sim = app.add_subcommand("simulate", "run the algorithm, write an MSD CSV");
    CLI::App* c_th = app.add_subcommand("theory", "evaluate the steady-state MSD theory");
    CLI::App* c_cmp = app.add_subcommand("compare", "simulation vs theory: CSV + SVG figure");
    CLI::App* c_pre = app.add_subcommand("preset", "print or save a built-in config");
    add_common(c_sim, true);
    add_common(c_th, true);
    add_common(c_cmp, true);
    c_pre->add_option("name", preset_name, "case1|case2|case3|fedsgd|fedavg")->required();
    c_pre->add_option("--out", out_path, "write the config here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        asyncdiff::RunnerOptions opt;
        if (seed_set) opt.seed_override = seed;
        if (runs_set) opt.runs_override = runs;
        opt.paper_scale = paper_scale;
        opt.force_exact = exact;
        opt.mc_draws = mc_draws;
        opt.threads = env_threads();

        if (c_pre->parsed()) {
            const std::string text = asyncdiff::preset_text(preset_name);
            if (out_path.empty()) {
                std::cout << text << "\n";
            } else {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) throw asyncdiff::ConfigError("cannot open output file: " + out_path);
                out << text << "\n";
            }
            return 0;
        }

        const asyncdiff::ExperimentConfig cfg =
            asyncdiff::parse_config(slurp(config_path), paper_scale);
        if (c_sim->parsed())
            return asyncdiff::cmd_simulate(cfg, out_path.empty() ? "msd.csv" : out_path, opt);
        if (c_th->parsed())
            return asyncdiff::cmd_theory(cfg, out_path.empty() ? "theory.txt" : out_path, opt);
        return asyncdiff::cmd_compare(cfg, out_path.empty() ? "compare" : out_path, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
