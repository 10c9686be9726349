#include "asyncdiff/runner.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <iostream>
#include <sstream>

#include "asyncdiff/diffusion.hpp"
#include "asyncdiff/errors.hpp"
#include "asyncdiff/theory.hpp"

namespace asyncdiff {

Workspace build_workspace(const ExperimentConfig& cfg) {
    Workspace ws;
    ws.problem = generate_problem(cfg.spec.K, cfg.N, cfg.M, cfg.Ru, cfg.Rw, cfg.sigma_v, cfg.seed);
    ws.risks.reserve(ws.problem.agents.size());
    for (const auto& ds : ws.problem.agents) ws.risks.push_back(QuadraticRisk::from_dataset(ds));
    ws.pbar = perron_weights(cfg.spec);
    ws.wo = limit_point(ws.risks, ws.pbar, cfg.spec.q);
    return ws;
}

Trajectory simulate(const ExperimentConfig& cfg, const Workspace& ws, const RunnerOptions& opt) {
    ExperimentOptions eo;
    eo.runs = opt.runs_override.value_or(cfg.runs);
    eo.batch = cfg.batch;
    eo.master_seed = opt.seed_override.value_or(cfg.seed);
    eo.threads = opt.threads;
    Trajectory traj = run_experiment(cfg.spec, cfg.sched, ws.problem, ws.wo, eo);
    traj.config_digest = cfg.digest;
    return traj;
}

TheoryOutput theory(const ExperimentConfig& cfg, const Workspace& ws, const RunnerOptions& opt) {
    const int K = cfg.spec.K;
    std::vector<Eigen::MatrixXd> hessians;
    hessians.reserve(K);
    for (const auto& r : ws.risks) hessians.push_back(r.hessian());

    MomentMatrices mom;
    mom.K = K;
    mom.M = cfg.M;
    mom.spec = cfg.spec;
    mom.hessians = hessians;
    mom.R_blocks.reserve(K);
    for (int k = 0; k < K; ++k)
        mom.R_blocks.push_back(noise_covariance(ws.problem.agents[k], ws.wo, cfg.batch));

    TheoryOutput out;
    if (opt.mc_draws > 0 && !opt.force_exact) {
        mom.exact = false;
        mom.mc_draws = opt.mc_draws;
        mom.mc_seed = opt.seed_override.value_or(cfg.seed);
        out.exact = false;
    }

    out.msd = theoretical_msd(mom, cfg.sched);
    out.max_standard_error = out.msd.max_standard_error;
    const ConstantsReport cr =
        estimate_constants(ws.risks, ws.problem.agents, ws.wo, cfg.batch, 32, cfg.seed);
    out.stability = stability_report(cr.constants, cr.noise, cfg.spec, cfg.sched);
    out.K = K;
    out.M = cfg.M;
    out.T = cfg.sched.T;
    out.mode = mode_name(cfg.spec.mode);
    out.digest = cfg.digest;
    return out;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_csv,
                 const RunnerOptions& opt) {
    try {
        const Workspace ws = build_workspace(cfg);
        const Trajectory traj = simulate(cfg, ws, opt);
        write_csv(out_csv, traj, aggregate_trajectory(traj));
    } catch (const std::exception& e) {
        std::cerr << "simulate: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cmd_theory(const ExperimentConfig& cfg, const std::string& out_report,
               const RunnerOptions& opt) {
    try {
        const Workspace ws = build_workspace(cfg);
        write_report(out_report, theory(cfg, ws, opt));
    } catch (const std::exception& e) {
        std::cerr << "theory: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

namespace {

double report_msd_db(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open report: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("msd_db=", 0) == 0) {
            const std::string v = line.substr(7);
            return v == "-inf" ? -std::numeric_limits<double>::infinity() : std::stod(v);
        }
    }
    throw ConfigError("report has no msd_db entry: " + path);
}

}  // namespace

void merge_outputs(const std::string& sim_csv, const std::string& report_path,
                   const std::string& out_csv, const std::string& out_svg) {
    const std::uint64_t d1 = read_digest(sim_csv);
    const std::uint64_t d2 = read_digest(report_path);
    if (d1 != d2)
        throw ConfigError("config digest mismatch: " + sim_csv + " vs " + report_path);

    std::ifstream in(sim_csv, std::ios::binary);
    std::string line;
    std::getline(in, line);  // digest header
    std::getline(in, line);  // per-run header
    Trajectory traj;
    traj.config_digest = d1;
    while (std::getline(in, line) && line.rfind("# aggregate", 0) != 0) {
        std::istringstream row(line);
        Trajectory::Record r{};
        char c;
        row >> r.run >> c >> r.iter >> c >> r.msd;
        traj.records.push_back(r);
    }

    const double th_db = report_msd_db(report_path);
    write_csv(out_csv, traj, aggregate_trajectory(traj), th_db);
    write_svg(out_svg, aggregate_trajectory(traj), th_db, d1);
}

int cmd_compare(const ExperimentConfig& cfg, const std::string& out_prefix,
                const RunnerOptions& opt) {
    try {
        const Workspace ws = build_workspace(cfg);
        const Trajectory traj = simulate(cfg, ws, opt);
        write_csv(out_prefix + "_sim.csv", traj, aggregate_trajectory(traj));
        write_report(out_prefix + "_theory.txt", theory(cfg, ws, opt));
        merge_outputs(out_prefix + "_sim.csv", out_prefix + "_theory.txt", out_prefix + ".csv",
                      out_prefix + ".svg");
    } catch (const std::exception& e) {
        std::cerr << "compare: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace asyncdiff
