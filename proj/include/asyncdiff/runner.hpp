#pragma once

#include <optional>
#include <string>

#include "asyncdiff/config.hpp"
#include "asyncdiff/io.hpp"

namespace asyncdiff {

struct RunnerOptions {
    std::optional<std::uint64_t> seed_override;
    std::optional<int> runs_override;
    bool paper_scale = false;   // carried by parse_config; kept for reporting
    bool force_exact = false;
    int mc_draws = 0;           // > 0 switches the moment matrices to the MC estimate
    int threads = 1;
};

// Shared problem setup: dataset, risks, Perron weights, limit point.
struct Workspace {
    Problem problem;
    std::vector<QuadraticRisk> risks;
    Eigen::VectorXd pbar;
    Eigen::VectorXd wo;
};

Workspace build_workspace(const ExperimentConfig& cfg);

Trajectory simulate(const ExperimentConfig& cfg, const Workspace& ws, const RunnerOptions& opt);
TheoryOutput theory(const ExperimentConfig& cfg, const Workspace& ws, const RunnerOptions& opt);

// Subcommand bodies; each writes its output files and returns the process
// exit code (diagnostics go to stderr).
int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_csv,
                 const RunnerOptions& opt);
int cmd_theory(const ExperimentConfig& cfg, const std::string& out_report,
               const RunnerOptions& opt);
int cmd_compare(const ExperimentConfig& cfg, const std::string& out_prefix,
                const RunnerOptions& opt);

// Merges a simulation CSV and a theory report into the comparison CSV + SVG;
// refuses mismatched config digests.
void merge_outputs(const std::string& sim_csv, const std::string& report_path,
                   const std::string& out_csv, const std::string& out_svg);

}  // namespace asyncdiff
