#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "asyncdiff/regression.hpp"
#include "asyncdiff/sampler.hpp"
#include "asyncdiff/topology.hpp"

namespace asyncdiff {

struct NetworkState {
    Eigen::MatrixXd W;  // K x M, row k is agent k's iterate
    long iter = 0;
};

struct Trajectory {
    struct Record {
        int run;
        long iter;
        double msd;  // (1/K) sum_k ||w° - w_k||^2 at the combine instant
        double m4;   // (1/K) sum_k ||w° - w_k||^4
    };
    std::vector<Record> records;  // grouped by run, iterations increasing
    std::uint64_t config_digest = 0;
};

// One adapt step: psi_k = w_k - mu_k * stochastic gradient (batch size B,
// uniform with replacement). Agents with mu_k = 0 copy their iterate. B >= N
// selects the deterministic full-batch gradient.
Eigen::MatrixXd local_step(const NetworkState& state, const Realization& real,
                           const std::vector<AgentDataset>& datasets,
                           const std::vector<QuadraticRisk>& risks, int t, int B, Rng& rng);

// Combine: w_k = sum_l a_{lk} psi_l.
Eigen::MatrixXd combine_step(const Eigen::MatrixXd& psi, const Realization& real);

struct ExperimentOptions {
    int runs = 1;
    int batch = 1;
    std::uint64_t master_seed = 0;
    int threads = 1;  // runs executed in parallel, merged by run index
};

// Full experiment: for every run, W starts at zero and the schedule is
// executed; MSD is recorded at combine instants. Deterministic per
// (master_seed, run).
Trajectory run_experiment(const NetworkSpec& spec, const Schedule& sched, const Problem& prob,
                          const Eigen::VectorXd& wo, const ExperimentOptions& opts);

// Mean of the MSD records over the last ceil(f * I) iterations, averaged
// across runs.
double steady_state_msd(const Trajectory& traj, double tail_fraction);
double steady_state_m4(const Trajectory& traj, double tail_fraction);

inline double to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace asyncdiff
