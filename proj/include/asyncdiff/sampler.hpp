#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "asyncdiff/rng.hpp"
#include "asyncdiff/topology.hpp"

namespace asyncdiff {

struct Schedule {
    int T = 1;          // local steps per global iteration
    long iters = 1;     // number of global iterations
    double mu = 1e-4;   // base step-size
};

// One sampled global iteration: participation vector, the combine-step matrix
// and the coupled step-size vector. Whenever mu_vec(k) == 0, column k of
// A_combine is the unit vector e_k (non-participants never combine).
struct Realization {
    long iteration = 0;
    std::vector<std::uint8_t> participants;  // theta
    Eigen::MatrixXd A_combine;               // left-stochastic K x K
    Eigen::VectorXd mu_vec;                  // mu * theta
};

// Draws theta_k ~ Bernoulli(q_k); decentralized agents then include each
// non-self neighbor independently with probability q_{lk} and reconstruct the
// self-weight so columns sum to 1 exactly. fedavg assigns 1/L_i to every
// participating pair (identity iteration when L_i = 0); fedsgd is the
// deterministic (1/K) averaging matrix.
Realization sample_realization(const NetworkSpec& spec, const Schedule& sched, long iteration,
                               Rng& rng);

// A_{(i-1)T+t}: identity during local steps, A_combine at t == T.
Eigen::MatrixXd matrix_at(const Realization& real, const Schedule& sched, int t);

// Monte-Carlo mean of A_combine over n_draws realizations (oracle for
// expected_combination and for the fedavg mean matrix).
Eigen::MatrixXd empirical_first_moment(const NetworkSpec& spec, const Schedule& sched,
                                       int n_draws, Rng& rng);

}  // namespace asyncdiff
