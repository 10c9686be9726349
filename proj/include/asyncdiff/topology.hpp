#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "asyncdiff/errors.hpp"

namespace asyncdiff {

enum class Mode { Decentralized, FedSgd, FedAvg };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

// Agent network: base combination matrix A (left-stochastic, entry (l,k) is
// the weight agent k assigns to agent l), per-agent participation
// probabilities q, and neighbor sampling probabilities Q (entry (l,k) is the
// probability that a participating agent k includes neighbor l).
struct NetworkSpec {
    int K = 0;
    std::vector<std::vector<int>> neighborhoods;  // sorted, each includes k itself
    Eigen::MatrixXd A;                            // K x K
    Eigen::VectorXd q;                            // K
    Eigen::MatrixXd Q;                            // K x K, diagonal unused
    Mode mode = Mode::Decentralized;
};

struct PerronResult {
    Eigen::VectorXd pbar;   // positive, sums to 1
    double eigengap = 0.0;  // magnitude of second-largest eigenvalue
};

// Checks all NetworkSpec invariants; returns the spec unchanged on success.
NetworkSpec validate_network(NetworkSpec spec);

// Closed-form E[A_T] for decentralized / fedsgd:
//   (l,k), l != k : a_{lk} q_k q_{lk}
//   (k,k)         : 1 - q_k * sum_{m in N_k \ {k}} a_{mk} q_{mk}
// Throws ModeError for fedavg (no per-column closed form; the mean matrix is
// doubly stochastic there and its Perron vector is uniform).
Eigen::MatrixXd expected_combination(const NetworkSpec& spec);

// Perron eigenvector of a left-stochastic matrix at eigenvalue 1.
// Throws NotPrimitive when eigenvalue 1 is not simple within tolerance or the
// eigenvector is not strictly positive (disconnected or periodic network).
PerronResult perron(const Eigen::MatrixXd& mat);

// Perron vector for a validated spec in any mode (uniform for fedavg).
Eigen::VectorXd perron_weights(const NetworkSpec& spec);

}  // namespace asyncdiff
