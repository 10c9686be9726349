#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "asyncdiff/rng.hpp"

namespace asyncdiff {

// Synthetic linear-regression data for one agent: d(n) = u_n' w* + v(n).
struct AgentDataset {
    Eigen::MatrixXd features;  // N x M, rows are u_n'
    Eigen::VectorXd labels;    // N
    double sigma_v = 0.0;
};

struct Problem {
    std::vector<AgentDataset> agents;
    Eigen::VectorXd w_star;  // shared generative model
};

// Empirical quadratic risk J(w) = (1/N) sum ||d_n - u_n' w||^2.
struct QuadraticRisk {
    Eigen::MatrixXd Ruhat;   // (1/N) sum u u'
    Eigen::VectorXd rduhat;  // (1/N) sum u d

    static QuadraticRisk from_dataset(const AgentDataset& ds);

    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return 2.0 * (Ruhat * w - rduhat); }
    Eigen::MatrixXd hessian() const { return 2.0 * Ruhat; }
};

struct NoiseModel {
    std::vector<Eigen::MatrixXd> Rk;  // gradient-noise covariance at w°, per agent
    double beta_s2 = 0.0;
    double sigma_s2 = 0.0;
    double beta_s4 = 0.0;
    double sigma_s4 = 0.0;
};

struct RegularityConstants {
    double nu = 0.0;
    double delta = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double kappa = 0.0;    // declared: quadratic risks have constant Hessians
    double kappa_s = 0.0;  // declared, not estimated
    double alpha_s = 1.0;  // declared default
};

Problem generate_problem(int K, int N, int M, const Eigen::MatrixXd& Ru,
                         const Eigen::MatrixXd& Rw, const Eigen::VectorXd& sigma_v,
                         std::uint64_t seed);

// Mini-batch gradient (1/|batch|) sum 2 u_n (u_n' w - d_n).
Eigen::VectorXd stochastic_gradient(const AgentDataset& ds, const Eigen::VectorXd& w,
                                    std::span<const int> batch);

// w° = argmin sum_k pbar_k q_k J_k(w), solved via the normal equations.
Eigen::VectorXd limit_point(const std::vector<QuadraticRisk>& risks, const Eigen::VectorXd& pbar,
                            const Eigen::VectorXd& q);

// Covariance of the size-B mini-batch gradient noise at w°; scales as 1/B.
Eigen::MatrixXd noise_covariance(const AgentDataset& ds, const Eigen::VectorXd& wo, int B);

struct ConstantsReport {
    RegularityConstants constants;
    NoiseModel noise;
};

// Estimates the regularity constants and the gradient-noise scalars. The
// probe points for beta_s are w° plus unit-scale Gaussian offsets; the delta
// bound scans at most the first 1000 samples per agent. Estimates feed the
// reported bounds (mu_max, gamma), not correctness.
ConstantsReport estimate_constants(const std::vector<QuadraticRisk>& risks,
                                   const std::vector<AgentDataset>& datasets,
                                   const Eigen::VectorXd& wo, int batch, int probes,
                                   std::uint64_t seed);

}  // namespace asyncdiff
