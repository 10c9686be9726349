#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "asyncdiff/regression.hpp"
#include "asyncdiff/sampler.hpp"
#include "asyncdiff/topology.hpp"

namespace asyncdiff {

// Block layout used throughout: a KM x KM matrix is viewed as K x K blocks of
// size M x M. Block pairs (l, k) are enumerated column-major, pair_index =
// k*K + l. bvec stacks vec(S_{lk}) in that order, and the block Kronecker
// product is the unique operator with bvec(B * S * A') = block_kron(A, B) * bvec(S).

Eigen::VectorXd bvec(const Eigen::MatrixXd& S, int K, int M);
Eigen::MatrixXd bvec_inverse(const Eigen::VectorXd& v, int K, int M);
Eigen::MatrixXd block_kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int K, int M);

// Per-local-step moments, block diagonal over the K^2 block pairs:
//   G[(l,k)] = E[(I - mu theta_k H_k) (x) (I - mu theta_l H_l)]
//   C[(l,k)] = mu^2 E[theta_k theta_l] I
struct LocalMoments {
    std::vector<Eigen::MatrixXd> G;  // K^2 blocks of M^2 x M^2, pair index k*K + l
    std::vector<Eigen::MatrixXd> C;
};

// Combine-step moments, dense (K M)^2-square:
//   G = E[ A'(I - M H) (x)_b A'(I - M H) ]
//   C = E[ (A (x)_b A)(M (x)_b M) ]
struct CombineMoments {
    Eigen::MatrixXd G;
    Eigen::MatrixXd C;
};

struct MomentMatrices {
    int K = 0;
    int M = 0;
    NetworkSpec spec;
    LocalMoments local;
    CombineMoments combine;
    std::vector<Eigen::MatrixXd> hessians;  // per-agent Hessians at w°
    std::vector<Eigen::MatrixXd> R_blocks;  // gradient-noise covariances at w°
    bool exact = true;
    int mc_draws = 0;           // used when exact == false
    std::uint64_t mc_seed = 0;  // used when exact == false
};

// Exact expectations under the sampler's law. Decentralized / fedsgd columns
// factor over independent per-agent sampling events (closed-form per-column
// tables); fedavg couples agents through 1/L_i and is handled by exact
// enumeration over the participation pattern of the at-most-four involved
// agents plus a Poisson-binomial distribution of the rest.
LocalMoments build_local_moments(const NetworkSpec& spec, const Schedule& sched,
                                 const std::vector<Eigen::MatrixXd>& hessians);
CombineMoments build_combine_moments(const NetworkSpec& spec, const Schedule& sched,
                                     const std::vector<Eigen::MatrixXd>& hessians);

// Monte-Carlo estimate of the same expectations, with entrywise standard
// errors; validation oracle for the exact builders.
struct McMoments {
    Eigen::MatrixXd G, C;
    Eigen::MatrixXd G_se, C_se;
};
McMoments mc_moment_oracle(const NetworkSpec& spec, const Schedule& sched,
                           const std::vector<Eigen::MatrixXd>& hessians, int n_draws,
                           std::uint64_t seed, bool combine_step = true);

struct MsdReport {
    double msd_lin = 0.0;
    double msd_db = 0.0;
    double rho = 0.0;    // spectral radius of the per-iteration moment operator
    double alpha0 = 0.5; // remainder order (alpha_s = 1 default)
    double max_standard_error = 0.0;  // nonzero only for the MC moment path
};

// Steady-state MSD. One global iteration applies the transition
//   B = A'(I - mu Theta H)^T  with theta held fixed across the T local steps,
// so the error covariance obeys the fixed point x = X x + n with
//   X = E[B (x)_b B],
//   n = sum_m E[a_{mk} a_{ml} theta_m] mu^2 vec(sum_{p<T} D_m^p R_m D_m^p'),
// where D_m = I - mu H_m. Because theta is Bernoulli, (I - mu theta H)^T is
// affine in theta and X is exactly expressible through the same first and
// second sampling moments as the combine-step matrices. The report gives
// (1/K) <bvec(I), (I - X)^{-1} n>. Throws UnstableSpectrum when rho >= 1.
// When mom.exact is false, X and n are Monte-Carlo estimates over
// mom.mc_draws realizations and the largest entrywise standard error is
// reported.
MsdReport theoretical_msd(const MomentMatrices& mom, const Schedule& sched);

struct StabilityReport {
    double mu_max = 0.0;
    double gamma = 1.0;
    bool admissible = false;  // gamma < 1
};

StabilityReport stability_report(const RegularityConstants& constants, const NoiseModel& noise,
                                 const NetworkSpec& spec, const Schedule& sched);

}  // namespace asyncdiff
