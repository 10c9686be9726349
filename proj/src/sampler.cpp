#include "asyncdiff/sampler.hpp"

#include <string>

#include "asyncdiff/errors.hpp"

namespace asyncdiff {

Realization sample_realization(const NetworkSpec& spec, const Schedule& sched, long iteration,
                               Rng& rng) {
    (void)sched;
    const int K = spec.K;
    Realization real;
    real.iteration = iteration;
    real.participants.assign(K, 1);
    real.mu_vec = Eigen::VectorXd::Constant(K, sched.mu);

    if (spec.mode == Mode::FedSgd) {
        real.A_combine = Eigen::MatrixXd::Constant(K, K, 1.0 / static_cast<double>(K));
        return real;
    }

    // one participation draw per agent governs the whole global iteration
    for (int k = 0; k < K; ++k) {
        const bool on = rng.bernoulli(spec.q(k));
        real.participants[k] = on ? 1 : 0;
        if (!on) real.mu_vec(k) = 0.0;
    }

    if (spec.mode == Mode::FedAvg) {
        int L = 0;
        for (int k = 0; k < K; ++k) L += real.participants[k];
        real.A_combine = Eigen::MatrixXd::Identity(K, K);
        if (L > 0) {
            const double w = 1.0 / static_cast<double>(L);
            for (int k = 0; k < K; ++k) {
                if (!real.participants[k]) continue;
                real.A_combine(k, k) = 0.0;
                for (int l = 0; l < K; ++l)
                    if (real.participants[l]) real.A_combine(l, k) = w;
            }
        }
        return real;
    }

    real.A_combine = Eigen::MatrixXd::Identity(K, K);
    for (int k = 0; k < K; ++k) {
        if (!real.participants[k]) continue;
        double included = 0.0;
        for (int l : spec.neighborhoods[k]) {
            if (l == k) continue;
            if (rng.bernoulli(spec.Q(l, k))) {
                real.A_combine(l, k) = spec.A(l, k);
                included += spec.A(l, k);
            }
        }
        real.A_combine(k, k) = 1.0 - included;
    }
    return real;
}

Eigen::MatrixXd matrix_at(const Realization& real, const Schedule& sched, int t) {
    if (t < 1 || t > sched.T)
        throw IndexError("local index t=" + std::to_string(t) + " outside [1," +
                         std::to_string(sched.T) + "]");
    if (t != sched.T)
        return Eigen::MatrixXd::Identity(real.A_combine.rows(), real.A_combine.cols());
    return real.A_combine;
}

Eigen::MatrixXd empirical_first_moment(const NetworkSpec& spec, const Schedule& sched,
                                       int n_draws, Rng& rng) {
    if (n_draws < 1) throw ConfigError("n_draws must be >= 1");
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(spec.K, spec.K);
    for (int i = 0; i < n_draws; ++i) {
        const Realization r = sample_realization(spec, sched, i, rng);
        acc += r.A_combine;
    }
    return acc / static_cast<double>(n_draws);
}

}  // namespace asyncdiff
