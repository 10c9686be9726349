#include "asyncdiff/diffusion.hpp"

#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "asyncdiff/errors.hpp"

namespace asyncdiff {

namespace {
constexpr double kDivergenceThreshold = 1e100;

void check_finite(const Eigen::MatrixXd& W, long iter) {
    for (int k = 0; k < W.rows(); ++k)
        for (int j = 0; j < W.cols(); ++j)
            if (!std::isfinite(W(k, j)) || std::abs(W(k, j)) > kDivergenceThreshold)
                throw NonFiniteIterate("agent " + std::to_string(k) + " diverged at iteration " +
                                       std::to_string(iter));
}
}  // namespace

Eigen::MatrixXd local_step(const NetworkState& state, const Realization& real,
                           const std::vector<AgentDataset>& datasets,
                           const std::vector<QuadraticRisk>& risks, int t, int B, Rng& rng) {
    (void)t;
    const int K = static_cast<int>(state.W.rows());
    Eigen::MatrixXd psi = state.W;
    std::vector<int> batch;
    for (int k = 0; k < K; ++k) {
        const double mu_k = real.mu_vec(k);
        if (mu_k == 0.0) continue;
        const Eigen::VectorXd w = state.W.row(k).transpose();
        Eigen::VectorXd g;
        const int N = static_cast<int>(datasets[k].features.rows());
        if (B >= N) {
            g = risks[k].gradient(w);
        } else {
            batch.clear();
            for (int b = 0; b < B; ++b) batch.push_back(rng.uniform_int(N));
            g = stochastic_gradient(datasets[k], w, batch);
        }
        psi.row(k) = (w - mu_k * g).transpose();
    }
    check_finite(psi, state.iter);
    return psi;
}

Eigen::MatrixXd combine_step(const Eigen::MatrixXd& psi, const Realization& real) {
    // w_k = sum_l a_{lk} psi_l  ==  W' = A_combine' * Psi
    Eigen::MatrixXd W = real.A_combine.transpose() * psi;
    check_finite(W, real.iteration);
    return W;
}

namespace {

std::vector<Trajectory::Record> run_single(const NetworkSpec& spec, const Schedule& sched,
                                           const Problem& prob,
                                           const std::vector<QuadraticRisk>& risks,
                                           const Eigen::VectorXd& wo,
                                           const ExperimentOptions& opts, int run) {
    const int K = spec.K;
    const int M = static_cast<int>(wo.size());
    NetworkState state;
    state.W = Eigen::MatrixXd::Zero(K, M);
    std::vector<Trajectory::Record> recs;
    recs.reserve(sched.iters);
    for (long i = 1; i <= sched.iters; ++i) {
        Rng rng = Rng::substream(opts.master_seed, static_cast<std::uint64_t>(run),
                                 static_cast<std::uint64_t>(i));
        const Realization real = sample_realization(spec, sched, i, rng);
        for (int t = 1; t <= sched.T; ++t) {
            Eigen::MatrixXd psi = local_step(state, real, prob.agents, risks, t, opts.batch, rng);
            if (t == sched.T)
                state.W = combine_step(psi, real);
            else
                state.W = std::move(psi);
        }
        state.iter = i;
        double msd = 0.0, m4 = 0.0;
        for (int k = 0; k < K; ++k) {
            const double e2 = (wo.transpose() - state.W.row(k)).squaredNorm();
            msd += e2;
            m4 += e2 * e2;
        }
        recs.push_back({run, i, msd / K, m4 / K});
    }
    return recs;
}

}  // namespace

Trajectory run_experiment(const NetworkSpec& spec, const Schedule& sched, const Problem& prob,
                          const Eigen::VectorXd& wo, const ExperimentOptions& opts) {
    if (opts.runs < 1) throw ConfigError("runs must be >= 1");
    std::vector<QuadraticRisk> risks;
    risks.reserve(prob.agents.size());
    for (const auto& ds : prob.agents) risks.push_back(QuadraticRisk::from_dataset(ds));

    std::vector<std::vector<Trajectory::Record>> per_run(opts.runs);
    std::vector<std::exception_ptr> errors(opts.runs);

    const auto run_or_diverge = [&](int r) {
        try {
            return run_single(spec, sched, prob, risks, wo, opts, r);
        } catch (const NonFiniteIterate& e) {
            throw Diverged("run " + std::to_string(r) + ": " + e.what());
        }
    };

    const int threads = std::max(1, std::min(opts.threads, opts.runs));
    if (threads == 1) {
        for (int r = 0; r < opts.runs; ++r) per_run[r] = run_or_diverge(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < opts.runs; r = next.fetch_add(1)) {
                    try {
                        per_run[r] = run_or_diverge(r);
                    } catch (...) {
                        errors[r] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        for (int r = 0; r < opts.runs; ++r)
            if (errors[r]) std::rethrow_exception(errors[r]);
    }

    Trajectory traj;
    for (int r = 0; r < opts.runs; ++r)
        traj.records.insert(traj.records.end(), per_run[r].begin(), per_run[r].end());
    return traj;
}

namespace {
double tail_mean(const Trajectory& traj, double f, bool fourth) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("tail fraction must lie in (0,1]");
    long max_iter = 0;
    for (const auto& r : traj.records) max_iter = std::max(max_iter, r.iter);
    const long cutoff = max_iter - static_cast<long>(std::ceil(f * static_cast<double>(max_iter))) + 1;
    double acc = 0.0;
    long n = 0;
    for (const auto& r : traj.records) {
        if (r.iter < cutoff) continue;
        acc += fourth ? r.m4 : r.msd;
        ++n;
    }
    if (n == 0) throw EmptyTail("no records in trajectory tail");
    return acc / static_cast<double>(n);
}
}  // namespace

double steady_state_msd(const Trajectory& traj, double tail_fraction) {
    return tail_mean(traj, tail_fraction, false);
}

double steady_state_m4(const Trajectory& traj, double tail_fraction) {
    return tail_mean(traj, tail_fraction, true);
}

}  // namespace asyncdiff
