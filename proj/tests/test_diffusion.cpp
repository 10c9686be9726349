#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "asyncdiff/diffusion.hpp"
#include "asyncdiff/errors.hpp"
#include "asyncdiff/regression.hpp"
#include "asyncdiff/rng.hpp"
#include "asyncdiff/sampler.hpp"
#include "asyncdiff/topology.hpp"

using namespace asyncdiff;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

NetworkSpec fedsgd_spec(int K) {
    NetworkSpec s;
    s.K = K;
    s.neighborhoods.resize(K);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) s.neighborhoods[k].push_back(l);
    s.A = MatrixXd::Constant(K, K, 1.0 / K);
    s.q = VectorXd::Ones(K);
    s.Q = MatrixXd::Ones(K, K);
    s.mode = Mode::FedSgd;
    return s;
}

Problem noisy_problem(int K, int M, double sigma, std::uint64_t seed) {
    return generate_problem(K, 300, M, MatrixXd::Identity(M, M), MatrixXd::Identity(M, M),
                            VectorXd::Constant(K, sigma), seed);
}

std::vector<QuadraticRisk> risks_of(const Problem& p) {
    std::vector<QuadraticRisk> r;
    for (const auto& a : p.agents) r.push_back(QuadraticRisk::from_dataset(a));
    return r;
}

Realization certain_realization(const NetworkSpec& spec, double mu) {
    Realization r;
    r.iteration = 1;
    r.participants.assign(spec.K, 1);
    r.A_combine = spec.A;
    r.mu_vec = VectorXd::Constant(spec.K, mu);
    return r;
}

}  // namespace

TEST_CASE("local_step: zero step-size copies the iterate unchanged") {
    Problem p = noisy_problem(2, 2, 0.5, 3);
    auto risks = risks_of(p);
    NetworkSpec spec = fedsgd_spec(2);
    NetworkState st;
    st.W = MatrixXd::Random(2, 2);
    Realization real = certain_realization(spec, 0.0);
    Rng rng = Rng::substream(1, 2, 3);
    MatrixXd psi = local_step(st, real, p.agents, risks, 1, 1, rng);
    CHECK(psi == st.W);
}

TEST_CASE("local_step: the empirical minimizer is a fixed point under full batch") {
    Problem p = noisy_problem(3, 2, 0.4, 7);
    auto risks = risks_of(p);
    NetworkSpec spec = fedsgd_spec(3);
    VectorXd wo = limit_point(risks, VectorXd::Constant(3, 1.0 / 3.0), VectorXd::Ones(3));
    NetworkState st;
    st.W = MatrixXd::Zero(3, 2);
    for (int k = 0; k < 3; ++k) {
        // Each agent sits at its own per-agent minimizer.
        VectorXd wk = risks[k].Ruhat.llt().solve(risks[k].rduhat);
        st.W.row(k) = wk.transpose();
    }
    Realization real = certain_realization(spec, 0.05);
    Rng rng = Rng::substream(1, 2, 3);
    MatrixXd psi = local_step(st, real, p.agents, risks, 1, 1000, rng);
    CHECK((psi - st.W).lpNorm<Eigen::Infinity>() < 1e-12);
    (void)wo;
}

TEST_CASE("local_step: single-sample scalar update by hand") {
    // One sample (u, d) = (1, 2), w = 0, mu = 0.1: psi = 0 - 0.1 * 2*1*(0 - 2) = 0.4.
    AgentDataset ds;
    ds.features = MatrixXd::Constant(1, 1, 1.0);
    ds.labels = VectorXd::Constant(1, 2.0);
    Problem p;
    p.agents = {ds};
    p.w_star = VectorXd::Constant(1, 2.0);
    std::vector<QuadraticRisk> risks = {QuadraticRisk::from_dataset(ds)};
    NetworkSpec spec = fedsgd_spec(1);
    NetworkState st;
    st.W = MatrixXd::Zero(1, 1);
    Realization real = certain_realization(spec, 0.1);
    Rng rng = Rng::substream(9, 9, 9);
    MatrixXd psi = local_step(st, real, p.agents, risks, 1, 1, rng);
    CHECK(psi(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("combine_step: identity combination and exact consensus averaging") {
    Realization real;
    real.iteration = 1;
    real.participants = {1, 1};
    real.A_combine = MatrixXd::Identity(2, 2);
    real.mu_vec = VectorXd::Ones(2);
    MatrixXd psi = MatrixXd::Random(2, 3);
    CHECK(combine_step(psi, real) == psi);

    real.A_combine = MatrixXd::Constant(2, 2, 0.5);
    MatrixXd W = combine_step(psi, real);
    VectorXd avg = 0.5 * (psi.row(0) + psi.row(1)).transpose();
    CHECK((W.row(0).transpose() - avg).norm() < 1e-15);
    CHECK((W.row(1).transpose() - avg).norm() < 1e-15);
}

TEST_CASE("combine_step: weighted column combination by hand") {
    // Column k = 1 of A is (0.3, 0.7): w_1 = 0.3 psi_0 + 0.7 psi_1.
    Realization real;
    real.iteration = 1;
    real.participants = {1, 1};
    real.A_combine = MatrixXd(2, 2);
    real.A_combine << 1.0, 0.3, 0.0, 0.7;
    real.mu_vec = VectorXd::Ones(2);
    MatrixXd psi(2, 1);
    psi << 10.0, 20.0;
    MatrixXd W = combine_step(psi, real);
    CHECK(W(0, 0) == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(W(1, 0) == doctest::Approx(0.3 * 10.0 + 0.7 * 20.0).epsilon(1e-15));
}

TEST_CASE("run_experiment: identical seeds give identical trajectories") {
    Problem p = noisy_problem(3, 2, 0.4, 21);
    auto risks = risks_of(p);
    NetworkSpec spec = fedsgd_spec(3);
    VectorXd wo = limit_point(risks, VectorXd::Constant(3, 1.0 / 3.0), VectorXd::Ones(3));
    Schedule sched{2, 50, 0.02};
    ExperimentOptions opts;
    opts.runs = 2;
    opts.master_seed = 77;
    Trajectory a = run_experiment(spec, sched, p, wo, opts);
    Trajectory b = run_experiment(spec, sched, p, wo, opts);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].msd == b.records[i].msd);
        CHECK(a.records[i].m4 == b.records[i].m4);
    }
    // Threaded execution merges runs back in order and matches serial output.
    ExperimentOptions par = opts;
    par.threads = 2;
    Trajectory c = run_experiment(spec, sched, p, wo, par);
    REQUIRE(c.records.size() == a.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(c.records[i].run == a.records[i].run);
        CHECK(c.records[i].msd == a.records[i].msd);
    }
}

TEST_CASE("non-participating agents keep their iterate through a manual iteration") {
    Problem p = noisy_problem(2, 1, 0.3, 13);
    auto risks = risks_of(p);
    NetworkState st;
    st.W = MatrixXd(2, 1);
    st.W << 5.0, -2.0;
    // Agent 0 idle: mu_0 = 0 and column 0 of A_combine is e_0.
    Realization real;
    real.iteration = 4;
    real.participants = {0, 1};
    real.A_combine = MatrixXd::Identity(2, 2);
    real.mu_vec = VectorXd(2);
    real.mu_vec << 0.0, 0.05;
    Rng rng = Rng::substream(2, 4, 6);
    MatrixXd psi = local_step(st, real, p.agents, risks, 1, 1, rng);
    MatrixXd W = combine_step(psi, real);
    CHECK(W(0, 0) == 5.0);
    CHECK(W(1, 0) != -2.0);
}

TEST_CASE("run_experiment: noiseless full-batch descent converges below 1e-20") {
    Problem p = noisy_problem(3, 2, 0.0, 41);
    auto risks = risks_of(p);
    NetworkSpec spec = fedsgd_spec(3);
    VectorXd wo = limit_point(risks, VectorXd::Constant(3, 1.0 / 3.0), VectorXd::Ones(3));
    CHECK((wo - p.w_star).lpNorm<Eigen::Infinity>() < 1e-10);
    Schedule sched{1, 2000, 0.05};
    ExperimentOptions opts;
    opts.runs = 1;
    opts.batch = 1 << 20;  // forces the deterministic full-batch gradient
    opts.master_seed = 5;
    Trajectory traj = run_experiment(spec, sched, p, wo, opts);
    // Geometric decay until the trajectory hits the floating-point floor.
    const auto& rec = traj.records;
    CHECK(rec.back().msd < 1e-20);
    for (std::size_t i = 1; i < rec.size(); ++i)
        if (rec[i - 1].msd > 1e-28) CHECK(rec[i].msd < rec[i - 1].msd);
}

TEST_CASE("run_experiment: an unstable step-size raises Diverged") {
    Problem p = noisy_problem(2, 2, 0.1, 51);
    NetworkSpec spec = fedsgd_spec(2);
    auto risks = risks_of(p);
    VectorXd wo = limit_point(risks, VectorXd::Constant(2, 0.5), VectorXd::Ones(2));
    Schedule sched{1, 4000, 50.0};
    ExperimentOptions opts;
    opts.runs = 1;
    opts.master_seed = 5;
    CHECK_THROWS_AS(run_experiment(spec, sched, p, wo, opts), Diverged);
}

TEST_CASE("steady_state_msd: averages exactly the tail records") {
    Trajectory traj;
    // Run 0: msd 1..10; tail fraction 0.2 of 10 iterations -> last 2 records.
    for (long i = 1; i <= 10; ++i)
        traj.records.push_back({0, i, static_cast<double>(i), static_cast<double>(i * i)});
    CHECK(steady_state_msd(traj, 0.2) == doctest::Approx(9.5).epsilon(1e-15));
    CHECK(steady_state_m4(traj, 0.2) == doctest::Approx((81.0 + 100.0) / 2.0).epsilon(1e-15));
    // f = 1 uses every record.
    CHECK(steady_state_msd(traj, 1.0) == doctest::Approx(5.5).epsilon(1e-15));
    // Averaged across runs: add a second run with constant msd 4.
    for (long i = 1; i <= 10; ++i) traj.records.push_back({1, i, 4.0, 16.0});
    CHECK(steady_state_msd(traj, 0.2) == doctest::Approx((9.5 + 4.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("steady_state_msd: empty tails are rejected") {
    Trajectory traj;
    CHECK_THROWS_AS(steady_state_msd(traj, 0.1), EmptyTail);
    traj.records.push_back({0, 1, 1.0, 1.0});
    CHECK_THROWS_AS(steady_state_msd(traj, 0.0), ConfigError);
    CHECK(steady_state_msd(traj, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("sparser participation slows the slowest agent's convergence") {
    // Same network, two participation levels; time to reach a fixed error level
    // is longer when agents participate less often.
    const int K = 4, M = 2;
    Problem p = noisy_problem(K, M, 0.0, 61);
    auto risks = risks_of(p);
    NetworkSpec spec = fedsgd_spec(K);
    spec.mode = Mode::Decentralized;  // enable Bernoulli participation
    spec.Q = MatrixXd::Ones(K, K);
    VectorXd wo = p.w_star;
    Schedule sched{1, 400, 0.05};
    ExperimentOptions opts;
    opts.runs = 4;
    opts.batch = 1 << 20;
    opts.master_seed = 99;

    const auto first_hit = [&](double q, double level) {
        spec.q = VectorXd::Constant(K, q);
        Trajectory traj = run_experiment(spec, sched, p, wo, opts);
        double total = 0.0;
        int runs = 0;
        long hit = sched.iters;
        int cur = -1;
        for (const auto& r : traj.records) {
            if (r.run != cur) {
                if (cur >= 0) { total += hit; ++runs; }
                cur = r.run;
                hit = sched.iters;
            }
            if (r.msd < level && r.iter < hit) hit = r.iter;
        }
        total += hit;
        ++runs;
        return total / runs;
    };
    CHECK(first_hit(1.0, 1e-8) < first_hit(0.4, 1e-8));
}
