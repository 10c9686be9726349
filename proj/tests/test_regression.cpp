#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <vector>

#include "asyncdiff/errors.hpp"
#include "asyncdiff/regression.hpp"

using namespace asyncdiff;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Problem small_problem(double sigma, std::uint64_t seed = 11) {
    const int K = 3, N = 400, M = 2;
    return generate_problem(K, N, M, MatrixXd::Identity(M, M), MatrixXd::Identity(M, M),
                            VectorXd::Constant(K, sigma), seed);
}

}  // namespace

TEST_CASE("generate_problem: shapes and noiseless labels are exact") {
    Problem p = small_problem(0.0);
    REQUIRE(p.agents.size() == 3);
    CHECK(p.w_star.size() == 2);
    for (const auto& a : p.agents) {
        REQUIRE(a.features.rows() == 400);
        REQUIRE(a.features.cols() == 2);
        REQUIRE(a.labels.size() == 400);
        VectorXd expected = a.features * p.w_star;
        CHECK((a.labels - expected).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("generate_problem: identical seeds reproduce the dataset byte-for-byte") {
    Problem a = small_problem(0.3, 99);
    Problem b = small_problem(0.3, 99);
    CHECK(a.w_star == b.w_star);
    for (std::size_t k = 0; k < a.agents.size(); ++k) {
        CHECK(a.agents[k].features == b.agents[k].features);
        CHECK(a.agents[k].labels == b.agents[k].labels);
    }
    Problem c = small_problem(0.3, 100);
    CHECK(a.agents[0].labels != c.agents[0].labels);
}

TEST_CASE("generate_problem: dimension and covariance validation") {
    const MatrixXd I2 = MatrixXd::Identity(2, 2);
    const VectorXd sv = VectorXd::Constant(2, 0.1);
    CHECK_THROWS_AS(generate_problem(0, 10, 2, I2, I2, VectorXd::Zero(0), 1), DimensionError);
    CHECK_THROWS_AS(generate_problem(2, 1, 2, I2, I2, sv, 1), DimensionError);
    CHECK_THROWS_AS(generate_problem(2, 10, 2, MatrixXd::Identity(3, 3), I2, sv, 1),
                    DimensionError);
    CHECK_THROWS_AS(generate_problem(2, 10, 2, MatrixXd::Zero(2, 2), I2, sv, 1),
                    NonPositiveDefinite);
}

TEST_CASE("from_dataset: moments match hand computation; degenerate features rejected") {
    AgentDataset ds;
    ds.features = MatrixXd(2, 2);
    ds.features << 1.0, 0.0, 0.0, 2.0;
    ds.labels = VectorXd(2);
    ds.labels << 3.0, 4.0;
    QuadraticRisk r = QuadraticRisk::from_dataset(ds);
    MatrixXd Ru(2, 2);
    Ru << 0.5, 0.0, 0.0, 2.0;
    VectorXd rdu(2);
    rdu << 1.5, 4.0;
    CHECK((r.Ruhat - Ru).norm() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK((r.rduhat - rdu).norm() == doctest::Approx(0.0).epsilon(1e-15));

    AgentDataset flat;
    flat.features = MatrixXd::Zero(4, 2);
    flat.labels = VectorXd::Zero(4);
    CHECK_THROWS_AS(QuadraticRisk::from_dataset(flat), NonPositiveDefinite);
}

TEST_CASE("stochastic_gradient: full batch equals the risk gradient") {
    Problem p = small_problem(0.25, 5);
    const auto& ds = p.agents[1];
    QuadraticRisk r = QuadraticRisk::from_dataset(ds);
    std::vector<int> full(ds.features.rows());
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = static_cast<int>(i);
    VectorXd w(2);
    w << 0.7, -1.3;
    VectorXd g = stochastic_gradient(ds, w, full);
    CHECK((g - r.gradient(w)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("stochastic_gradient: single-sample value by hand") {
    // u = (1, 0), d = 3, w = (1, 1): grad = 2 u (u'w - d) = 2 * (1,0) * (1 - 3) = (-4, 0).
    AgentDataset ds;
    ds.features = MatrixXd(1, 2);
    ds.features << 1.0, 0.0;
    ds.labels = VectorXd(1);
    ds.labels << 3.0;
    VectorXd w(2);
    w << 1.0, 1.0;
    std::vector<int> batch = {0};
    VectorXd g = stochastic_gradient(ds, w, batch);
    CHECK(g(0) == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(g(1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("stochastic_gradient: invalid batches are rejected") {
    Problem p = small_problem(0.0, 3);
    VectorXd w = VectorXd::Zero(2);
    std::vector<int> empty;
    CHECK_THROWS_AS(stochastic_gradient(p.agents[0], w, empty), IndexError);
    std::vector<int> oob = {0, 400};
    CHECK_THROWS_AS(stochastic_gradient(p.agents[0], w, oob), IndexError);
    std::vector<int> neg = {-1};
    CHECK_THROWS_AS(stochastic_gradient(p.agents[0], w, neg), IndexError);
}

TEST_CASE("limit_point: noiseless data recovers the generative model") {
    Problem p = small_problem(0.0, 17);
    std::vector<QuadraticRisk> risks;
    for (const auto& a : p.agents) risks.push_back(QuadraticRisk::from_dataset(a));
    VectorXd pbar = VectorXd::Constant(3, 1.0 / 3.0);
    VectorXd q = VectorXd::Constant(3, 0.5);
    VectorXd wo = limit_point(risks, pbar, q);
    CHECK((wo - p.w_star).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("limit_point: scalar two-agent weighted average by hand") {
    // Agent a: single sample (u, d) = (1, 2) -> minimizer 2; agent b: (2, 3) -> 1.5.
    // Weighted normal equations: w = (p1 q1 * 1 * 2 + p2 q2 * 4 * 1.5) / (p1 q1 + 4 p2 q2)
    // With p = (0.5, 0.5), q = (1, 1): w = (2 + 6) / 5 = 1.6.
    AgentDataset a, b;
    a.features = MatrixXd::Constant(1, 1, 1.0);
    a.labels = VectorXd::Constant(1, 2.0);
    b.features = MatrixXd::Constant(1, 1, 2.0);
    b.labels = VectorXd::Constant(1, 3.0);
    std::vector<QuadraticRisk> risks = {QuadraticRisk::from_dataset(a),
                                        QuadraticRisk::from_dataset(b)};
    VectorXd pbar = VectorXd::Constant(2, 0.5);
    VectorXd q = VectorXd::Ones(2);
    VectorXd wo = limit_point(risks, pbar, q);
    CHECK(wo(0) == doctest::Approx(1.6).epsilon(1e-13));
}

TEST_CASE("limit_point: zero participation yields a singular system") {
    Problem p = small_problem(0.0, 17);
    std::vector<QuadraticRisk> risks;
    for (const auto& a : p.agents) risks.push_back(QuadraticRisk::from_dataset(a));
    VectorXd pbar = VectorXd::Constant(3, 1.0 / 3.0);
    CHECK_THROWS_AS(limit_point(risks, pbar, VectorXd::Zero(3)), SingularSystem);
}

TEST_CASE("noise_covariance: noiseless consistent data gives zero covariance at w*") {
    // With sigma_v = 0 the per-sample gradient at w* vanishes, so its covariance is zero.
    Problem p = small_problem(0.0, 23);
    MatrixXd R = noise_covariance(p.agents[0], p.w_star, 1);
    CHECK(R.lpNorm<Eigen::Infinity>() < 1e-18);
}

TEST_CASE("noise_covariance: exact 1/B scaling") {
    Problem p = small_problem(0.4, 29);
    std::vector<QuadraticRisk> risks;
    for (const auto& a : p.agents) risks.push_back(QuadraticRisk::from_dataset(a));
    VectorXd wo = limit_point(risks, VectorXd::Constant(3, 1.0 / 3.0), VectorXd::Ones(3));
    MatrixXd R1 = noise_covariance(p.agents[2], wo, 1);
    MatrixXd R5 = noise_covariance(p.agents[2], wo, 5);
    CHECK((R1 - 5.0 * R5).lpNorm<Eigen::Infinity>() < 1e-12 * R1.lpNorm<Eigen::Infinity>());
}

TEST_CASE("noise_covariance: two-sample scalar case by hand") {
    // Samples (u, d) = (1, 1) and (-1, 1); minimizer w° = 0. Per-sample gradients at 0
    // are -2 u d = (-2, 2); mean 0, so covariance = mean of squares = 4.
    AgentDataset ds;
    ds.features = MatrixXd(2, 1);
    ds.features << 1.0, -1.0;
    ds.labels = VectorXd(2);
    ds.labels << 1.0, 1.0;
    VectorXd wo = VectorXd::Zero(1);
    MatrixXd R = noise_covariance(ds, wo, 1);
    CHECK(R(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("estimate_constants: spectrum of an exactly identity covariance") {
    // Four samples (±sqrt(2), 0), (0, ±sqrt(2)) give Ruhat = I exactly, so the
    // Hessian is 2 I and lambda_min = lambda_max = 2.
    const double s = std::sqrt(2.0);
    AgentDataset ds;
    ds.features = MatrixXd(4, 2);
    ds.features << s, 0.0, -s, 0.0, 0.0, s, 0.0, -s;
    ds.labels = VectorXd::Zero(4);
    std::vector<QuadraticRisk> risks = {QuadraticRisk::from_dataset(ds)};
    std::vector<AgentDataset> data = {ds};
    ConstantsReport rep = estimate_constants(risks, data, VectorXd::Zero(2), 1, 16, 7);
    CHECK(rep.constants.lambda_min == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.constants.lambda_max == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.constants.nu == doctest::Approx(2.0).epsilon(1e-12));
    // delta = 2 max_n ||u_n||^2 and each sample has squared norm 2.
    CHECK(rep.constants.delta == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("estimate_constants: full-batch gradients carry no noise") {
    Problem p = small_problem(0.3, 31);
    std::vector<QuadraticRisk> risks;
    for (const auto& a : p.agents) risks.push_back(QuadraticRisk::from_dataset(a));
    VectorXd wo = limit_point(risks, VectorXd::Constant(3, 1.0 / 3.0), VectorXd::Ones(3));
    ConstantsReport rep =
        estimate_constants(risks, p.agents, wo, static_cast<int>(p.agents[0].features.rows()),
                           16, 7);
    CHECK(rep.noise.beta_s2 == 0.0);
    CHECK(rep.noise.sigma_s2 == 0.0);
    for (const auto& Rk : rep.noise.Rk) CHECK(Rk.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("estimate_constants: mini-batch noise scalars are positive and coherent") {
    Problem p = small_problem(0.5, 37);
    std::vector<QuadraticRisk> risks;
    for (const auto& a : p.agents) risks.push_back(QuadraticRisk::from_dataset(a));
    VectorXd wo = limit_point(risks, VectorXd::Constant(3, 1.0 / 3.0), VectorXd::Ones(3));
    ConstantsReport rep = estimate_constants(risks, p.agents, wo, 1, 32, 7);
    CHECK(rep.noise.sigma_s2 > 0.0);
    CHECK(rep.noise.beta_s2 > 0.0);
    // sigma_s2 bounds the largest noise covariance trace at w°.
    double max_trace = 0.0;
    for (const auto& Rk : rep.noise.Rk) max_trace = std::max(max_trace, Rk.trace());
    CHECK(rep.noise.sigma_s2 >= max_trace - 1e-12);
}
