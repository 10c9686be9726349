#include "asyncdiff/regression.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asyncdiff/errors.hpp"

namespace asyncdiff {

namespace {

// lower Cholesky factor, rejecting non-PD inputs
Eigen::MatrixXd chol(const Eigen::MatrixXd& S, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw NonPositiveDefinite(std::string(what) + " is not positive definite");
    return llt.matrixL();
}

Eigen::VectorXd gaussian_vector(int n, Rng& rng) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.gaussian();
    return v;
}

}  // namespace

QuadraticRisk QuadraticRisk::from_dataset(const AgentDataset& ds) {
    const auto N = static_cast<double>(ds.features.rows());
    QuadraticRisk r;
    r.Ruhat = ds.features.transpose() * ds.features / N;
    r.rduhat = ds.features.transpose() * ds.labels / N;
    Eigen::LLT<Eigen::MatrixXd> llt(r.Ruhat);
    if (llt.info() != Eigen::Success)
        throw NonPositiveDefinite("empirical feature covariance is rank deficient");
    return r;
}

Problem generate_problem(int K, int N, int M, const Eigen::MatrixXd& Ru,
                         const Eigen::MatrixXd& Rw, const Eigen::VectorXd& sigma_v,
                         std::uint64_t seed) {
    if (K < 1 || M < 1) throw DimensionError("K and M must be >= 1");
    if (N < M) throw DimensionError("need N >= M samples per agent");
    if (Ru.rows() != M || Ru.cols() != M || Rw.rows() != M || Rw.cols() != M)
        throw DimensionError("Ru and Rw must be M x M");
    if (sigma_v.size() != K) throw DimensionError("sigma_v must have K entries");

    const Eigen::MatrixXd Lu = chol(Ru, "Ru");
    const Eigen::MatrixXd Lw = chol(Rw, "Rw");

    Problem prob;
    Rng wrng = Rng::substream(seed, 0xffffffffULL);
    prob.w_star = Lw * gaussian_vector(M, wrng);

    prob.agents.reserve(K);
    for (int k = 0; k < K; ++k) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
        AgentDataset ds;
        ds.sigma_v = sigma_v(k);
        ds.features.resize(N, M);
        ds.labels.resize(N);
        for (int n = 0; n < N; ++n) {
            Eigen::VectorXd u = Lu * gaussian_vector(M, rng);
            ds.features.row(n) = u.transpose();
            ds.labels(n) = u.dot(prob.w_star) + ds.sigma_v * rng.gaussian();
        }
        prob.agents.push_back(std::move(ds));
    }
    return prob;
}

Eigen::VectorXd stochastic_gradient(const AgentDataset& ds, const Eigen::VectorXd& w,
                                    std::span<const int> batch) {
    if (batch.empty()) throw IndexError("batch must be nonempty");
    const int N = static_cast<int>(ds.features.rows());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
    for (int n : batch) {
        if (n < 0 || n >= N) throw IndexError("sample index out of range");
        const auto u = ds.features.row(n);
        g += 2.0 * (u.dot(w) - ds.labels(n)) * u.transpose();
    }
    return g / static_cast<double>(batch.size());
}

Eigen::VectorXd limit_point(const std::vector<QuadraticRisk>& risks, const Eigen::VectorXd& pbar,
                            const Eigen::VectorXd& q) {
    const int K = static_cast<int>(risks.size());
    if (pbar.size() != K || q.size() != K) throw DimensionError("pbar and q must have K entries");
    const int M = static_cast<int>(risks[0].Ruhat.rows());
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M, M);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(M);
    for (int k = 0; k < K; ++k) {
        S += pbar(k) * q(k) * risks[k].Ruhat;
        b += pbar(k) * q(k) * risks[k].rduhat;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw SingularSystem("weighted normal equations are singular");
    return llt.solve(b);
}

Eigen::MatrixXd noise_covariance(const AgentDataset& ds, const Eigen::VectorXd& wo, int B) {
    if (B < 1) throw ConfigError("batch size must be >= 1");
    const int N = static_cast<int>(ds.features.rows());
    const int M = static_cast<int>(ds.features.cols());
    // mean of per-sample gradients = full gradient at w°
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(M);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(M, M);
    for (int n = 0; n < N; ++n) {
        const Eigen::VectorXd g =
            2.0 * (ds.features.row(n).dot(wo) - ds.labels(n)) * ds.features.row(n).transpose();
        mean += g;
        second += g * g.transpose();
    }
    mean /= N;
    second /= N;
    Eigen::MatrixXd R1 = second - mean * mean.transpose();
    return R1 / static_cast<double>(B);
}

ConstantsReport estimate_constants(const std::vector<QuadraticRisk>& risks,
                                   const std::vector<AgentDataset>& datasets,
                                   const Eigen::VectorXd& wo, int batch, int probes,
                                   std::uint64_t seed) {
    if (probes < 1) throw ConfigError("probe count must be >= 1");
    const int K = static_cast<int>(risks.size());
    const int M = static_cast<int>(wo.size());

    ConstantsReport rep;
    rep.constants.lambda_min = 1e300;
    rep.constants.lambda_max = 0.0;
    for (const auto& risk : risks) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(risk.hessian());
        rep.constants.lambda_min = std::min(rep.constants.lambda_min, es.eigenvalues().minCoeff());
        rep.constants.lambda_max = std::max(rep.constants.lambda_max, es.eigenvalues().maxCoeff());
    }
    rep.constants.nu = rep.constants.lambda_min;

    double delta = 0.0;
    for (const auto& ds : datasets) {
        const int scan = std::min<int>(1000, static_cast<int>(ds.features.rows()));
        for (int n = 0; n < scan; ++n)
            delta = std::max(delta, 2.0 * ds.features.row(n).squaredNorm());
    }
    rep.constants.delta = delta;

    const bool full_batch =
        std::all_of(datasets.begin(), datasets.end(), [&](const AgentDataset& d) {
            return batch >= static_cast<int>(d.features.rows());
        });

    rep.noise.Rk.reserve(K);
    double sigma_s2 = 0.0, sigma_s4 = 0.0;
    for (int k = 0; k < K; ++k) {
        const int N = static_cast<int>(datasets[k].features.rows());
        const int Bk = std::min(batch, N);
        rep.noise.Rk.push_back(noise_covariance(datasets[k], wo, Bk));
        // sigma_s^2 = max_k trace(R_k^{B}) * B = trace of the single-sample covariance
        sigma_s2 = std::max(sigma_s2, rep.noise.Rk.back().trace() * static_cast<double>(Bk));
        // fourth moment of single-sample noise at w°
        const Eigen::VectorXd mean = risks[k].gradient(wo);
        double m4 = 0.0;
        for (int n = 0; n < N; ++n) {
            const Eigen::VectorXd g = 2.0 * (datasets[k].features.row(n).dot(wo) -
                                             datasets[k].labels(n)) *
                                      datasets[k].features.row(n).transpose();
            const double s2 = (g - mean).squaredNorm();
            m4 += s2 * s2;
        }
        sigma_s4 = std::max(sigma_s4, m4 / N / static_cast<double>(Bk * Bk));
    }
    if (full_batch) {
        // A full batch evaluates the exact risk gradient, so there is no noise.
        sigma_s2 = 0.0;
        sigma_s4 = 0.0;
        for (auto& Rk : rep.noise.Rk) Rk.setZero();
    }
    rep.noise.sigma_s2 = sigma_s2;
    rep.noise.sigma_s4 = sigma_s4;

    // probe-based slope of E||s(w)||^2 against ||w° - w||^2
    double beta2 = 0.0, beta4 = 0.0;
    if (!full_batch) {
        Rng rng = Rng::substream(seed, 0x9e3779b9ULL);
        for (int p = 0; p < probes; ++p) {
            Eigen::VectorXd w = wo;
            for (int i = 0; i < M; ++i) w(i) += rng.gaussian();
            const double dist2 = (wo - w).squaredNorm();
            if (dist2 < 1e-12) continue;
            for (int k = 0; k < K; ++k) {
                const auto& ds = datasets[k];
                const int N = static_cast<int>(ds.features.rows());
                const Eigen::VectorXd mean = risks[k].gradient(w);
                double s2sum = 0.0, s4sum = 0.0;
                for (int n = 0; n < N; ++n) {
                    const Eigen::VectorXd g = 2.0 * (ds.features.row(n).dot(w) - ds.labels(n)) *
                                              ds.features.row(n).transpose();
                    const double s2 = (g - mean).squaredNorm();
                    s2sum += s2;
                    s4sum += s2 * s2;
                }
                const int Bk = std::min(batch, N);
                const double m2 = s2sum / N / Bk;
                const double m4 = s4sum / N / static_cast<double>(Bk) / Bk;
                beta2 = std::max(beta2, std::max(0.0, (m2 - sigma_s2) / dist2));
                beta4 = std::max(beta4, std::max(0.0, (m4 - sigma_s4) / (dist2 * dist2)));
            }
        }
    }
    rep.noise.beta_s2 = beta2;
    rep.noise.beta_s4 = beta4;
    return rep;
}

}  // namespace asyncdiff
