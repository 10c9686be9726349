#include "asyncdiff/topology.hpp"

#include <algorithm>
#include <cmath>

namespace asyncdiff {

namespace {
constexpr double kColumnTol = 1e-12;
}

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::Decentralized: return "decentralized";
        case Mode::FedSgd: return "fedsgd";
        case Mode::FedAvg: return "fedavg";
    }
    return "?";
}

Mode mode_from_name(const std::string& name) {
    if (name == "decentralized") return Mode::Decentralized;
    if (name == "fedsgd") return Mode::FedSgd;
    if (name == "fedavg") return Mode::FedAvg;
    throw ConfigError("unknown mode: " + name);
}

NetworkSpec validate_network(NetworkSpec spec) {
    const int K = spec.K;
    if (K < 1) throw ConfigError("K must be >= 1");
    if (spec.A.rows() != K || spec.A.cols() != K) throw ConfigError("A must be K x K");
    if (spec.q.size() != K) throw ConfigError("q must have K entries");
    if (spec.Q.rows() != K || spec.Q.cols() != K) throw ConfigError("Q must be K x K");
    if (static_cast<int>(spec.neighborhoods.size()) != K)
        throw ConfigError("neighborhoods must have K entries");

    for (int k = 0; k < K; ++k) {
        auto& nk = spec.neighborhoods[k];
        std::sort(nk.begin(), nk.end());
        for (int l : nk)
            if (l < 0 || l >= K) throw ConfigError("neighbor index out of range");
        if (!std::binary_search(nk.begin(), nk.end(), k))
            throw ConfigError("neighborhood of agent must include the agent itself");
        if (spec.q(k) < 0.0 || spec.q(k) > 1.0) throw ConfigError("q_k must lie in [0,1]");
    }

    for (int k = 0; k < K; ++k) {
        double colsum = 0.0;
        for (int l = 0; l < K; ++l) {
            const double a = spec.A(l, k);
            if (a < 0.0)
                throw NegativeWeight("A(" + std::to_string(l) + "," + std::to_string(k) +
                                     ") is negative");
            if (a > 0.0 &&
                !std::binary_search(spec.neighborhoods[k].begin(), spec.neighborhoods[k].end(), l))
                throw NeighborhoodMismatch("positive weight A(" + std::to_string(l) + "," +
                                           std::to_string(k) + ") outside neighborhood");
            if (l != k) {
                const double qlk = spec.Q(l, k);
                if (qlk < 0.0 || qlk > 1.0) throw ConfigError("q_lk must lie in [0,1]");
            }
            colsum += a;
        }
        if (std::abs(colsum - 1.0) > kColumnTol)
            throw ColumnSumError("column " + std::to_string(k) + " sums to " +
                                 std::to_string(colsum));
    }

    if (spec.mode == Mode::FedSgd || spec.mode == Mode::FedAvg) {
        for (int k = 0; k < K; ++k) {
            if (static_cast<int>(spec.neighborhoods[k].size()) != K)
                throw ConfigError(mode_name(spec.mode) + " requires full neighborhoods");
            for (int l = 0; l < K; ++l)
                if (l != k && spec.Q(l, k) != 1.0)
                    throw ConfigError(mode_name(spec.mode) + " requires q_lk = 1");
        }
        if (spec.mode == Mode::FedSgd) {
            for (int k = 0; k < K; ++k)
                if (spec.q(k) != 1.0) throw ConfigError("fedsgd requires q_k = 1");
            const double w = 1.0 / static_cast<double>(K);
            for (int k = 0; k < K; ++k)
                for (int l = 0; l < K; ++l)
                    if (std::abs(spec.A(l, k) - w) > kColumnTol)
                        throw ConfigError("fedsgd requires the uniform averaging matrix");
        }
    }
    return spec;
}

Eigen::MatrixXd expected_combination(const NetworkSpec& spec) {
    if (spec.mode == Mode::FedAvg)
        throw ModeError("expected_combination: no closed form for fedavg");
    const int K = spec.K;
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(K, K);
    for (int k = 0; k < K; ++k) {
        double off = 0.0;
        for (int l : spec.neighborhoods[k]) {
            if (l == k) continue;
            const double e = spec.A(l, k) * spec.q(k) * spec.Q(l, k);
            E(l, k) = e;
            off += e;
        }
        E(k, k) = 1.0 - off;
    }
    return E;
}

PerronResult perron(const Eigen::MatrixXd& mat) {
    const int K = static_cast<int>(mat.rows());
    if (mat.cols() != K) throw ShapeError("perron: matrix must be square");

    Eigen::EigenSolver<Eigen::MatrixXd> es(mat);
    if (es.info() != Eigen::Success) throw NotPrimitive("eigendecomposition failed");

    // locate the eigenvalue closest to 1 and the second-largest magnitude
    int top = -1;
    double best = 1e300;
    for (int i = 0; i < K; ++i) {
        const double d = std::abs(es.eigenvalues()(i) - std::complex<double>(1.0, 0.0));
        if (d < best) {
            best = d;
            top = i;
        }
    }
    if (best > 1e-8) throw NotPrimitive("no eigenvalue at 1 (matrix not stochastic?)");

    double second = 0.0;
    for (int i = 0; i < K; ++i) {
        if (i == top) continue;
        second = std::max(second, std::abs(es.eigenvalues()(i)));
    }
    if (K > 1 && second > 1.0 - 1e-10)
        throw NotPrimitive("eigenvalue 1 is not simple: expected network is disconnected or periodic");

    Eigen::VectorXcd vc = es.eigenvectors().col(top);
    Eigen::VectorXd v = vc.real();
    const double s = v.sum();
    if (std::abs(s) < 1e-14) throw NotPrimitive("degenerate Perron eigenvector");
    v /= s;
    for (int i = 0; i < K; ++i)
        if (!(v(i) > 0.0)) throw NotPrimitive("Perron eigenvector not strictly positive");

    // polish with a few fixed-point sweeps so the residual meets 1e-10
    for (int it = 0; it < 1000; ++it) {
        Eigen::VectorXd nv = mat * v;
        nv /= nv.sum();
        const double res = (mat * nv - nv).lpNorm<Eigen::Infinity>();
        v = nv;
        if (res <= 1e-12) break;
    }
    if ((mat * v - v).lpNorm<Eigen::Infinity>() > 1e-10)
        throw NotPrimitive("fixed-point residual did not converge");

    return PerronResult{v, second};
}

Eigen::VectorXd perron_weights(const NetworkSpec& spec) {
    if (spec.mode == Mode::FedAvg)
        return Eigen::VectorXd::Constant(spec.K, 1.0 / static_cast<double>(spec.K));
    return perron(expected_combination(spec)).pbar;
}

}  // namespace asyncdiff
