#include "asyncdiff/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "asyncdiff/errors.hpp"

namespace asyncdiff {

namespace {

inline int pair_index(int l, int k, int K) { return k * K + l; }

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

Eigen::MatrixXd matrix_power(Eigen::MatrixXd base, int e) {
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(base.rows(), base.cols());
    while (e > 0) {
        if (e & 1) result = result * base;
        base = base * base;
        e >>= 1;
    }
    return result;
}

// Exact scalar moments E[a_{r1 c1} a_{r2 c2} theta_{t1} theta_{t2}] under the
// sampler's law; t1/t2 < 0 mean "no theta factor". Theta factors are
// idempotent, duplicates collapse.
class MomentBuilder {
  public:
    explicit MomentBuilder(const NetworkSpec& spec) : spec_(spec), K_(spec.K) {
        if (spec.mode == Mode::FedAvg) return;
        one_.assign(K_, Eigen::VectorXd::Zero(K_));
        onet_.assign(K_, Eigen::VectorXd::Zero(K_));
        two_.assign(K_, Eigen::MatrixXd::Zero(K_, K_));
        twot_.assign(K_, Eigen::MatrixXd::Zero(K_, K_));
        for (int j = 0; j < K_; ++j) build_column_tables(j);
    }

    double pair_moment(int r1, int c1, int r2, int c2, int t1 = -1, int t2 = -1) const {
        if (t1 == t2) t2 = -1;
        if (spec_.mode == Mode::FedAvg) return fedavg_moment(r1, c1, r2, c2, t1, t2);
        const auto has_theta = [&](int j) { return j == t1 || j == t2; };
        double val;
        if (c1 == c2) {
            val = has_theta(c1) ? twot_[c1](r1, r2) : two_[c1](r1, r2);
        } else {
            val = (has_theta(c1) ? onet_[c1](r1) : one_[c1](r1)) *
                  (has_theta(c2) ? onet_[c2](r2) : one_[c2](r2));
        }
        for (int t : {t1, t2})
            if (t >= 0 && t != c1 && t != c2) val *= spec_.q(t);
        return val;
    }

    // E[a_{m k} a_{m l} theta_m], the coefficient of vec(R_m) in the
    // combine-step noise injection.
    double noise_weight(int l, int k, int m) const { return pair_moment(m, k, m, l, m); }

  private:
    void build_column_tables(int j) {
        const double qj = spec_.q(j);
        // s1 = E[S], es2 = E[S^2] with S the sum of sampled neighbor weights
        double s1 = 0.0, var = 0.0;
        for (int m : spec_.neighborhoods[j]) {
            if (m == j) continue;
            const double a = spec_.A(m, j);
            const double qm = spec_.mode == Mode::FedSgd ? 1.0 : spec_.Q(m, j);
            s1 += a * qm;
            var += a * a * qm * (1.0 - qm);
        }
        const double es2 = s1 * s1 + var;

        auto& one = one_[j];
        auto& onet = onet_[j];
        auto& two = two_[j];
        auto& twot = twot_[j];
        const auto q_of = [&](int m) { return spec_.mode == Mode::FedSgd ? 1.0 : spec_.Q(m, j); };

        for (int m : spec_.neighborhoods[j]) {
            if (m == j) continue;
            const double am = spec_.A(m, j), qm = q_of(m);
            one(m) = am * qj * qm;
            onet(m) = one(m);
            for (int n : spec_.neighborhoods[j]) {
                if (n == j || n == m) continue;
                two(m, n) = am * spec_.A(n, j) * qj * qm * q_of(n);
                twot(m, n) = two(m, n);
            }
            two(m, m) = am * am * qj * qm;
            twot(m, m) = two(m, m);
            two(m, j) = am * qj * qm * (1.0 - am - (s1 - am * qm));
            two(j, m) = two(m, j);
            twot(m, j) = two(m, j);
            twot(j, m) = two(m, j);
        }
        one(j) = 1.0 - qj * s1;
        onet(j) = qj * (1.0 - s1);
        two(j, j) = 1.0 - 2.0 * qj * s1 + qj * es2;
        twot(j, j) = qj * (1.0 - 2.0 * s1 + es2);
    }

    // fedavg: agents couple through L; enumerate the participation pattern of
    // the involved agents, fold the rest through a Poisson-binomial.
    double fedavg_moment(int r1, int c1, int r2, int c2, int t1, int t2) const {
        int inv[6] = {r1, c1, r2, c2, t1, t2};
        std::vector<int> S;
        for (int v : inv)
            if (v >= 0 && std::find(S.begin(), S.end(), v) == S.end()) S.push_back(v);
        std::sort(S.begin(), S.end());
        const auto& rest = rest_distribution(S);
        const int ns = static_cast<int>(S.size());

        double total = 0.0;
        for (int pat = 0; pat < (1 << ns); ++pat) {
            double prob = 1.0;
            for (int i = 0; i < ns; ++i)
                prob *= (pat >> i & 1) ? spec_.q(S[i]) : 1.0 - spec_.q(S[i]);
            if (prob == 0.0) continue;
            const auto on = [&](int agent) {
                const auto it = std::lower_bound(S.begin(), S.end(), agent);
                return (pat >> static_cast<int>(it - S.begin()) & 1) != 0;
            };
            int p = 0;
            bool zero = false;
            const auto entry = [&](int r, int c) {
                if (r != c) {
                    if (on(r) && on(c))
                        ++p;
                    else
                        zero = true;
                } else if (on(c)) {
                    ++p;
                }  // non-participant self-weight is 1
            };
            entry(r1, c1);
            entry(r2, c2);
            for (int t : {t1, t2})
                if (t >= 0 && !on(t)) zero = true;
            if (zero) continue;
            int s = 0;
            for (int i = 0; i < ns; ++i) s += pat >> i & 1;
            double inv_moment = 1.0;
            if (p > 0) {
                inv_moment = 0.0;
                for (int r = 0; r < static_cast<int>(rest.size()); ++r)
                    inv_moment += rest[r] / std::pow(static_cast<double>(s + r), p);
            }
            total += prob * inv_moment;
        }
        return total;
    }

    const std::vector<double>& rest_distribution(const std::vector<int>& S) const {
        auto it = rest_cache_.find(S);
        if (it != rest_cache_.end()) return it->second;
        std::vector<double> dp{1.0};
        for (int j = 0; j < K_; ++j) {
            if (std::binary_search(S.begin(), S.end(), j)) continue;
            dp.push_back(0.0);
            const double q = spec_.q(j);
            for (int i = static_cast<int>(dp.size()) - 1; i >= 1; --i)
                dp[i] = dp[i] * (1.0 - q) + dp[i - 1] * q;
            dp[0] *= 1.0 - q;
        }
        return rest_cache_.emplace(S, std::move(dp)).first->second;
    }

    const NetworkSpec& spec_;
    int K_;
    std::vector<Eigen::VectorXd> one_, onet_;
    std::vector<Eigen::MatrixXd> two_, twot_;
    mutable std::map<std::vector<int>, std::vector<double>> rest_cache_;
};

}  // namespace

Eigen::VectorXd bvec(const Eigen::MatrixXd& S, int K, int M) {
    if (S.rows() != K * M || S.cols() != K * M) throw ShapeError("bvec: matrix must be KM x KM");
    const int m2 = M * M;
    Eigen::VectorXd v(K * K * m2);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            const Eigen::MatrixXd blk = S.block(l * M, k * M, M, M);
            v.segment(pair_index(l, k, K) * m2, m2) =
                Eigen::Map<const Eigen::VectorXd>(blk.data(), m2);
        }
    return v;
}

Eigen::MatrixXd bvec_inverse(const Eigen::VectorXd& v, int K, int M) {
    const int m2 = M * M;
    if (v.size() != static_cast<long>(K) * K * m2)
        throw ShapeError("bvec_inverse: vector must have (KM)^2 entries");
    Eigen::MatrixXd S(K * M, K * M);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            const Eigen::VectorXd seg = v.segment(pair_index(l, k, K) * m2, m2);
            S.block(l * M, k * M, M, M) = Eigen::Map<const Eigen::MatrixXd>(seg.data(), M, M);
        }
    return S;
}

Eigen::MatrixXd block_kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int K, int M) {
    if (A.rows() != K * M || A.cols() != K * M || B.rows() != K * M || B.cols() != K * M)
        throw ShapeError("block_kron: operands must be KM x KM");
    const int m2 = M * M;
    const int N = K * K * m2;
    Eigen::MatrixXd out(N, N);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l)
            for (int n = 0; n < K; ++n)
                for (int m = 0; m < K; ++m)
                    out.block(pair_index(l, k, K) * m2, pair_index(m, n, K) * m2, m2, m2) =
                        kron(A.block(k * M, n * M, M, M), B.block(l * M, m * M, M, M));
    return out;
}

LocalMoments build_local_moments(const NetworkSpec& spec, const Schedule& sched,
                                 const std::vector<Eigen::MatrixXd>& hessians) {
    const int K = spec.K;
    const int M = static_cast<int>(hessians.at(0).rows());
    const int m2 = M * M;
    const double mu = sched.mu;
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(m2, m2);
    const Eigen::MatrixXd IM = Eigen::MatrixXd::Identity(M, M);

    const auto q_eff = [&](int k) { return spec.mode == Mode::FedSgd ? 1.0 : spec.q(k); };

    LocalMoments lm;
    lm.G.resize(static_cast<size_t>(K) * K);
    lm.C.resize(static_cast<size_t>(K) * K);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            const double qk = q_eff(k), ql = q_eff(l);
            const double qkl = (l == k) ? qk : qk * ql;
            Eigen::MatrixXd G = I2;
            G -= mu * ql * kron(IM, hessians[l]);
            G -= mu * qk * kron(hessians[k], IM);
            G += mu * mu * qkl * kron(hessians[k], hessians[l]);
            lm.G[pair_index(l, k, K)] = std::move(G);
            lm.C[pair_index(l, k, K)] = mu * mu * qkl * I2;
        }
    return lm;
}

CombineMoments build_combine_moments(const NetworkSpec& spec, const Schedule& sched,
                                     const std::vector<Eigen::MatrixXd>& hessians) {
    const int K = spec.K;
    const int M = static_cast<int>(hessians.at(0).rows());
    const int m2 = M * M;
    const long N = static_cast<long>(K) * K * m2;
    const double mu = sched.mu;

    MomentBuilder mb(spec);
    const Eigen::MatrixXd IM = Eigen::MatrixXd::Identity(M, M);
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(m2, m2);
    std::vector<Eigen::MatrixXd> IxH(K), HxI(K);
    for (int k = 0; k < K; ++k) {
        IxH[k] = kron(IM, hessians[k]);
        HxI[k] = kron(hessians[k], IM);
    }
    std::vector<Eigen::MatrixXd> HxH(static_cast<size_t>(K) * K);
    for (int n = 0; n < K; ++n)
        for (int m = 0; m < K; ++m) HxH[n * K + m] = kron(hessians[n], hessians[m]);

    CombineMoments cm;
    cm.G.resize(N, N);
    cm.C.setZero(N, N);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            const long row = static_cast<long>(pair_index(l, k, K)) * m2;
            for (int n = 0; n < K; ++n)
                for (int m = 0; m < K; ++m) {
                    const long col = static_cast<long>(pair_index(m, n, K)) * m2;
                    // E[F_{kn} (x) F_{lm}] with F = A'(I - M H), F_{kn} = a_{nk} D_n
                    const double e00 = mb.pair_moment(n, k, m, l);
                    const double e0m = mb.pair_moment(n, k, m, l, m);
                    const double e0n = mb.pair_moment(n, k, m, l, n);
                    const double enm = mb.pair_moment(n, k, m, l, n, m);
                    Eigen::MatrixXd blk = e00 * I2;
                    blk -= mu * e0m * IxH[m];
                    blk -= mu * e0n * HxI[n];
                    blk += mu * mu * enm * HxH[n * K + m];
                    cm.G.block(row, col, m2, m2) = blk;
                    // E[(A M)_{kn} (x) (A M)_{lm}] = mu^2 E[a_{kn} a_{lm} th_n th_m] I
                    const double c = mb.pair_moment(k, n, l, m, n, m);
                    if (c != 0.0) cm.C.block(row, col, m2, m2) = mu * mu * c * I2;
                }
        }
    return cm;
}

McMoments mc_moment_oracle(const NetworkSpec& spec, const Schedule& sched,
                           const std::vector<Eigen::MatrixXd>& hessians, int n_draws,
                           std::uint64_t seed, bool combine_step) {
    if (n_draws < 1) throw ConfigError("n_draws must be >= 1");
    const int K = spec.K;
    const int M = static_cast<int>(hessians.at(0).rows());
    const int m2 = M * M;
    const long N = static_cast<long>(K) * K * m2;
    const double mu = sched.mu;

    Eigen::MatrixXd Gsum = Eigen::MatrixXd::Zero(N, N), Gsq = Gsum, Csum = Gsum, Csq = Gsum;
    Eigen::MatrixXd Gd(N, N), Cd(N, N);
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(m2, m2);

    Rng rng = Rng::substream(seed, 0x4d43ULL);  // oracle substream
    std::vector<Eigen::MatrixXd> D(K);
    std::vector<Eigen::MatrixXd> DxD(static_cast<size_t>(K) * K);
    for (int d = 0; d < n_draws; ++d) {
        const Realization real = sample_realization(spec, sched, d, rng);
        const Eigen::MatrixXd Ac = combine_step
                                       ? real.A_combine
                                       : Eigen::MatrixXd::Identity(K, K).eval();
        for (int k = 0; k < K; ++k)
            D[k] = Eigen::MatrixXd::Identity(M, M) - real.mu_vec(k) * hessians[k];
        for (int n = 0; n < K; ++n)
            for (int m = 0; m < K; ++m) DxD[n * K + m] = kron(D[n], D[m]);

        Gd.setZero();
        Cd.setZero();
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < K; ++l) {
                const long row = static_cast<long>(pair_index(l, k, K)) * m2;
                for (int n = 0; n < K; ++n) {
                    if (Ac(n, k) == 0.0) continue;
                    for (int m = 0; m < K; ++m) {
                        if (Ac(m, l) == 0.0) continue;
                        const long col = static_cast<long>(pair_index(m, n, K)) * m2;
                        Gd.block(row, col, m2, m2) = Ac(n, k) * Ac(m, l) * DxD[n * K + m];
                    }
                }
                for (int n = 0; n < K; ++n) {
                    if (real.mu_vec(n) == 0.0 || Ac(k, n) == 0.0) continue;
                    for (int m = 0; m < K; ++m) {
                        if (real.mu_vec(m) == 0.0 || Ac(l, m) == 0.0) continue;
                        const long col = static_cast<long>(pair_index(m, n, K)) * m2;
                        Cd.block(row, col, m2, m2) =
                            Ac(k, n) * Ac(l, m) * real.mu_vec(n) * real.mu_vec(m) * I2;
                    }
                }
            }
        Gsum += Gd;
        Gsq += Gd.cwiseProduct(Gd);
        Csum += Cd;
        Csq += Cd.cwiseProduct(Cd);
    }
    (void)mu;

    McMoments out;
    const double n = static_cast<double>(n_draws);
    out.G = Gsum / n;
    out.C = Csum / n;
    out.G_se = ((Gsq / n - out.G.cwiseProduct(out.G)).cwiseMax(0.0) / n).cwiseSqrt();
    out.C_se = ((Csq / n - out.C.cwiseProduct(out.C)).cwiseMax(0.0) / n).cwiseSqrt();
    return out;
}

namespace {

double spectral_radius(const Eigen::MatrixXd& X) {
    const long N = X.rows();
    if (N <= 2000) {
        return X.eigenvalues().cwiseAbs().maxCoeff();
    }
    // power iteration; the dominant eigenvalue of a covariance-propagation
    // operator is real and positive
    Eigen::VectorXd v = Eigen::VectorXd::Constant(N, 1.0 / std::sqrt(static_cast<double>(N)));
    double est = 0.0;
    for (int it = 0; it < 400; ++it) {
        Eigen::VectorXd w = X * v;
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        w /= nw;
        const double next = std::abs(v.dot(X * v) / v.dot(v));
        v = std::move(w);
        if (it > 30 && std::abs(next - est) < 1e-9 * std::max(1.0, std::abs(next))) {
            est = next;
            break;
        }
        est = next;
    }
    return est;
}

}  // namespace

MsdReport theoretical_msd(const MomentMatrices& mom, const Schedule& sched) {
    const int K = mom.K, M = mom.M;
    const int m2 = M * M;
    const long N = static_cast<long>(K) * K * m2;
    const int T = sched.T;
    if (static_cast<int>(mom.hessians.size()) != K ||
        static_cast<int>(mom.R_blocks.size()) != K)
        throw ShapeError("theoretical_msd: need per-agent hessians and noise covariances");
    const double mu = sched.mu;
    const Eigen::MatrixXd IM = Eigen::MatrixXd::Identity(M, M);
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(m2, m2);

    // Participating agents apply (I - mu H)^T between combines; idle ones the
    // identity. F_k is the participation increment of that map, W_k the
    // within-iteration accumulation of the T local gradient-noise injections.
    std::vector<Eigen::MatrixXd> P(K), F(K);
    Eigen::MatrixXd W(m2, K);
    for (int k = 0; k < K; ++k) {
        const Eigen::MatrixXd D = IM - mu * mom.hessians[k];
        P[k] = matrix_power(D, T);
        F[k] = P[k] - IM;
        Eigen::MatrixXd Rp = mom.R_blocks[k];
        Eigen::MatrixXd acc = Rp;
        for (int p = 1; p < T; ++p) {
            Rp = D * Rp * D.transpose();
            acc += Rp;
        }
        acc *= mu * mu;
        W.col(k) = Eigen::Map<const Eigen::VectorXd>(acc.data(), m2);
    }

    Eigen::MatrixXd X(N, N);
    Eigen::VectorXd nvec = Eigen::VectorXd::Zero(N);
    MsdReport rep;

    if (mom.exact) {
        MomentBuilder mb(mom.spec);
        std::vector<Eigen::MatrixXd> FxI(K), IxF(K);
        for (int k = 0; k < K; ++k) {
            FxI[k] = kron(F[k], IM);
            IxF[k] = kron(IM, F[k]);
        }
        std::vector<Eigen::MatrixXd> FxF(static_cast<size_t>(K) * K);
        for (int n = 0; n < K; ++n)
            for (int m = 0; m < K; ++m) FxF[n * K + m] = kron(F[n], F[m]);

        for (int k = 0; k < K; ++k)
            for (int l = 0; l < K; ++l) {
                const long row = static_cast<long>(pair_index(l, k, K)) * m2;
                for (int n = 0; n < K; ++n)
                    for (int m = 0; m < K; ++m) {
                        const long col = static_cast<long>(pair_index(m, n, K)) * m2;
                        // E[B_{kn} (x) B_{lm}], B_{kn} = a_{nk}(I + theta_n F_n)
                        const double e00 = mb.pair_moment(n, k, m, l);
                        const double e0m = mb.pair_moment(n, k, m, l, m);
                        const double e0n = mb.pair_moment(n, k, m, l, n);
                        const double enm = mb.pair_moment(n, k, m, l, n, m);
                        Eigen::MatrixXd blk = e00 * I2;
                        blk += e0m * IxF[m];
                        blk += e0n * FxI[n];
                        blk += enm * FxF[n * K + m];
                        X.block(row, col, m2, m2) = blk;
                    }
                for (int m = 0; m < K; ++m) {
                    const double w = mb.noise_weight(l, k, m);
                    if (w != 0.0) nvec.segment(row, m2) += w * W.col(m);
                }
            }
    } else {
        if (mom.mc_draws < 1) throw ConfigError("mc_draws must be >= 1");
        Eigen::MatrixXd Xsum = Eigen::MatrixXd::Zero(N, N), Xsq = Xsum;
        Eigen::VectorXd nsum = Eigen::VectorXd::Zero(N), nsq = nsum;
        Eigen::MatrixXd Xd(N, N);
        Eigen::VectorXd nd(N);
        Rng rng = Rng::substream(mom.mc_seed, 0x6d63ULL);
        for (int d = 0; d < mom.mc_draws; ++d) {
            const Realization real = sample_realization(mom.spec, sched, d, rng);
            const Eigen::MatrixXd& Ac = real.A_combine;
            Xd.setZero();
            nd.setZero();
            for (int k = 0; k < K; ++k)
                for (int l = 0; l < K; ++l) {
                    const long row = static_cast<long>(pair_index(l, k, K)) * m2;
                    for (int n = 0; n < K; ++n) {
                        if (Ac(n, k) == 0.0) continue;
                        const Eigen::MatrixXd& Bn = real.mu_vec(n) > 0.0 ? P[n] : IM;
                        for (int m = 0; m < K; ++m) {
                            if (Ac(m, l) == 0.0) continue;
                            const Eigen::MatrixXd& Bm = real.mu_vec(m) > 0.0 ? P[m] : IM;
                            const long col = static_cast<long>(pair_index(m, n, K)) * m2;
                            Xd.block(row, col, m2, m2) = Ac(n, k) * Ac(m, l) * kron(Bn, Bm);
                        }
                    }
                    for (int m = 0; m < K; ++m)
                        if (real.mu_vec(m) > 0.0 && Ac(m, k) != 0.0 && Ac(m, l) != 0.0)
                            nd.segment(row, m2) += Ac(m, k) * Ac(m, l) * W.col(m);
                }
            Xsum += Xd;
            Xsq += Xd.cwiseProduct(Xd);
            nsum += nd;
            nsq += nd.cwiseProduct(nd);
        }
        const double nn = static_cast<double>(mom.mc_draws);
        X = Xsum / nn;
        nvec = nsum / nn;
        const double se_x =
            ((Xsq / nn - X.cwiseProduct(X)).cwiseMax(0.0) / nn).cwiseSqrt().maxCoeff();
        const double se_n =
            ((nsq / nn - nvec.cwiseProduct(nvec)).cwiseMax(0.0) / nn).cwiseSqrt().maxCoeff();
        rep.max_standard_error = std::max(se_x, se_n);
    }

    rep.rho = spectral_radius(X);
    if (rep.rho >= 1.0)
        throw UnstableSpectrum("spectral radius of the iteration moment operator is " +
                               std::to_string(rep.rho) + " >= 1");

    // steady state x = (I - X)^{-1} nvec; MSD = (1/K) <bvec(I), x>
    Eigen::VectorXd bI = Eigen::VectorXd::Zero(N);
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd vi = Eigen::VectorXd::Zero(m2);
        for (int i = 0; i < M; ++i) vi(i * M + i) = 1.0;
        bI.segment(static_cast<long>(pair_index(k, k, K)) * m2, m2) = vi;
    }
    X = -X;
    X.diagonal().array() += 1.0;
    Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXd>> lu(X);
    const Eigen::VectorXd x = lu.solve(nvec);

    rep.msd_lin = bI.dot(x) / static_cast<double>(K);
    if (rep.msd_lin < 0.0 && rep.msd_lin > -1e-18) rep.msd_lin = 0.0;
    rep.msd_db = rep.msd_lin > 0.0 ? 10.0 * std::log10(rep.msd_lin)
                                   : -std::numeric_limits<double>::infinity();
    return rep;
}

StabilityReport stability_report(const RegularityConstants& constants, const NoiseModel& noise,
                                 const NetworkSpec& spec, const Schedule& sched) {
    StabilityReport rep;
    if (!(constants.lambda_min > 0.0)) throw ConfigError("lambda_min must be positive");
    const double l2b = constants.lambda_max * constants.lambda_max + noise.beta_s2;
    rep.mu_max = 2.0 * constants.lambda_min / l2b;
    double gamma = 0.0;
    for (int k = 0; k < spec.K; ++k) {
        const double qk = spec.mode == Mode::FedSgd ? 1.0 : spec.q(k);
        gamma = std::max(gamma, 1.0 - 2.0 * sched.mu * qk * constants.lambda_min +
                                    sched.mu * sched.mu * qk * l2b);
    }
    rep.gamma = gamma;
    rep.admissible = gamma < 1.0;
    return rep;
}

}  // namespace asyncdiff
