#include "asyncdiff/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "asyncdiff/errors.hpp"
#include "asyncdiff/rng.hpp"

namespace asyncdiff {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

const json& need(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) bad(std::string("missing config key: ") + key);
    return *it;
}

std::vector<std::vector<int>> build_neighborhoods(int K, const std::string& topology,
                                                  double connectivity, std::uint64_t seed) {
    std::set<std::pair<int, int>> edges;
    const auto add = [&](int a, int b) {
        if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
    };
    if (topology == "full") {
        for (int a = 0; a < K; ++a)
            for (int b = a + 1; b < K; ++b) add(a, b);
    } else if (topology == "ring") {
        for (int a = 0; a < K; ++a) add(a, (a + 1) % K);
    } else if (topology == "random") {
        // ring backbone keeps the graph connected, extra edges are seeded
        for (int a = 0; a < K; ++a) add(a, (a + 1) % K);
        Rng rng = Rng::substream(seed, 0x746f70ULL);
        for (int a = 0; a < K; ++a)
            for (int b = a + 2; b < K; ++b)
                if (!(a == 0 && b == K - 1) && rng.bernoulli(connectivity)) add(a, b);
    } else {
        bad("unknown topology: " + topology);
    }
    std::vector<std::vector<int>> nb(K);
    for (int k = 0; k < K; ++k) nb[k].push_back(k);
    for (auto [a, b] : edges) {
        nb[a].push_back(b);
        nb[b].push_back(a);
    }
    for (auto& v : nb) std::sort(v.begin(), v.end());
    return nb;
}

Eigen::MatrixXd build_weights(const std::vector<std::vector<int>>& nb, const std::string& rule) {
    const int K = static_cast<int>(nb.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
    for (int k = 0; k < K; ++k) {
        double off = 0.0;
        for (int l : nb[k]) {
            if (l == k) continue;
            double w;
            if (rule == "metropolis")
                w = 1.0 / static_cast<double>(std::max(nb[k].size(), nb[l].size()));
            else if (rule == "uniform")
                w = 1.0 / static_cast<double>(nb[k].size());
            else
                bad("unknown weight rule: " + rule);
            A(l, k) = w;
            off += w;
        }
        A(k, k) = 1.0 - off;
    }
    return A;
}

Eigen::MatrixXd parse_covariance(const json& j, int M, const char* what) {
    if (j.is_string()) {
        if (j.get<std::string>() == "identity") return Eigen::MatrixXd::Identity(M, M);
        bad(std::string(what) + ": unknown covariance shorthand");
    }
    if (j.is_number()) return j.get<double>() * Eigen::MatrixXd::Identity(M, M);
    if (j.is_array() && !j.empty() && j[0].is_number()) {
        if (static_cast<int>(j.size()) != M) bad(std::string(what) + ": diagonal length != M");
        Eigen::VectorXd d(M);
        for (int i = 0; i < M; ++i) d(i) = j[i].get<double>();
        return d.asDiagonal();
    }
    if (j.is_array()) {
        if (static_cast<int>(j.size()) != M) bad(std::string(what) + ": matrix must be M x M");
        Eigen::MatrixXd S(M, M);
        for (int r = 0; r < M; ++r) {
            if (static_cast<int>(j[r].size()) != M) bad(std::string(what) + ": ragged matrix");
            for (int c = 0; c < M; ++c) S(r, c) = j[r][c].get<double>();
        }
        return S;
    }
    bad(std::string(what) + ": expected shorthand, scalar, diagonal or matrix");
}

Eigen::VectorXd parse_per_agent(const json& j, int K, const char* what) {
    if (j.is_number()) return Eigen::VectorXd::Constant(K, j.get<double>());
    if (j.is_array()) {
        if (static_cast<int>(j.size()) != K) bad(std::string(what) + ": length != K");
        Eigen::VectorXd v(K);
        for (int i = 0; i < K; ++i) v(i) = j[i].get<double>();
        return v;
    }
    bad(std::string(what) + ": expected scalar or per-agent array");
}

Eigen::MatrixXd parse_matrix(const json& j, int K, const char* what) {
    if (static_cast<int>(j.size()) != K) bad(std::string(what) + ": must be K x K");
    Eigen::MatrixXd A(K, K);
    for (int r = 0; r < K; ++r) {
        if (static_cast<int>(j[r].size()) != K) bad(std::string(what) + ": ragged matrix");
        for (int c = 0; c < K; ++c) A(r, c) = j[r][c].get<double>();
    }
    return A;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, bool paper_scale) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        bad(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    const json& net = need(j, "network");
    const json& prob = need(j, "problem");
    const json& sch = need(j, "schedule");
    const json& run = need(j, "run");

    const int K = need(net, "K").get<int>();
    if (K < 1) bad("K must be >= 1");
    NetworkSpec spec;
    spec.K = K;
    spec.mode = mode_from_name(need(net, "mode").get<std::string>());
    const std::uint64_t net_seed = net.value("net_seed", 0ULL);

    if (spec.mode == Mode::Decentralized && net.contains("A")) {
        spec.A = parse_matrix(net["A"], K, "network.A");
        spec.neighborhoods.assign(K, {});
        for (int k = 0; k < K; ++k) {
            for (int l = 0; l < K; ++l)
                if (l == k || spec.A(l, k) != 0.0 || spec.A(k, l) != 0.0)
                    spec.neighborhoods[k].push_back(l);
        }
    } else if (spec.mode == Mode::Decentralized) {
        const std::string topology = net.value("topology", std::string("random"));
        const double connectivity = net.value("connectivity", 0.3);
        spec.neighborhoods = build_neighborhoods(K, topology, connectivity, net_seed);
        spec.A = build_weights(spec.neighborhoods, net.value("weights", std::string("metropolis")));
    } else {
        spec.neighborhoods.assign(K, {});
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < K; ++l) spec.neighborhoods[k].push_back(l);
        spec.A = Eigen::MatrixXd::Constant(K, K, 1.0 / static_cast<double>(K));
    }

    spec.q = spec.mode == Mode::FedSgd ? Eigen::VectorXd::Ones(K).eval()
                                       : parse_per_agent(need(net, "q"), K, "network.q");

    if (spec.mode != Mode::Decentralized) {
        spec.Q = Eigen::MatrixXd::Ones(K, K);
    } else {
        const json& Qj = need(net, "Q");
        if (Qj.is_string()) {
            if (Qj.get<std::string>() != "uniform_random") bad("network.Q: unknown shorthand");
            // i.i.d. Uniform(0.2, 1.0) over directed neighbor pairs, seeded
            Rng rng = Rng::substream(net_seed, 0x716c6bULL);
            spec.Q = Eigen::MatrixXd::Zero(K, K);
            for (int k = 0; k < K; ++k)
                for (int l : spec.neighborhoods[k])
                    if (l != k) spec.Q(l, k) = rng.uniform(0.2, 1.0);
        } else if (Qj.is_number()) {
            spec.Q = Eigen::MatrixXd::Constant(K, K, Qj.get<double>());
        } else {
            spec.Q = parse_matrix(Qj, K, "network.Q");
        }
    }
    cfg.spec = validate_network(std::move(spec));

    cfg.M = need(prob, "M").get<int>();
    cfg.N = need(prob, "N").get<int>();
    if (cfg.M < 1 || cfg.N < 1) bad("M and N must be >= 1");
    if (paper_scale) cfg.N = 1000000;
    cfg.batch = prob.value("batch", 1);
    if (cfg.batch < 1) bad("batch must be >= 1");
    cfg.Ru = parse_covariance(need(prob, "R_u"), cfg.M, "problem.R_u");
    cfg.Rw = parse_covariance(need(prob, "R_w"), cfg.M, "problem.R_w");
    cfg.sigma_v = parse_per_agent(need(prob, "sigma_v"), K, "problem.sigma_v");
    if ((cfg.sigma_v.array() < 0.0).any()) bad("problem.sigma_v must be >= 0");

    cfg.sched.T = need(sch, "T").get<int>();
    cfg.sched.iters = need(sch, "iters").get<long>();
    cfg.sched.mu = need(sch, "mu").get<double>();
    if (cfg.sched.T < 1 || cfg.sched.iters < 1 || !(cfg.sched.mu > 0.0))
        bad("schedule requires T >= 1, iters >= 1, mu > 0");

    cfg.runs = run.value("runs", 1);
    cfg.seed = run.value("seed", 0ULL);
    cfg.tail_fraction = run.value("tail_fraction", 0.1);
    if (cfg.runs < 1) bad("run.runs must be >= 1");
    if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 1.0))
        bad("run.tail_fraction must be in (0, 1]");

    if (paper_scale) j["problem"]["N"] = 1000000;
    cfg.canonical = j.dump(2);
    cfg.digest = fnv1a(cfg.canonical);
    return cfg;
}

std::string preset_text(const std::string& name) {
    json j;
    j["network"] = {{"K", 20},      {"mode", "decentralized"}, {"topology", "random"},
                    {"weights", "metropolis"}, {"connectivity", 0.3}, {"net_seed", 20230917},
                    {"q", 0.5},     {"Q", "uniform_random"}};
    j["problem"] = {{"M", 5}, {"N", 10000}, {"R_u", "identity"}, {"R_w", "identity"},
                    {"sigma_v", 0.1}, {"batch", 1}};
    j["schedule"] = {{"T", 100}, {"iters", 1000}, {"mu", 1e-4}};
    j["run"] = {{"runs", 5}, {"seed", 7}, {"tail_fraction", 0.1}};

    if (name == "case1") {
        // defaults
    } else if (name == "case2") {
        j["schedule"]["T"] = 1;
    } else if (name == "case3") {
        // Full participation with the deterministic (1/K) combine: every
        // column of the sampled matrix is exactly uniform, so all agents hold
        // bit-identical iterates after every combine step.
        j["network"] = {{"K", 20}, {"mode", "fedsgd"}};
    } else if (name == "fedsgd") {
        j["network"] = {{"K", 20}, {"mode", "fedsgd"}};
    } else if (name == "fedavg") {
        j["network"] = {{"K", 20}, {"mode", "fedavg"}, {"q", 0.5}};
    } else {
        throw UnknownPreset("unknown preset: " + name);
    }
    return j.dump(2);
}

ExperimentConfig preset(const std::string& name, bool paper_scale) {
    return parse_config(preset_text(name), paper_scale);
}

}  // namespace asyncdiff
