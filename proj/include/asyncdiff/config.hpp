#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "asyncdiff/regression.hpp"
#include "asyncdiff/sampler.hpp"
#include "asyncdiff/topology.hpp"

namespace asyncdiff {

// Fully resolved experiment description. Parsing resolves every shorthand in
// the config file (topology names, weight rules, scalar broadcasts, seeded
// random sampling probabilities) into concrete matrices, so two configs with
// the same digest describe byte-identical experiments.
struct ExperimentConfig {
    NetworkSpec spec;

    int M = 0;
    int N = 0;
    int batch = 1;
    Eigen::MatrixXd Ru;
    Eigen::MatrixXd Rw;
    Eigen::VectorXd sigma_v;  // per agent, standard deviation

    Schedule sched;

    int runs = 1;
    std::uint64_t seed = 0;
    double tail_fraction = 0.1;

    std::string canonical;        // normalized config text
    std::uint64_t digest = 0;     // FNV-1a of canonical
};

// FNV-1a 64-bit over a byte string.
std::uint64_t fnv1a(const std::string& bytes);

// Parses the JSON config text; paper_scale restores the publication-size
// dataset (N = 10^6) where the file carries the desk-scale default.
ExperimentConfig parse_config(const std::string& json_text, bool paper_scale = false);

// Built-in experiment configurations; name in
// {case1, case2, case3, fedsgd, fedavg}. Throws UnknownPreset.
std::string preset_text(const std::string& name);
ExperimentConfig preset(const std::string& name, bool paper_scale = false);

}  // namespace asyncdiff
