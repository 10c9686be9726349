#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asyncdiff/diffusion.hpp"
#include "asyncdiff/theory.hpp"

namespace asyncdiff {

// Per-iteration cross-run aggregate of the MSD curve (dB domain).
struct AggregateRow {
    long iter;
    double msd_db_mean;
    double msd_db_std;
};

std::vector<AggregateRow> aggregate_trajectory(const Trajectory& traj);

// Fixed-precision (%.17g) scalar formatting; all emitted files are
// byte-identical across runs of the same config + seed.
std::string format_g17(double x);

// CSV layout: a `# digest=...` line, the per-run section
// `run,iter,msd_lin,msd_db`, then `# aggregate` and
// `iter,msd_db_mean,msd_db_std[,msd_db_theory]`.
void write_csv(const std::string& path, const Trajectory& traj,
               const std::vector<AggregateRow>& agg,
               std::optional<double> msd_db_theory = std::nullopt);

struct TheoryOutput {
    MsdReport msd;
    StabilityReport stability;
    int K = 0, M = 0, T = 0;
    std::string mode;
    bool exact = true;
    double max_standard_error = 0.0;  // only meaningful when exact == false
    std::uint64_t digest = 0;
};

void write_report(const std::string& path, const TheoryOutput& rep);

// Reads the `# digest=` header of a file written by this module.
std::uint64_t read_digest(const std::string& path);

// Self-contained SVG: empirical mean curve (dB vs iteration) and, when the
// theory value is finite, a horizontal reference line; a noiseless -inf dB
// theory value becomes a text annotation instead.
void write_svg(const std::string& path, const std::vector<AggregateRow>& agg,
               std::optional<double> msd_db_theory, std::uint64_t digest);

}  // namespace asyncdiff
