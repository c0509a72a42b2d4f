#pragma once

#include <filesystem>
#include <string>

#include "salab/analysis.hpp"
#include "salab/config.hpp"
#include "salab/oracles.hpp"

namespace salab::harness {

/// Ensemble experiment. Writes summary.json, runs.csv and histogram.json to
/// `out_dir`. Outputs are deterministic for a fixed (config, seed): no
/// timestamps, fixed float formatting, and aggregation in run-index order.
analysis::EnsembleSummary cmd_run(const config::ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir, int threads = 0);

struct SweepRow {
    std::string parameter;
    double value = 0.0;
    analysis::EnsembleSummary summary;
};

/// Grid experiment over alpha or rho; writes sweep.csv (one row per grid
/// point, in grid order). Grid point g draws its runs from an independently
/// derived seed block.
std::vector<SweepRow> cmd_sweep(const config::ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir, int threads = 0);

/// Closed-form oracle report for the configured model; writes oracle.json.
/// Models without closed forms (camel) raise a capability error.
oracles::OracleReport cmd_oracle(const config::ExperimentConfig& cfg,
                                 const std::filesystem::path& out_dir);

struct DecomposeOutcome {
    oracles::DecompositionTrace trace;
    double martingale_lag1_autocorr = 0.0;
    std::uint64_t seed = 0;
};

/// Runs one stored trajectory of the configured linear model and checks the
/// disturbance decomposition; writes decompose.json.
DecomposeOutcome cmd_decompose(const config::ExperimentConfig& cfg,
                               const std::filesystem::path& out_dir);

/// Lag-1 sample autocorrelation of a scalar series.
double lag1_autocorr(const std::vector<double>& series);

}  // namespace salab::harness
