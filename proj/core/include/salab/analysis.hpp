#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "salab/engine.hpp"

namespace salab::analysis {

// ---------------------------------------------------------------------------
// Monte Carlo ensembles
// ---------------------------------------------------------------------------

/// Per-run initial parameter: either a fixed vector or an isotropic Gaussian
/// draw taken from the run's own stream.
struct FixedTheta0 {
    Eigen::VectorXd value;
};
struct GaussianTheta0 {
    Eigen::VectorXd mean;
    double stddev = 1.0;
};
using Theta0Spec = std::variant<FixedTheta0, GaussianTheta0>;

Eigen::VectorXd draw_theta0(const Theta0Spec& spec, int dim, Rng& rng);

struct EnsembleOptions {
    std::size_t m_runs = 0;
    std::size_t n_steps = 0;
    std::size_t burn_in = 0;
    std::uint64_t master_seed = 0;
    Theta0Spec theta0;
    int threads = 0;  // 0 -> hardware concurrency
};

struct RunStat {
    std::uint64_t seed = 0;
    bool diverged = false;
    std::size_t diverged_step = 0;
    Eigen::VectorXd theta_final;
    Eigen::VectorXd theta_pr;
    std::optional<double> target_bias_sq_norm;  // ||fbar_sum / N||^2
    std::optional<double> tail_sq_err;
};

struct EnsembleSummary {
    std::size_t m_total = 0;
    std::size_t m_excluded = 0;  // diverged runs, excluded from the statistics
    std::size_t n_steps = 0;
    std::size_t burn_in = 0;

    Eigen::VectorXd mean_final;
    Eigen::VectorXd mean_pr;
    Eigen::MatrixXd cov_pr;         // sample covariance of the PR estimates
    Eigen::MatrixXd scaled_cov_pr;  // (N - N0) * cov_pr

    std::optional<double> mse_final;         // mean ||theta_final - theta*||^2
    std::optional<double> mean_tail_sq_err;  // mean over runs of the tail window MSE
    std::optional<double> mean_target_bias_sq_norm;

    std::vector<RunStat> runs;
};

/// Runs M independent trajectories with per-run seeds derived from
/// (master_seed, run index). Runs execute in parallel; the summary is a
/// deterministic fold in run-index order, so it is independent of the thread
/// count. Each run draws, in order: theta0 (if random), the stationary initial
/// chain state, then the trajectory.
EnsembleSummary ensemble_run(const SAProblem& problem, const NoiseChain& chain,
                             const StepSchedule& schedule, const EnsembleOptions& options);

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Batch-means estimate of the asymptotic (CLT) covariance of a stationary
/// series. `series` holds one observation per row. The series is split into
/// `num_batches` equal batches (>= 20; a remainder at the end is dropped) and
/// the estimate is batch_size * Cov(batch means).
Eigen::MatrixXd clt_variance_batch_means(const Eigen::MatrixXd& series, int num_batches);

/// Cross-check estimator: Bartlett-windowed sum of sample autocovariances,
/// C(0) + sum_{k=1}^{L} (1 - k/(L+1)) (C(k) + C(k)').
Eigen::MatrixXd clt_variance_autocov(const Eigen::MatrixXd& series, int max_lag);

struct TargetBiasRow {
    std::size_t n_steps = 0;
    double mean_n_bias_sq = 0.0;   // N * E ||beta_N||^2
    double se_n_bias_sq = 0.0;
    double mean_n2_bias_sq = 0.0;  // N^2 * E ||beta_N||^2
    double se_n2_bias_sq = 0.0;
};

/// Decay of the empirical target bias for an additive-noise problem over a
/// grid of run lengths. Each (N, run) pair uses an independently derived seed.
std::vector<TargetBiasRow> target_bias_decay(const SAProblem& problem, const NoiseChain& chain,
                                             const StepSchedule& schedule,
                                             const std::vector<std::size_t>& n_grid,
                                             std::size_t m_runs, std::uint64_t master_seed,
                                             const Theta0Spec& theta0, int threads = 0);

struct MseRow {
    double alpha = 0.0;
    double mse = 0.0;        // steady-state E ||theta - theta*||^2, tail-window average
    double se = 0.0;
    double mse_over_alpha = 0.0;
};

/// Steady-state MSE across a grid of constant step sizes.
std::vector<MseRow> mse_alpha_table(const SAProblem& problem, const NoiseChain& chain,
                                    const std::vector<double>& alphas, std::size_t n_steps,
                                    std::size_t m_runs, std::uint64_t master_seed,
                                    const Theta0Spec& theta0, int threads = 0);

// ---------------------------------------------------------------------------
// Histograms and fits
// ---------------------------------------------------------------------------

struct HistogramSpec {
    int bin_count = 0;
    std::optional<double> lo;  // both set -> explicit range, else data-driven
    std::optional<double> hi;

    std::vector<std::int64_t> counts;
    std::vector<double> edges;  // bin_count + 1, strictly increasing
    std::int64_t clipped_low = 0;
    std::int64_t clipped_high = 0;
};

/// Fills the histogram; out-of-range values are clipped into the end bins and
/// tallied separately.
HistogramSpec histogram(const std::vector<double>& values, HistogramSpec spec);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares line through (xs, ys), optionally in log-log coordinates.
SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys, bool log_log);

}  // namespace salab::analysis
