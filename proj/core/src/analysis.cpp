#include "salab/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include "salab/error.hpp"

namespace salab::analysis {

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Work is handed
/// out by an atomic counter; outputs must be written to disjoint slots.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    const int n_workers = std::min<int>(resolve_threads(threads), static_cast<int>(std::max<std::size_t>(count, 1)));
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

Eigen::VectorXd draw_theta0(const Theta0Spec& spec, int dim, Rng& rng) {
    return std::visit(
        [&](const auto& s) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FixedTheta0>) {
                if (s.value.size() != dim)
                    throw Error(ErrorKind::Argument, "theta0 dimension mismatch");
                return s.value;
            } else {
                if (s.mean.size() != 0 && s.mean.size() != dim)
                    throw Error(ErrorKind::Argument, "theta0 mean dimension mismatch");
                Eigen::VectorXd mean = s.mean.size() == dim ? s.mean : Eigen::VectorXd::Zero(dim);
                Eigen::VectorXd v(dim);
                for (int i = 0; i < dim; ++i) v[i] = mean[i] + s.stddev * rng.normal();
                return v;
            }
        },
        spec);
}

EnsembleSummary ensemble_run(const SAProblem& problem, const NoiseChain& chain,
                             const StepSchedule& schedule, const EnsembleOptions& options) {
    if (options.m_runs < 2) throw Error(ErrorKind::Argument, "need M >= 2 runs");
    if (options.n_steps == 0 || options.burn_in >= options.n_steps)
        throw Error(ErrorKind::Argument, "need N > N0 >= 0");

    const std::size_t m = options.m_runs;
    std::vector<RunStat> stats(m);

    parallel_for(m, options.threads, [&](std::size_t i) {
        RunStat stat;
        stat.seed = Rng::derive(options.master_seed, i);
        Rng rng(stat.seed);
        const Eigen::VectorXd theta0 = draw_theta0(options.theta0, problem.dim, rng);
        const ChainState phi0 = stationary_sample(chain, rng);
        SaRunOptions run_opts;
        run_opts.n_steps = options.n_steps;
        run_opts.burn_in = options.burn_in;
        try {
            const RunRecord rec = sa_run(problem, chain, schedule, theta0, phi0, run_opts, rng);
            stat.theta_final = rec.theta_final;
            stat.theta_pr = rec.theta_pr;
            if (rec.fbar_sum)
                stat.target_bias_sq_norm =
                    (*rec.fbar_sum / static_cast<double>(options.n_steps)).squaredNorm();
            stat.tail_sq_err = rec.tail_sq_err;
        } catch (const DivergenceError& err) {
            stat.diverged = true;
            stat.diverged_step = err.step();
        }
        stats[i] = std::move(stat);
    });

    EnsembleSummary summary;
    summary.m_total = m;
    summary.n_steps = options.n_steps;
    summary.burn_in = options.burn_in;
    summary.runs = std::move(stats);

    const int d = problem.dim;
    KahanSum sum_final(d), sum_pr(d);
    double sum_bias_sq = 0.0, sum_tail = 0.0, sum_mse = 0.0;
    std::size_t n_bias = 0, n_tail = 0;
    std::size_t included = 0;
    for (const auto& stat : summary.runs) {
        if (stat.diverged) {
            ++summary.m_excluded;
            continue;
        }
        ++included;
        sum_final.add(stat.theta_final);
        sum_pr.add(stat.theta_pr);
        if (stat.target_bias_sq_norm) {
            sum_bias_sq += *stat.target_bias_sq_norm;
            ++n_bias;
        }
        if (stat.tail_sq_err) {
            sum_tail += *stat.tail_sq_err;
            ++n_tail;
        }
        if (problem.theta_star)
            sum_mse += (stat.theta_final - *problem.theta_star).squaredNorm();
    }
    if (included < 2) throw Error(ErrorKind::Numerical, "fewer than two runs survived");

    const double mi = static_cast<double>(included);
    summary.mean_final = sum_final.value() / mi;
    summary.mean_pr = sum_pr.value() / mi;

    // two-pass covariance of the PR estimates in run-index order
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& stat : summary.runs) {
        if (stat.diverged) continue;
        const Eigen::VectorXd c = stat.theta_pr - summary.mean_pr;
        cov += c * c.transpose();
    }
    summary.cov_pr = cov / (mi - 1.0);
    summary.scaled_cov_pr =
        static_cast<double>(options.n_steps - options.burn_in) * summary.cov_pr;

    if (problem.theta_star) summary.mse_final = sum_mse / mi;
    if (n_bias > 0) summary.mean_target_bias_sq_norm = sum_bias_sq / static_cast<double>(n_bias);
    if (n_tail > 0) summary.mean_tail_sq_err = sum_tail / static_cast<double>(n_tail);
    return summary;
}

Eigen::MatrixXd clt_variance_batch_means(const Eigen::MatrixXd& series, int num_batches) {
    const Eigen::Index len = series.rows();
    const Eigen::Index d = series.cols();
    if (num_batches < 20) throw Error(ErrorKind::Argument, "need at least 20 batches");
    const Eigen::Index batch = len / num_batches;
    if (batch < 1) throw Error(ErrorKind::Argument, "series too short for the batch count");

    Eigen::MatrixXd means(num_batches, d);
    for (int b = 0; b < num_batches; ++b)
        means.row(b) = series.middleRows(b * batch, batch).colwise().mean();

    const Eigen::RowVectorXd grand = means.colwise().mean();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int b = 0; b < num_batches; ++b) {
        const Eigen::VectorXd c = (means.row(b) - grand).transpose();
        cov += c * c.transpose();
    }
    cov /= static_cast<double>(num_batches - 1);
    return static_cast<double>(batch) * cov;
}

Eigen::MatrixXd clt_variance_autocov(const Eigen::MatrixXd& series, int max_lag) {
    const Eigen::Index len = series.rows();
    const Eigen::Index d = series.cols();
    if (max_lag < 1 || max_lag >= len)
        throw Error(ErrorKind::Argument, "need 1 <= max_lag < series length");

    const Eigen::RowVectorXd mean = series.colwise().mean();
    const Eigen::MatrixXd centered = series.rowwise() - mean;

    auto autocov = [&](int k) -> Eigen::MatrixXd {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index i = 0; i + k < len; ++i)
            c += centered.row(i).transpose() * centered.row(i + k);
        return c / static_cast<double>(len);
    };

    Eigen::MatrixXd sum = autocov(0);
    for (int k = 1; k <= max_lag; ++k) {
        const double w = 1.0 - static_cast<double>(k) / (max_lag + 1.0);
        const Eigen::MatrixXd c = autocov(k);
        sum += w * (c + c.transpose());
    }
    return sum;
}

std::vector<TargetBiasRow> target_bias_decay(const SAProblem& problem, const NoiseChain& chain,
                                             const StepSchedule& schedule,
                                             const std::vector<std::size_t>& n_grid,
                                             std::size_t m_runs, std::uint64_t master_seed,
                                             const Theta0Spec& theta0, int threads) {
    if (!problem.fbar || !problem.additive_noise)
        throw Error(ErrorKind::Capability, "target bias decay needs an additive-noise problem with fbar");
    if (n_grid.empty()) throw Error(ErrorKind::Argument, "empty N grid");

    std::vector<TargetBiasRow> rows;
    rows.reserve(n_grid.size());
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        const std::size_t n = n_grid[g];
        const std::uint64_t block_seed = Rng::derive_block(master_seed, g);
        std::vector<double> bias_sq(m_runs);

        parallel_for(m_runs, threads, [&](std::size_t i) {
            Rng rng(Rng::derive(block_seed, i));
            const Eigen::VectorXd th0 = draw_theta0(theta0, problem.dim, rng);
            const ChainState phi0 = stationary_sample(chain, rng);
            SaRunOptions opts;
            opts.n_steps = n;
            opts.burn_in = n - 1;
            const RunRecord rec = sa_run(problem, chain, schedule, th0, phi0, opts, rng);
            bias_sq[i] = (*rec.fbar_sum / static_cast<double>(n)).squaredNorm();
        });

        TargetBiasRow row;
        row.n_steps = n;
        const double nd = static_cast<double>(n);
        double mean = 0.0;
        for (double v : bias_sq) mean += v;
        mean /= static_cast<double>(m_runs);
        double var = 0.0;
        for (double v : bias_sq) var += (v - mean) * (v - mean);
        var /= static_cast<double>(m_runs - 1);
        const double se_mean = std::sqrt(var / static_cast<double>(m_runs));

        row.mean_n_bias_sq = nd * mean;
        row.se_n_bias_sq = nd * se_mean;
        row.mean_n2_bias_sq = nd * nd * mean;
        row.se_n2_bias_sq = nd * nd * se_mean;
        rows.push_back(row);
    }
    return rows;
}

std::vector<MseRow> mse_alpha_table(const SAProblem& problem, const NoiseChain& chain,
                                    const std::vector<double>& alphas, std::size_t n_steps,
                                    std::size_t m_runs, std::uint64_t master_seed,
                                    const Theta0Spec& theta0, int threads) {
    if (!problem.theta_star) throw Error(ErrorKind::Capability, "steady-state MSE needs theta*");
    if (alphas.empty()) throw Error(ErrorKind::Argument, "empty alpha grid");

    std::vector<MseRow> rows;
    rows.reserve(alphas.size());
    for (std::size_t g = 0; g < alphas.size(); ++g) {
        const double alpha = alphas[g];
        const StepSchedule schedule = make_constant(alpha);
        const std::uint64_t block_seed = Rng::derive_block(master_seed, g);
        std::vector<double> tails(m_runs);

        parallel_for(m_runs, threads, [&](std::size_t i) {
            Rng rng(Rng::derive(block_seed, i));
            const Eigen::VectorXd th0 = draw_theta0(theta0, problem.dim, rng);
            const ChainState phi0 = stationary_sample(chain, rng);
            SaRunOptions opts;
            opts.n_steps = n_steps;
            opts.burn_in = n_steps - 1;
            const RunRecord rec = sa_run(problem, chain, schedule, th0, phi0, opts, rng);
            tails[i] = *rec.tail_sq_err;
        });

        MseRow row;
        row.alpha = alpha;
        double mean = 0.0;
        for (double v : tails) mean += v;
        mean /= static_cast<double>(m_runs);
        double var = 0.0;
        for (double v : tails) var += (v - mean) * (v - mean);
        var /= static_cast<double>(m_runs - 1);
        row.mse = mean;
        row.se = std::sqrt(var / static_cast<double>(m_runs));
        row.mse_over_alpha = mean / alpha;
        rows.push_back(row);
    }
    return rows;
}

HistogramSpec histogram(const std::vector<double>& values, HistogramSpec spec) {
    if (spec.bin_count < 1) throw Error(ErrorKind::Argument, "need at least one bin");
    if (values.empty()) throw Error(ErrorKind::Argument, "empty input");

    double lo, hi;
    if (spec.lo && spec.hi) {
        lo = *spec.lo;
        hi = *spec.hi;
        if (!(lo < hi)) throw Error(ErrorKind::Argument, "need lo < hi");
    } else {
        lo = *std::min_element(values.begin(), values.end());
        hi = *std::max_element(values.begin(), values.end());
        if (lo == hi) {  // all-equal input: widen to a unit cell around the value
            lo -= 0.5;
            hi += 0.5;
        }
        spec.lo = lo;
        spec.hi = hi;
    }

    spec.counts.assign(static_cast<std::size_t>(spec.bin_count), 0);
    spec.edges.resize(static_cast<std::size_t>(spec.bin_count) + 1);
    for (int i = 0; i <= spec.bin_count; ++i)
        spec.edges[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / spec.bin_count;

    const double width = (hi - lo) / spec.bin_count;
    for (double v : values) {
        int idx = static_cast<int>(std::floor((v - lo) / width));
        if (v < lo) {
            idx = 0;
            ++spec.clipped_low;
        } else if (idx >= spec.bin_count) {
            // includes v == hi, counted in the last bin without a clip tally
            if (v > hi) ++spec.clipped_high;
            idx = spec.bin_count - 1;
        }
        ++spec.counts[static_cast<std::size_t>(idx)];
    }
    return spec;
}

SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys, bool log_log) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw Error(ErrorKind::Argument, "need matching xs/ys with at least two points");

    std::vector<double> x(xs), y(ys);
    if (log_log) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] > 0.0) || !(y[i] > 0.0))
                throw Error(ErrorKind::Domain, "log-log fit needs positive data");
            x[i] = std::log(x[i]);
            y[i] = std::log(y[i]);
        }
    }

    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw Error(ErrorKind::Argument, "degenerate xs");

    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

}  // namespace salab::analysis
