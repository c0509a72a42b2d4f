#include <benchmark/benchmark.h>

#include "salab/analysis.hpp"
#include "salab/models.hpp"
#include "salab/oracles.hpp"

using namespace salab;

namespace {

void bench_ar1_step(benchmark::State& state) {
    const NoiseChain chain = Ar1(0.9);
    Rng rng(1);
    ChainState s = stationary_sample(chain, rng);
    for (auto _ : state) {
        chain_step_inplace(chain, s, rng);
        benchmark::DoNotOptimize(s.values[0]);
    }
}
BENCHMARK(bench_ar1_step);

void bench_td_step(benchmark::State& state) {
    const NoiseChain chain = TdState(0.5, 1.0, 0.7, 0.0);
    Rng rng(1);
    ChainState s = stationary_sample(chain, rng);
    for (auto _ : state) {
        chain_step_inplace(chain, s, rng);
        benchmark::DoNotOptimize(s.values[1]);
    }
}
BENCHMARK(bench_td_step);

void bench_scalar_linear_run(benchmark::State& state) {
    models::ScalarLinearModel model;
    const SAProblem problem = model.problem();
    const NoiseChain chain = model.chain();
    const StepSchedule schedule = make_constant(0.0028);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        Rng rng(7);
        const ChainState phi0 = stationary_sample(chain, rng);
        SaRunOptions opts;
        opts.n_steps = n;
        opts.burn_in = n / 5;
        const RunRecord rec =
            sa_run(problem, chain, schedule, Eigen::VectorXd::Zero(1), phi0, opts, rng);
        benchmark::DoNotOptimize(rec.theta_pr[0]);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}
BENCHMARK(bench_scalar_linear_run)->Arg(10000)->Arg(100000);

void bench_td_run(benchmark::State& state) {
    models::TdModel model;
    const SAProblem problem = model.problem();
    const NoiseChain chain = model.chain();
    const StepSchedule schedule = make_clipped(0.01, 0.8);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        Rng rng(7);
        const ChainState phi0 = stationary_sample(chain, rng);
        SaRunOptions opts;
        opts.n_steps = n;
        opts.burn_in = n / 5;
        const RunRecord rec =
            sa_run(problem, chain, schedule, Eigen::Vector2d(0.0, 0.0), phi0, opts, rng);
        benchmark::DoNotOptimize(rec.theta_pr[0]);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}
BENCHMARK(bench_td_run)->Arg(10000)->Arg(100000);

void bench_poisson_solve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(5);
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            p(i, j) = 0.05 + rng.uniform01();
            row_sum += p(i, j);
        }
        p.row(i) /= row_sum;
    }
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = rng.normal();
    for (auto _ : state) {
        const auto sol = oracles::solve_poisson_finite(p, g);
        benchmark::DoNotOptimize(sol.ghat[0]);
    }
}
BENCHMARK(bench_poisson_solve)->Arg(4)->Arg(8)->Arg(32);

void bench_lyapunov_solve(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Rng rng(9);
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    double max_real = -1e300;
    const Eigen::VectorXcd eig = a.eigenvalues();
    for (Eigen::Index i = 0; i < eig.size(); ++i) max_real = std::max(max_real, eig[i].real());
    a -= (max_real + 1.0) * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) = rng.normal();
    const Eigen::MatrixXd sigma = b * b.transpose();
    for (auto _ : state) {
        const Eigen::MatrixXd z = oracles::solve_lyapunov(a, sigma);
        benchmark::DoNotOptimize(z(0, 0));
    }
}
BENCHMARK(bench_lyapunov_solve)->Arg(2)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
