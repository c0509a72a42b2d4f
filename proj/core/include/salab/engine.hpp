#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "salab/chains.hpp"
#include "salab/error.hpp"
#include "salab/rng.hpp"

namespace salab {

// ---------------------------------------------------------------------------
// Step-size schedules
// ---------------------------------------------------------------------------

struct ConstantStep {
    double alpha;
};

/// a * n^{-rho}. rho = 0 degenerates to the constant schedule a.
struct PolynomialStep {
    double a;
    double rho;
};

/// min(alpha, n^{-rho}).
struct ClippedStep {
    double alpha;
    double rho;
};

using StepSchedule = std::variant<ConstantStep, PolynomialStep, ClippedStep>;

StepSchedule make_constant(double alpha);
StepSchedule make_polynomial(double a, double rho);
StepSchedule make_clipped(double alpha, double rho);

/// Step size used at iterate n (n >= 1).
double schedule_value(const StepSchedule& schedule, std::size_t n);

// ---------------------------------------------------------------------------
// Problems and run records
// ---------------------------------------------------------------------------

/// A root-finding problem theta* with fbar(theta*) = 0, driven by Markovian
/// noise: theta_{n+1} = theta_n + alpha_{n+1} f(theta_n, Phi_{n+1}).
struct SAProblem {
    int dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const ChainState&)> f;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fbar;  // may be empty
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const ChainState&)> jacobian_f;  // may be empty
    std::optional<Eigen::VectorXd> theta_star;
    std::optional<Eigen::MatrixXd> astar;
    /// True when f(theta, phi) = fbar(theta) + Xi(phi): the disturbance does
    /// not multiply the parameter.
    bool additive_noise = false;
};

/// Compensated (Kahan) accumulator; used for every streaming sum so that
/// streaming and two-pass reductions agree bitwise when fed in the same order.
class KahanSum {
public:
    explicit KahanSum(Eigen::Index dim) : sum_(Eigen::VectorXd::Zero(dim)), c_(Eigen::VectorXd::Zero(dim)) {}

    void add(const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < sum_.size(); ++i) {
            const double y = v[i] - c_[i];
            const double t = sum_[i] + y;
            c_[i] = (t - sum_[i]) - y;
            sum_[i] = t;
        }
    }

    const Eigen::VectorXd& value() const { return sum_; }

private:
    Eigen::VectorXd sum_;
    Eigen::VectorXd c_;
};

struct RunRecord {
    Eigen::VectorXd theta_final;
    Eigen::VectorXd theta_pr;   // mean of theta_k over k in (N0, N]
    std::size_t n_steps = 0;    // N
    std::size_t burn_in = 0;    // N0

    /// Sum of fbar(theta_n) over n = 0..N-1 (empirical target bias times N);
    /// present iff the problem exposes fbar.
    std::optional<Eigen::VectorXd> fbar_sum;

    /// Mean of ||theta_n - theta*||^2 over the trailing window (steps
    /// N - tail + 1 .. N); present iff theta* is known.
    std::optional<double> tail_sq_err;
    std::size_t tail_window = 0;

    /// theta_0..theta_N when the path is recorded.
    std::optional<std::vector<Eigen::VectorXd>> thetas;
    /// Phi_0..Phi_N chain states when recorded.
    std::optional<std::vector<ChainState>> states;
};

struct SaRunOptions {
    std::size_t n_steps = 0;   // N, > burn_in
    std::size_t burn_in = 0;   // N0
    bool record_path = false;
    bool record_states = false;
    std::size_t tail_window = 0;  // 0 -> N/10
};

/// Runs the SA recursion from (theta0, phi0). The chain is advanced before
/// each use of f; the PR average over (N0, N] is accumulated in streaming
/// fashion. Aborts with DivergenceError if theta leaves ||theta|| <= 1e12 or
/// becomes non-finite.
RunRecord sa_run(const SAProblem& problem, const NoiseChain& chain, const StepSchedule& schedule,
                 const Eigen::VectorXd& theta0, const ChainState& phi0, const SaRunOptions& options,
                 Rng& rng);

/// Mean of path[k-1] = theta_k over k in (N0, N], N = path length. Performs
/// the same compensated adds in the same order as sa_run, hence reproduces its
/// streaming accumulator bitwise on the same path.
Eigen::VectorXd pr_average(const std::vector<Eigen::VectorXd>& path, std::size_t burn_in);

/// Empirical target bias: the mean of fbar over the given parameter path.
Eigen::VectorXd empirical_target_bias(const SAProblem& problem, const std::vector<Eigen::VectorXd>& path);

// ---------------------------------------------------------------------------
// Sensitivity process
// ---------------------------------------------------------------------------

struct SensitivityRecord {
    /// S_N / ||S_N||_F; combined with log_norm_final this represents S_N
    /// without overflow.
    Eigen::MatrixXd s_unit;
    double log_norm_final = 0.0;
    std::size_t n_steps = 0;
    /// log ||S_n||_F for n = 1..N.
    std::vector<double> log_norm_path;

    double exponent() const { return log_norm_final / static_cast<double>(n_steps); }
    Eigen::MatrixXd s_final() const { return std::exp(log_norm_final) * s_unit; }
};

/// Co-evolves theta and the sensitivity matrix S_{n+1} = S_n + alpha A_{n+1} S_n
/// with A_{n+1} = d_theta f(theta_n, Phi_{n+1}), S_0 = I. Constant step size
/// only. The matrix is renormalized each step so only its log norm grows.
SensitivityRecord sensitivity_run(const SAProblem& problem, const NoiseChain& chain, double alpha,
                                  const Eigen::VectorXd& theta0, const ChainState& phi0,
                                  std::size_t n_steps, Rng& rng);

// ---------------------------------------------------------------------------
// Mean flow
// ---------------------------------------------------------------------------

/// Classical fixed-step RK4 on d theta/dt = fbar(theta) over [0, T].
/// Returns the path at t = 0, h, 2h, ..., including the endpoint (the final
/// step is shortened if T is not a multiple of h).
std::vector<Eigen::VectorXd> mean_flow_integrate(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fbar, const Eigen::VectorXd& theta0,
    double t_end, double h);

}  // namespace salab
