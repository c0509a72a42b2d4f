#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "salab/chains.hpp"
#include "salab/engine.hpp"
#include "salab/models.hpp"

namespace salab::oracles {

// ---------------------------------------------------------------------------
// Poisson's equation
// ---------------------------------------------------------------------------

/// Zero-mean solution of (I - P) ghat = g - pi(g) on a finite chain.
struct PoissonSolution {
    Eigen::VectorXd ghat;
    Eigen::VectorXd pi;
    double residual_inf = 0.0;   // max |(I-P) ghat - (g - pi(g))|
    double mean_under_pi = 0.0;  // pi(ghat), enforced to 0
};

/// Solves Poisson's equation on an irreducible finite chain by the linear
/// system augmented with the normalization row pi(ghat) = 0.
PoissonSolution solve_poisson_finite(const Eigen::MatrixXd& p, const Eigen::VectorXd& g);

/// Poisson solution for the standardized AR(1) chain: what = w / (1 - beta).
double ar1_poisson(double w, double beta);

// ---------------------------------------------------------------------------
// Lyapunov equation and asymptotic covariance
// ---------------------------------------------------------------------------

/// Unique PSD solution Z of A Z + Z A' + Sigma = 0 for Hurwitz A, via the
/// d^2 x d^2 vectorized system (intended for d <= 10).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma);

/// Optimal PR covariance G* Sigma G*', symmetrized.
Eigen::MatrixXd sigma_theta_star(const Eigen::MatrixXd& g_star, const Eigen::MatrixXd& sigma_noise);

/// Solves A* zeta = upsilon_bar_star; the first-order parameter bias is
/// alpha * zeta.
Eigen::VectorXd zeta_theta_star(const Eigen::MatrixXd& a_star, const Eigen::VectorXd& upsilon_bar_star);

// ---------------------------------------------------------------------------
// Disturbance decomposition
// ---------------------------------------------------------------------------

/// Per-step decomposition of the disturbance
///     Delta_{n+1} = f(theta_n, Phi_{n+1}) - fbar(theta_n)
/// into a martingale difference, a telescoping term, and a step-size-scaled
/// term:
///     Delta_{n+1} = W_{n+1} - T_{n+1} + T_n - alpha * Upsilon_{n+1},
/// where, with psi(theta, x) = Delta(theta, x) - fhat(theta, x) and fhat the
/// Poisson solution for the forcing f(theta, .) at frozen theta,
///     W_{n+1} = fhat(theta_n, Phi_{n+1}) - E[fhat(theta_n, Phi_{n+1}) | Phi_n]
///     T_n     = -psi(theta_n, Phi_n)
///     Upsilon_{n+1} = (1/alpha) [psi(theta_{n+1}, Phi_{n+1}) - psi(theta_n, Phi_{n+1})].
/// Using the centered forcing Delta in psi makes Upsilon vanish identically
/// for additive noise; the identity above then holds exactly per step.
struct DecompositionTrace {
    std::vector<double> martingale;   // W_{n+1}
    std::vector<double> telescoping;  // T_{n+1} (T_0 stored separately)
    std::vector<double> upsilon;      // Upsilon_{n+1}
    std::vector<double> residual;     // identity residual per step
    double t0 = 0.0;

    double max_abs_residual = 0.0;
    double upsilon_mean = 0.0;  // trajectory average, estimates Upsilon_bar_alpha

    /// |sum Delta - (sum W - T_N + T_0 - alpha sum Upsilon)|.
    double telescoped_residual = 0.0;
};

/// Scalar linear model driven by AR(1) noise: closed-form fhat and conditional
/// expectations. The record must carry the stored path and chain states.
DecompositionTrace decompose_disturbance(const models::ScalarLinearModel& model,
                                         const RunRecord& record, double alpha);

/// Linear SA on a finite chain: fhat from finite Poisson solves, conditional
/// expectations from the transition matrix rows.
DecompositionTrace decompose_disturbance(const models::FiniteLinearModel& model,
                                         const RunRecord& record, double alpha);

// ---------------------------------------------------------------------------
// Closed-form report
// ---------------------------------------------------------------------------

/// Collected closed-form quantities for one model; fields absent where no
/// closed form is in scope.
struct OracleReport {
    std::optional<Eigen::VectorXd> theta_star;
    std::optional<Eigen::MatrixXd> astar;
    std::optional<Eigen::MatrixXd> sigma_clt_noise;
    std::optional<Eigen::MatrixXd> sigma_theta_star;
    std::optional<Eigen::MatrixXd> z_theta_star;
    std::optional<Eigen::VectorXd> upsilon_bar_star;
    std::optional<Eigen::VectorXd> zeta_theta_star;
    std::optional<Eigen::VectorXd> bias_first_order;  // theta* + alpha zeta
};

}  // namespace salab::oracles
