#pragma once

#include <Eigen/Dense>

#include <limits>

#include "salab/chains.hpp"
#include "salab/engine.hpp"

namespace salab::models {

// ---------------------------------------------------------------------------
// SGD on two non-convex benchmarks with additive exploration
// ---------------------------------------------------------------------------

/// Six-hump camel-back objective on R^2:
/// (4 - 2.1 x^2 + x^4/3) x^2 + x y + (-4 + 4 y^2) y^2.
double camel_objective(const Eigen::Vector2d& theta);
Eigen::Vector2d camel_gradient(const Eigen::Vector2d& theta);

/// Gain matrix diag(1/(1+x^4), 1/(1+y^2)) making the mean field globally
/// Lipschitz.
Eigen::Vector2d camel_gain_diag(const Eigen::Vector2d& theta);

/// Mean field fbar = -G(theta) grad Obj(theta).
Eigen::Vector2d camel_mean_field(const Eigen::Vector2d& theta);

/// Modified Styblinski-Tang objective:
/// 0.5 [x^4 + y^4 + xi (x + y) - 16 ||theta||^2]. The classical benchmark is
/// xi = 5; for large xi the global minimizer is the only stationary point.
double styblinski_objective(const Eigen::Vector2d& theta, double xi);
Eigen::Vector2d styblinski_gradient(const Eigen::Vector2d& theta, double xi);
Eigen::Vector2d styblinski_gain_diag(const Eigen::Vector2d& theta);
Eigen::Vector2d styblinski_mean_field(const Eigen::Vector2d& theta, double xi);

/// The most negative real root of 4 t^3 - 32 t + xi = 0; both coordinates of
/// the Styblinski-Tang minimizer equal this value.
double styblinski_root(double xi);

/// Curvature of the mean field at the minimizer: the mean-field Jacobian there
/// is -styblinski_curvature(xi) * I.
double styblinski_curvature(double xi);

enum class Exploration { Iid, ZigZag };
enum class SgdObjective { CamelBack, StyblinskiMod };

/// SGD with additive probing noise: f(theta, phi) = -G(theta) grad Obj(theta) + Xi(phi).
struct SgdModel {
    SgdObjective objective = SgdObjective::CamelBack;
    double xi = 50.0;  // StyblinskiMod only
    Exploration exploration = Exploration::Iid;
    double sigma_w = 1.0;

    NoiseChain chain() const;
    SAProblem problem() const;

    Eigen::Vector2d mean_field(const Eigen::Vector2d& theta) const;
    double objective_value(const Eigen::Vector2d& theta) const;
};

// ---------------------------------------------------------------------------
// TD(lambda) on the scalar linear-Gaussian chain
// ---------------------------------------------------------------------------

/// TD(lambda) value estimation for X' = F X + W, cost c(x) = x^2, discount
/// gamma, features psi(x) = (x^2, 1). d = 2.
struct TdModel {
    double gamma = 0.7;
    double f_coeff = 0.5;
    double sigma_w = 1.0;
    double lambda = 0.0;

    NoiseChain chain() const;
    SAProblem problem() const;
};

/// TD update direction D * zeta for a state laid out as
/// (X_n, X_{n+1}, zeta_1, zeta_2), with
/// D = -theta' psi(X_n) + c(X_n) + gamma theta' psi(X_{n+1}).
Eigen::Vector2d td_field(const Eigen::Vector2d& theta, double gamma, const ChainState& td_state);

/// Coefficients of the exact quadratic value function J(x) = theta1 x^2 + theta2:
/// theta1 = 1/(1 - gamma F^2),
/// theta2 = sigma_w^2/(1 - F^2) * (1/(1 - gamma) - 1/(1 - gamma F^2)).
Eigen::Vector2d td_true_theta(double gamma, double f_coeff, double sigma_w);

/// Stationary mean update in closed form: fbar(theta) = A theta + c, from the
/// Gaussian moments of the chain and the geometric trace sum. theta* from
/// td_true_theta satisfies A theta* + c = 0 for every lambda.
struct TdStationaryField {
    Eigen::Matrix2d a;
    Eigen::Vector2d c;
};
TdStationaryField td_stationary_field(double gamma, double f_coeff, double sigma_w, double lambda);

// ---------------------------------------------------------------------------
// Scalar linear SA driven by AR(1) noise
// ---------------------------------------------------------------------------

/// f(theta, w) = (-1 + w) theta - b + w with w the AR(1) value, so
/// fbar(theta) = -theta - b, A* = -1 and theta* = -b.
struct ScalarLinearModel {
    double beta = 0.9;
    double b = -10.0;

    double theta_star() const { return -b; }
    double f(double theta, double w) const { return (-1.0 + w) * theta - b + w; }

    NoiseChain chain() const { return Ar1(beta); }
    SAProblem problem() const;
};

/// Closed-form report for the scalar linear model.
struct ScalarLinearOracles {
    double theta_star;
    double sigma_clt_noise;        // (1+beta)/(1-beta)
    double sigma_delta_star;       // (1+theta*)^2 sigma_clt_noise
    double sigma_theta_star;       // optimal PR covariance, equals sigma_delta_star here
    double z_theta_star;           // sigma_delta_star / 2 (A* = -1)
    double upsilon_bar_star;       // -(beta/(1-beta)) (1+theta*)
    double zeta_theta_star;        // (A*)^{-1} upsilon_bar_star
    double bias_first_order_mean;  // theta* + alpha zeta_theta_star (NaN if alpha unset)
};
ScalarLinearOracles scalar_linear_oracles(double beta, double b, double alpha = std::numeric_limits<double>::quiet_NaN());

// ---------------------------------------------------------------------------
// Linear SA on a finite chain: f(theta, i) = a_i theta - b_i (scalar theta)
// ---------------------------------------------------------------------------

/// Exact-arithmetic test bed: every Poisson solve is a finite linear solve.
struct FiniteLinearModel {
    Eigen::MatrixXd p;
    Eigen::VectorXd a_by_state;
    Eigen::VectorXd b_by_state;

    FiniteLinearModel(Eigen::MatrixXd p_, Eigen::VectorXd a_, Eigen::VectorXd b_);

    Eigen::VectorXd pi;  // stationary distribution of p
    double a_bar = 0.0;
    double b_bar = 0.0;

    double theta_star() const { return b_bar / a_bar; }
    NoiseChain chain() const;
    SAProblem problem() const;
};

}  // namespace salab::models
