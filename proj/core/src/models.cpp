#include "salab/models.hpp"

#include <cmath>
#include <numbers>

namespace salab::models {

// --------------------------- six-hump camel-back ---------------------------

double camel_objective(const Eigen::Vector2d& theta) {
    const double x = theta[0], y = theta[1];
    const double x2 = x * x;
    return (4.0 - 2.1 * x2 + x2 * x2 / 3.0) * x2 + x * y + (-4.0 + 4.0 * y * y) * y * y;
}

Eigen::Vector2d camel_gradient(const Eigen::Vector2d& theta) {
    const double x = theta[0], y = theta[1];
    return {8.0 * x - 8.4 * x * x * x + 2.0 * std::pow(x, 5) + y,
            x - 8.0 * y + 16.0 * y * y * y};
}

Eigen::Vector2d camel_gain_diag(const Eigen::Vector2d& theta) {
    return {1.0 / (1.0 + std::pow(theta[0], 4)), 1.0 / (1.0 + theta[1] * theta[1])};
}

Eigen::Vector2d camel_mean_field(const Eigen::Vector2d& theta) {
    return -camel_gain_diag(theta).cwiseProduct(camel_gradient(theta));
}

// ------------------------ modified Styblinski-Tang -------------------------

double styblinski_objective(const Eigen::Vector2d& theta, double xi) {
    const double x = theta[0], y = theta[1];
    return 0.5 * (std::pow(x, 4) + std::pow(y, 4) + xi * (x + y) - 16.0 * (x * x + y * y));
}

Eigen::Vector2d styblinski_gradient(const Eigen::Vector2d& theta, double xi) {
    auto partial = [xi](double t) { return 0.5 * (4.0 * t * t * t + xi - 32.0 * t); };
    return {partial(theta[0]), partial(theta[1])};
}

Eigen::Vector2d styblinski_gain_diag(const Eigen::Vector2d& theta) {
    return {1.0 / (1.0 + theta[0] * theta[0]), 1.0 / (1.0 + theta[1] * theta[1])};
}

Eigen::Vector2d styblinski_mean_field(const Eigen::Vector2d& theta, double xi) {
    return -styblinski_gain_diag(theta).cwiseProduct(styblinski_gradient(theta, xi));
}

double styblinski_root(double xi) {
    // 4 t^3 - 32 t + xi = 0, i.e. the depressed cubic t^3 + p t + q with
    // p = -8, q = xi / 4.
    const double p = -8.0;
    const double q = xi / 4.0;
    const double disc = q * q / 4.0 + p * p * p / 27.0;

    double root;
    if (disc > 0.0) {
        // one real root (Cardano)
        const double s = std::sqrt(disc);
        root = std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s);
    } else {
        // three real roots; k = 0,1,2 enumerates them, take the most negative
        const double r = 2.0 * std::sqrt(-p / 3.0);
        const double phi = std::acos(std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0));
        root = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k)
            root = std::min(root, r * std::cos(phi / 3.0 - 2.0 * std::numbers::pi * k / 3.0));
    }
    // one Newton polish step against the original quartic-derivative form
    const double f = 4.0 * root * root * root - 32.0 * root + xi;
    const double df = 12.0 * root * root - 32.0;
    if (df != 0.0) root -= f / df;
    return root;
}

double styblinski_curvature(double xi) {
    const double t = styblinski_root(xi);
    return (6.0 * t * t - 16.0) / (1.0 + t * t);
}

NoiseChain SgdModel::chain() const {
    if (exploration == Exploration::Iid) return IidGaussian(2, sigma_w);
    return ZigZag(2, sigma_w);
}

Eigen::Vector2d SgdModel::mean_field(const Eigen::Vector2d& theta) const {
    return objective == SgdObjective::CamelBack ? camel_mean_field(theta)
                                                : styblinski_mean_field(theta, xi);
}

double SgdModel::objective_value(const Eigen::Vector2d& theta) const {
    return objective == SgdObjective::CamelBack ? camel_objective(theta)
                                                : styblinski_objective(theta, xi);
}

SAProblem SgdModel::problem() const {
    SAProblem prob;
    prob.dim = 2;
    const SgdModel model = *this;
    const bool zigzag = exploration == Exploration::ZigZag;
    prob.f = [model, zigzag](const Eigen::VectorXd& theta, const ChainState& phi) -> Eigen::VectorXd {
        Eigen::Vector2d xi_val;
        if (zigzag)
            xi_val = (phi.values.tail(2) - phi.values.head(2)) / std::numbers::sqrt2;
        else
            xi_val = phi.values.head(2);
        return model.mean_field(theta.head<2>()) + xi_val;
    };
    prob.fbar = [model](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        return model.mean_field(theta.head<2>());
    };
    prob.additive_noise = true;
    if (objective == SgdObjective::StyblinskiMod) {
        const double t = styblinski_root(xi);
        prob.theta_star = Eigen::Vector2d(t, t);
        prob.astar = (-styblinski_curvature(xi) * Eigen::Matrix2d::Identity()).eval();
    }
    return prob;
}

// --------------------------------- TD(lambda) ------------------------------

Eigen::Vector2d td_field(const Eigen::Vector2d& theta, double gamma, const ChainState& td_state) {
    if (td_state.values.size() != 4)
        throw Error(ErrorKind::Layout, "TD state must be (X_n, X_{n+1}, zeta)");
    const double x_cur = td_state.values[0];
    const double x_next = td_state.values[1];
    const Eigen::Vector2d zeta = td_state.values.segment<2>(2);
    const double d = -theta.dot(td_features(x_cur)) + x_cur * x_cur +
                     gamma * theta.dot(td_features(x_next));
    return d * zeta;
}

Eigen::Vector2d td_true_theta(double gamma, double f_coeff, double sigma_w) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorKind::Domain, "gamma must be in [0,1)");
    if (!(std::abs(f_coeff) < 1.0)) throw Error(ErrorKind::Domain, "|F| must be < 1");
    const double theta1 = 1.0 / (1.0 - gamma * f_coeff * f_coeff);
    const double theta2 =
        sigma_w * sigma_w / (1.0 - f_coeff * f_coeff) * (1.0 / (1.0 - gamma) - theta1);
    return {theta1, theta2};
}

TdStationaryField td_stationary_field(double gamma, double f_coeff, double sigma_w, double lambda) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorKind::Domain, "gamma must be in [0,1)");
    if (!(std::abs(f_coeff) < 1.0)) throw Error(ErrorKind::Domain, "|F| must be < 1");
    if (!(lambda >= 0.0 && lambda <= 1.0 && gamma * lambda < 1.0))
        throw Error(ErrorKind::Domain, "need lambda in [0,1] with gamma*lambda < 1");

    // Gaussian stationary moments: sig2 = Var X, E[X_a^2 X_b^2] = sig2^2 (1 + 2 F^{2|a-b|}).
    const double f2 = f_coeff * f_coeff;
    const double sig2 = sigma_w * sigma_w / (1.0 - f2);
    const double sig4 = sig2 * sig2;
    const double lg = lambda * gamma;

    Eigen::Matrix2d m_inf;
    m_inf << sig4, sig2, sig2, 1.0;

    // A = sum_k (lg)^k [gamma M(k+1) - M(k)] with M(d) = M_inf + 2 sig4 F^{2d} E11.
    Eigen::Matrix2d a = (gamma - 1.0) / (1.0 - lg) * m_inf;
    a(0, 0) += 2.0 * sig4 * (gamma * f2 - 1.0) / (1.0 - lg * f2);

    // c = sum_k (lg)^k E[psi(X_{n-k}) c(X_n)].
    Eigen::Vector2d c;
    c[0] = sig4 / (1.0 - lg) + 2.0 * sig4 / (1.0 - lg * f2);
    c[1] = sig2 / (1.0 - lg);

    return {a, c};
}

NoiseChain TdModel::chain() const { return TdState(f_coeff, sigma_w, gamma, lambda); }

SAProblem TdModel::problem() const {
    SAProblem prob;
    prob.dim = 2;
    const double g = gamma;
    prob.f = [g](const Eigen::VectorXd& theta, const ChainState& phi) -> Eigen::VectorXd {
        return td_field(theta.head<2>(), g, phi);
    };
    const TdStationaryField field = td_stationary_field(gamma, f_coeff, sigma_w, lambda);
    prob.fbar = [field](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        return field.a * theta.head<2>() + field.c;
    };
    prob.jacobian_f = [g](const Eigen::VectorXd&, const ChainState& phi) -> Eigen::MatrixXd {
        const Eigen::Vector2d zeta = phi.values.segment<2>(2);
        const Eigen::Vector2d row =
            -td_features(phi.values[0]) + g * td_features(phi.values[1]);
        return zeta * row.transpose();
    };
    prob.theta_star = td_true_theta(gamma, f_coeff, sigma_w);
    prob.astar = field.a;
    return prob;
}

// ----------------------------- scalar linear SA ----------------------------

SAProblem ScalarLinearModel::problem() const {
    SAProblem prob;
    prob.dim = 1;
    const double b_coeff = b;
    prob.f = [b_coeff](const Eigen::VectorXd& theta, const ChainState& phi) -> Eigen::VectorXd {
        const double w = phi.values[0];
        return Eigen::VectorXd::Constant(1, (-1.0 + w) * theta[0] - b_coeff + w);
    };
    prob.fbar = [b_coeff](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        return Eigen::VectorXd::Constant(1, -theta[0] - b_coeff);
    };
    prob.jacobian_f = [](const Eigen::VectorXd&, const ChainState& phi) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Constant(1, 1, -1.0 + phi.values[0]);
    };
    prob.theta_star = Eigen::VectorXd::Constant(1, theta_star());
    prob.astar = Eigen::MatrixXd::Constant(1, 1, -1.0);
    return prob;
}

ScalarLinearOracles scalar_linear_oracles(double beta, double b, double alpha) {
    if (!(beta >= 0.0 && beta < 1.0)) throw Error(ErrorKind::Domain, "beta must be in [0,1)");
    ScalarLinearOracles rep;
    rep.theta_star = -b;
    rep.sigma_clt_noise = ar1_clt_variance(beta);
    const double gain = 1.0 + rep.theta_star;
    rep.sigma_delta_star = gain * gain * rep.sigma_clt_noise;
    rep.sigma_theta_star = rep.sigma_delta_star;  // G* = -(A*)^{-1} = 1
    rep.z_theta_star = rep.sigma_delta_star / 2.0;
    rep.upsilon_bar_star = -beta / (1.0 - beta) * gain;
    rep.zeta_theta_star = -rep.upsilon_bar_star;  // solves A* zeta = upsilon with A* = -1
    rep.bias_first_order_mean = rep.theta_star + alpha * rep.zeta_theta_star;
    return rep;
}

// --------------------------- finite-chain linear SA -------------------------

FiniteLinearModel::FiniteLinearModel(Eigen::MatrixXd p_, Eigen::VectorXd a_, Eigen::VectorXd b_)
    : p(std::move(p_)), a_by_state(std::move(a_)), b_by_state(std::move(b_)) {
    if (a_by_state.size() != p.rows() || b_by_state.size() != p.rows())
        throw Error(ErrorKind::Argument, "per-state coefficient lengths must match P");
    pi = stationary_dist(p);
    a_bar = pi.dot(a_by_state);
    b_bar = pi.dot(b_by_state);
}

NoiseChain FiniteLinearModel::chain() const { return Finite(p, a_by_state); }

SAProblem FiniteLinearModel::problem() const {
    SAProblem prob;
    prob.dim = 1;
    const Eigen::VectorXd a_tab = a_by_state;
    const Eigen::VectorXd b_tab = b_by_state;
    prob.f = [a_tab, b_tab](const Eigen::VectorXd& theta, const ChainState& phi) -> Eigen::VectorXd {
        const int i = phi.finite_index;
        return Eigen::VectorXd::Constant(1, a_tab[i] * theta[0] - b_tab[i]);
    };
    const double ab = a_bar, bb = b_bar;
    prob.fbar = [ab, bb](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        return Eigen::VectorXd::Constant(1, ab * theta[0] - bb);
    };
    prob.jacobian_f = [a_tab](const Eigen::VectorXd&, const ChainState& phi) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Constant(1, 1, a_tab[phi.finite_index]);
    };
    if (a_bar != 0.0) {
        prob.theta_star = Eigen::VectorXd::Constant(1, theta_star());
        prob.astar = Eigen::MatrixXd::Constant(1, 1, a_bar);
    }
    prob.additive_noise = (a_by_state.array() == a_by_state[0]).all();
    return prob;
}

}  // namespace salab::models
