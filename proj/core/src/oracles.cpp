#include "salab/oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace salab::oracles {

namespace {

/// Shared trace assembly once the model provides fhat(theta, x) and its
/// one-step conditional expectation. States are indexed by position in the
/// recorded trajectory.
template <typename F, typename Fbar, typename Fhat, typename FhatCond>
DecompositionTrace build_trace(const RunRecord& record, double alpha, F&& f, Fbar&& fbar,
                               Fhat&& fhat, FhatCond&& fhat_cond) {
    if (!record.thetas || !record.states)
        throw Error(ErrorKind::Argument, "decomposition needs a trajectory stored with states");
    const auto& thetas = *record.thetas;
    const auto& states = *record.states;
    if (thetas.size() != states.size() || thetas.size() < 2)
        throw Error(ErrorKind::Argument, "trajectory and state paths must align, length >= 2");

    const std::size_t n_steps = thetas.size() - 1;
    DecompositionTrace trace;
    trace.martingale.reserve(n_steps);
    trace.telescoping.reserve(n_steps);
    trace.upsilon.reserve(n_steps);
    trace.residual.reserve(n_steps);

    auto psi = [&](double theta, std::size_t state_idx) {
        // centered forcing: Delta(theta, x) - fhat(theta, x)
        return f(theta, state_idx) - fbar(theta) - fhat(theta, state_idx);
    };

    trace.t0 = -psi(thetas[0][0], 0);
    double t_prev = trace.t0;
    double sum_delta = 0.0, sum_w = 0.0, sum_ups = 0.0, sum_ups_c = 0.0;

    for (std::size_t n = 0; n < n_steps; ++n) {
        const double th = thetas[n][0];
        const double th_next = thetas[n + 1][0];

        const double delta = f(th, n + 1) - fbar(th);
        const double w = fhat(th, n + 1) - fhat_cond(th, n);
        const double t_next = -psi(th_next, n + 1);
        const double ups = (psi(th_next, n + 1) - psi(th, n + 1)) / alpha;
        const double res = delta - (w - t_next + t_prev - alpha * ups);

        trace.martingale.push_back(w);
        trace.telescoping.push_back(t_next);
        trace.upsilon.push_back(ups);
        trace.residual.push_back(res);
        trace.max_abs_residual = std::max(trace.max_abs_residual, std::abs(res));

        sum_delta += delta;
        sum_w += w;
        {
            const double y = ups - sum_ups_c;
            const double t = sum_ups + y;
            sum_ups_c = (t - sum_ups) - y;
            sum_ups = t;
        }
        t_prev = t_next;
    }

    trace.upsilon_mean = sum_ups / static_cast<double>(n_steps);
    trace.telescoped_residual =
        std::abs(sum_delta - (sum_w - trace.telescoping.back() + trace.t0 - alpha * sum_ups));
    return trace;
}

}  // namespace

PoissonSolution solve_poisson_finite(const Eigen::MatrixXd& p, const Eigen::VectorXd& g) {
    if (p.rows() != p.cols() || g.size() != p.rows())
        throw Error(ErrorKind::Argument, "P must be square with g matching its size");

    PoissonSolution sol;
    sol.pi = stationary_dist(p);  // throws Structure on a reducible chain

    const Eigen::Index n = p.rows();
    const Eigen::VectorXd g_tilde = g.array() - sol.pi.dot(g);

    // stacked system [(I - P); pi'] ghat = [g_tilde; 0]
    Eigen::MatrixXd a(n + 1, n);
    a.topRows(n) = Eigen::MatrixXd::Identity(n, n) - p;
    a.bottomRows(1) = sol.pi.transpose();
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = g_tilde;
    rhs[n] = 0.0;

    sol.ghat = a.colPivHouseholderQr().solve(rhs);
    if (!sol.ghat.allFinite())
        throw Error(ErrorKind::Numerical, "augmented Poisson system solve failed");

    sol.residual_inf = ((Eigen::MatrixXd::Identity(n, n) - p) * sol.ghat - g_tilde)
                           .cwiseAbs()
                           .maxCoeff();
    sol.mean_under_pi = sol.pi.dot(sol.ghat);
    return sol;
}

double ar1_poisson(double w, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw Error(ErrorKind::Domain, "beta must be in [0,1)");
    return w / (1.0 - beta);
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma) {
    const Eigen::Index d = a.rows();
    if (a.cols() != d || sigma.rows() != d || sigma.cols() != d)
        throw Error(ErrorKind::Argument, "A and Sigma must be square of equal size");
    if (d > 10) throw Error(ErrorKind::Argument, "dense vectorized solver is limited to d <= 10");

    const Eigen::VectorXcd eig = a.eigenvalues();
    for (Eigen::Index i = 0; i < d; ++i)
        if (!(eig[i].real() < 0.0))
            throw Error(ErrorKind::Spectrum, "A is not Hurwitz");

    // (I (*) A + A (*) I) vec(Z) = -vec(Sigma), column-major vec
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(d * d, d * d);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            k.block(i * d, j * d, d, d) += id(i, j) * a;       // I (*) A
            k.block(i * d, j * d, d, d) += a(i, j) * id;       // A (*) I
        }

    const Eigen::VectorXd vec_sigma = Eigen::Map<const Eigen::VectorXd>(sigma.data(), d * d);
    Eigen::VectorXd vec_z = k.partialPivLu().solve(-vec_sigma);
    if (!vec_z.allFinite()) throw Error(ErrorKind::Numerical, "Lyapunov solve failed");

    Eigen::MatrixXd z = Eigen::Map<Eigen::MatrixXd>(vec_z.data(), d, d);
    return 0.5 * (z + z.transpose());
}

Eigen::MatrixXd sigma_theta_star(const Eigen::MatrixXd& g_star, const Eigen::MatrixXd& sigma_noise) {
    if (g_star.cols() != sigma_noise.rows() || sigma_noise.rows() != sigma_noise.cols())
        throw Error(ErrorKind::Argument, "dimension mismatch");
    const Eigen::MatrixXd s = g_star * sigma_noise * g_star.transpose();
    return 0.5 * (s + s.transpose());
}

Eigen::VectorXd zeta_theta_star(const Eigen::MatrixXd& a_star, const Eigen::VectorXd& upsilon_bar_star) {
    if (a_star.rows() != a_star.cols() || a_star.rows() != upsilon_bar_star.size())
        throw Error(ErrorKind::Argument, "dimension mismatch");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_star);
    if (!lu.isInvertible()) throw Error(ErrorKind::Spectrum, "A* is singular");
    return lu.solve(upsilon_bar_star);
}

DecompositionTrace decompose_disturbance(const models::ScalarLinearModel& model,
                                         const RunRecord& record, double alpha) {
    const double beta = model.beta;
    const double b = model.b;
    const auto& states = record.states;
    if (!states) throw Error(ErrorKind::Argument, "decomposition needs recorded chain states");

    auto w_at = [&](std::size_t idx) { return (*states)[idx].values[0]; };
    // fhat(theta, w) = (w / (1 - beta)) (theta + 1): Poisson solution for the
    // forcing f(theta, .) with E[fhat(theta, W') | W = w] = beta/(1-beta) w (theta+1).
    auto fhat = [&](double theta, std::size_t idx) {
        return w_at(idx) / (1.0 - beta) * (theta + 1.0);
    };
    auto fhat_cond = [&](double theta, std::size_t idx) {
        return beta * w_at(idx) / (1.0 - beta) * (theta + 1.0);
    };
    auto f = [&](double theta, std::size_t idx) { return model.f(theta, w_at(idx)); };
    auto fbar = [&](double theta) { return -theta - b; };

    return build_trace(record, alpha, f, fbar, fhat, fhat_cond);
}

DecompositionTrace decompose_disturbance(const models::FiniteLinearModel& model,
                                         const RunRecord& record, double alpha) {
    const auto& states = record.states;
    if (!states) throw Error(ErrorKind::Argument, "decomposition needs recorded chain states");

    const PoissonSolution a_hat = solve_poisson_finite(model.p, model.a_by_state);
    const PoissonSolution b_hat = solve_poisson_finite(model.p, model.b_by_state);
    const Eigen::VectorXd pa = model.p * a_hat.ghat;
    const Eigen::VectorXd pb = model.p * b_hat.ghat;

    auto idx_at = [&](std::size_t n) {
        const int i = (*states)[n].finite_index;
        if (i < 0) throw Error(ErrorKind::Layout, "recorded states are not finite-chain states");
        return i;
    };
    auto f = [&](double theta, std::size_t n) {
        const int i = idx_at(n);
        return model.a_by_state[i] * theta - model.b_by_state[i];
    };
    auto fbar = [&](double theta) { return model.a_bar * theta - model.b_bar; };
    auto fhat = [&](double theta, std::size_t n) {
        const int i = idx_at(n);
        return a_hat.ghat[i] * theta - b_hat.ghat[i];
    };
    auto fhat_cond = [&](double theta, std::size_t n) {
        const int i = idx_at(n);
        return pa[i] * theta - pb[i];
    };

    return build_trace(record, alpha, f, fbar, fhat, fhat_cond);
}

}  // namespace salab::oracles
