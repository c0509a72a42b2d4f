#include "salab/engine.hpp"

#include <cmath>

namespace salab {

namespace {

constexpr double kDivergenceBound = 1e12;

void check_schedule_params(double scale, double rho) {
    if (!(scale > 0.0)) throw Error(ErrorKind::Domain, "step-size scale must be > 0");
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorKind::Domain, "rho must be in [0,1]");
}

}  // namespace

StepSchedule make_constant(double alpha) {
    if (!(alpha > 0.0)) throw Error(ErrorKind::Domain, "alpha must be > 0");
    return ConstantStep{alpha};
}

StepSchedule make_polynomial(double a, double rho) {
    check_schedule_params(a, rho);
    return PolynomialStep{a, rho};
}

StepSchedule make_clipped(double alpha, double rho) {
    check_schedule_params(alpha, rho);
    return ClippedStep{alpha, rho};
}

double schedule_value(const StepSchedule& schedule, std::size_t n) {
    const double nd = static_cast<double>(n);
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantStep>) return s.alpha;
            if constexpr (std::is_same_v<T, PolynomialStep>) return s.a * std::pow(nd, -s.rho);
            if constexpr (std::is_same_v<T, ClippedStep>) return std::min(s.alpha, std::pow(nd, -s.rho));
        },
        schedule);
}

RunRecord sa_run(const SAProblem& problem, const NoiseChain& chain, const StepSchedule& schedule,
                 const Eigen::VectorXd& theta0, const ChainState& phi0, const SaRunOptions& options,
                 Rng& rng) {
    if (options.n_steps == 0 || options.burn_in >= options.n_steps)
        throw Error(ErrorKind::Argument, "need N > N0 >= 0");
    if (theta0.size() != problem.dim)
        throw Error(ErrorKind::Argument, "theta0 dimension does not match the problem");
    if (!theta0.allFinite()) throw Error(ErrorKind::Argument, "theta0 must be finite");

    const std::size_t n_steps = options.n_steps;
    const std::size_t burn_in = options.burn_in;
    const std::size_t tail = options.tail_window > 0 ? options.tail_window
                                                     : std::max<std::size_t>(1, n_steps / 10);

    RunRecord rec;
    rec.n_steps = n_steps;
    rec.burn_in = burn_in;
    rec.tail_window = tail;

    Eigen::VectorXd theta = theta0;
    ChainState phi = phi0;

    KahanSum pr_sum(problem.dim);
    KahanSum fbar_sum(problem.dim);
    const bool track_bias = static_cast<bool>(problem.fbar);
    const bool track_tail = problem.theta_star.has_value();
    double tail_sq = 0.0;
    double tail_comp = 0.0;

    if (options.record_path) {
        rec.thetas.emplace();
        rec.thetas->reserve(n_steps + 1);
        rec.thetas->push_back(theta);
    }
    if (options.record_states) {
        rec.states.emplace();
        rec.states->reserve(n_steps + 1);
        rec.states->push_back(phi);
    }

    Eigen::VectorXd drift(problem.dim);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        if (track_bias) fbar_sum.add(problem.fbar(theta));

        chain_step_inplace(chain, phi, rng);
        drift = problem.f(theta, phi);
        theta += schedule_value(schedule, k) * drift;

        if (!theta.allFinite())
            throw DivergenceError(k, "non-finite parameter");
        if (theta.squaredNorm() > kDivergenceBound * kDivergenceBound)
            throw DivergenceError(k, "parameter norm exceeded 1e12");

        if (k > burn_in) pr_sum.add(theta);
        if (track_tail && k + tail > n_steps) {
            // Kahan-compensated scalar sum over the trailing window.
            const double y = (theta - *problem.theta_star).squaredNorm() - tail_comp;
            const double t = tail_sq + y;
            tail_comp = (t - tail_sq) - y;
            tail_sq = t;
        }

        if (options.record_path) rec.thetas->push_back(theta);
        if (options.record_states) rec.states->push_back(phi);
    }

    rec.theta_final = theta;
    rec.theta_pr = pr_sum.value() / static_cast<double>(n_steps - burn_in);
    if (track_bias) rec.fbar_sum = fbar_sum.value();
    if (track_tail) rec.tail_sq_err = tail_sq / static_cast<double>(std::min(tail, n_steps));
    return rec;
}

Eigen::VectorXd pr_average(const std::vector<Eigen::VectorXd>& path, std::size_t burn_in) {
    const std::size_t n = path.size();
    if (n == 0 || burn_in >= n) throw Error(ErrorKind::Argument, "need path length N > N0");
    KahanSum sum(path.front().size());
    for (std::size_t k = burn_in + 1; k <= n; ++k) sum.add(path[k - 1]);
    return sum.value() / static_cast<double>(n - burn_in);
}

Eigen::VectorXd empirical_target_bias(const SAProblem& problem, const std::vector<Eigen::VectorXd>& path) {
    if (!problem.fbar) throw Error(ErrorKind::Capability, "problem does not expose fbar");
    if (path.empty()) throw Error(ErrorKind::Argument, "empty path");
    KahanSum sum(problem.dim);
    for (const auto& theta : path) sum.add(problem.fbar(theta));
    return sum.value() / static_cast<double>(path.size());
}

SensitivityRecord sensitivity_run(const SAProblem& problem, const NoiseChain& chain, double alpha,
                                  const Eigen::VectorXd& theta0, const ChainState& phi0,
                                  std::size_t n_steps, Rng& rng) {
    if (!problem.jacobian_f)
        throw Error(ErrorKind::Capability, "problem does not expose the Jacobian of f");
    if (!(alpha > 0.0)) throw Error(ErrorKind::Domain, "alpha must be > 0");
    if (n_steps == 0) throw Error(ErrorKind::Argument, "need at least one step");

    const int d = problem.dim;
    Eigen::VectorXd theta = theta0;
    ChainState phi = phi0;
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(d, d);
    double log_norm = 0.0;

    SensitivityRecord rec;
    rec.n_steps = n_steps;
    rec.log_norm_path.reserve(n_steps);

    Eigen::MatrixXd a(d, d);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        chain_step_inplace(chain, phi, rng);
        a = problem.jacobian_f(theta, phi);
        theta += alpha * problem.f(theta, phi);
        if (!theta.allFinite() || theta.squaredNorm() > kDivergenceBound * kDivergenceBound)
            throw DivergenceError(k, "parameter diverged in sensitivity run");

        s += alpha * (a * s).eval();
        const double norm = s.norm();
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw DivergenceError(k, "sensitivity norm overflow or collapse");
        // keep the matrix at unit Frobenius norm; only the log norm grows
        s /= norm;
        log_norm += std::log(norm);
        rec.log_norm_path.push_back(log_norm);
    }

    rec.s_unit = s;
    rec.log_norm_final = log_norm;
    return rec;
}

std::vector<Eigen::VectorXd> mean_flow_integrate(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fbar, const Eigen::VectorXd& theta0,
    double t_end, double h) {
    if (!(h > 0.0)) throw Error(ErrorKind::Argument, "h must be > 0");
    if (!(t_end >= h)) throw Error(ErrorKind::Argument, "T must be >= h");

    std::vector<Eigen::VectorXd> path;
    path.push_back(theta0);
    Eigen::VectorXd y = theta0;
    double t = 0.0;
    while (t < t_end - 1e-12 * t_end) {
        const double step = std::min(h, t_end - t);
        const Eigen::VectorXd k1 = fbar(y);
        const Eigen::VectorXd k2 = fbar(y + 0.5 * step * k1);
        const Eigen::VectorXd k3 = fbar(y + 0.5 * step * k2);
        const Eigen::VectorXd k4 = fbar(y + step * k3);
        y += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) throw DivergenceError(path.size(), "mean flow state became non-finite");
        t += step;
        path.push_back(y);
    }
    return path;
}

}  // namespace salab
