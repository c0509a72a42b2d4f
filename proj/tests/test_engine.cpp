#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "salab/analysis.hpp"
#include "salab/engine.hpp"
#include "salab/models.hpp"

using namespace salab;

namespace {

/// Problem with f(theta, .) = fbar(theta), ignoring the chain.
SAProblem deterministic_problem(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fbar, int dim) {
    SAProblem prob;
    prob.dim = dim;
    prob.fbar = fbar;
    prob.f = [fbar](const Eigen::VectorXd& theta, const ChainState&) { return fbar(theta); };
    return prob;
}

ChainState ar1_state(double v) {
    ChainState s;
    s.values = Eigen::VectorXd::Constant(1, v);
    return s;
}

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("schedule_value") {
    CHECK(schedule_value(make_constant(0.02), 1) == 0.02);
    CHECK(schedule_value(make_constant(0.02), 12345) == 0.02);
    CHECK(schedule_value(make_polynomial(1.0, 0.8), 32) == doctest::Approx(0.0625).epsilon(1e-14));
    CHECK(schedule_value(make_clipped(0.01, 0.8), 2) == 0.01);
    CHECK(schedule_value(make_clipped(0.01, 0.8), 1000000) ==
          doctest::Approx(std::pow(1e6, -0.8)).epsilon(1e-14));
    CHECK_THROWS_AS(make_constant(-0.1), Error);
    CHECK_THROWS_AS(make_polynomial(1.0, 1.5), Error);
}

TEST_CASE("one Euler step of f = -theta") {
    const auto prob = deterministic_problem(
        [](const Eigen::VectorXd& th) -> Eigen::VectorXd { return -th; }, 1);
    Rng rng(1);
    SaRunOptions opts;
    opts.n_steps = 1;
    const RunRecord rec =
        sa_run(prob, Ar1(0.5), make_constant(0.1), scalar(1.0), ar1_state(0.0), opts, rng);
    CHECK(rec.theta_final[0] == 0.9);
    CHECK(rec.theta_pr[0] == 0.9);
}

TEST_CASE("PR average of a constant path is the constant") {
    const auto prob = deterministic_problem(
        [](const Eigen::VectorXd& th) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(th.size()); }, 1);
    Rng rng(1);
    SaRunOptions opts;
    opts.n_steps = 100;
    const RunRecord rec =
        sa_run(prob, Ar1(0.5), make_constant(0.1), scalar(3.25), ar1_state(0.0), opts, rng);
    CHECK(rec.theta_pr[0] == 3.25);
}

TEST_CASE("pr_average") {
    std::vector<Eigen::VectorXd> path;
    for (double v : {1.0, 2.0, 3.0, 4.0, 5.0}) path.push_back(scalar(v));
    CHECK(pr_average(path, 2)[0] == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(pr_average(path, 0)[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK_THROWS_AS(pr_average(path, 5), Error);

    SUBCASE("bitwise equal to the streaming accumulator in sa_run") {
        models::ScalarLinearModel model;
        Rng rng(7);
        SaRunOptions opts;
        opts.n_steps = 10000;
        opts.burn_in = 2000;
        opts.record_path = true;
        const RunRecord rec = sa_run(model.problem(), model.chain(), make_constant(0.01),
                                     scalar(0.0), ar1_state(0.3), opts, rng);
        std::vector<Eigen::VectorXd> from_theta1(rec.thetas->begin() + 1, rec.thetas->end());
        const Eigen::VectorXd two_pass = pr_average(from_theta1, opts.burn_in);
        CHECK(two_pass[0] == rec.theta_pr[0]);  // identical adds in identical order
    }

    SUBCASE("linearity at machine precision") {
        Rng rng(13);
        std::vector<Eigen::VectorXd> p1, p2, combo;
        const double a = 1.7, b = -0.4;
        for (int i = 0; i < 200; ++i) {
            p1.push_back(scalar(rng.normal()));
            p2.push_back(scalar(rng.normal()));
            combo.push_back(a * p1.back() + b * p2.back());
        }
        const double lhs = pr_average(combo, 50)[0];
        const double rhs = a * pr_average(p1, 50)[0] + b * pr_average(p2, 50)[0];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("empirical_target_bias") {
    models::ScalarLinearModel model;
    const SAProblem prob = model.problem();
    SUBCASE("path at theta* gives zero") {
        std::vector<Eigen::VectorXd> path(10, scalar(model.theta_star()));
        CHECK(empirical_target_bias(prob, path)[0] == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("two-point path is the arithmetic mean of fbar") {
        std::vector<Eigen::VectorXd> path = {scalar(2.0), scalar(6.0)};
        // fbar(theta) = -theta + 10 here
        CHECK(empirical_target_bias(prob, path)[0] == doctest::Approx(0.5 * (8.0 + 4.0)).epsilon(1e-14));
    }
    SUBCASE("missing fbar is a capability error") {
        SAProblem no_fbar = prob;
        no_fbar.fbar = nullptr;
        std::vector<Eigen::VectorXd> path = {scalar(0.0)};
        try {
            empirical_target_bias(no_fbar, path);
            CHECK(false);
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::Capability);
        }
    }
    SUBCASE("vanishes with N on an additive-noise run") {
        models::SgdModel sgd{models::SgdObjective::StyblinskiMod, 50.0, models::Exploration::Iid, 1.0};
        const SAProblem prob2 = sgd.problem();
        const NoiseChain chain = sgd.chain();
        double norm_small = 0.0, norm_large = 0.0;
        for (const std::size_t n : {std::size_t{1000}, std::size_t{100000}}) {
            Rng rng(51);
            SaRunOptions opts;
            opts.n_steps = n;
            const ChainState phi0 = stationary_sample(chain, rng);
            const RunRecord rec = sa_run(prob2, chain, make_constant(0.1),
                                         Eigen::Vector2d(0.0, 0.0), phi0, opts, rng);
            const double norm = (*rec.fbar_sum / static_cast<double>(n)).norm();
            (n == 1000 ? norm_small : norm_large) = norm;
        }
        CHECK(norm_large < norm_small);
        CHECK(norm_large < 0.02);
    }
}

TEST_CASE("determinism: identical (config, seed) gives identical records") {
    models::ScalarLinearModel model;
    SaRunOptions opts;
    opts.n_steps = 5000;
    opts.burn_in = 1000;
    RunRecord a, b;
    for (RunRecord* out : {&a, &b}) {
        Rng rng(12345);
        const ChainState phi0 = stationary_sample(model.chain(), rng);
        *out = sa_run(model.problem(), model.chain(), make_constant(0.0028), scalar(1.0), phi0,
                      opts, rng);
    }
    CHECK(a.theta_final[0] == b.theta_final[0]);
    CHECK(a.theta_pr[0] == b.theta_pr[0]);
    CHECK((*a.fbar_sum)[0] == (*b.fbar_sum)[0]);
    CHECK(*a.tail_sq_err == *b.tail_sq_err);
}

TEST_CASE("polynomial schedule at rho = 0 agrees with the constant schedule step for step") {
    models::ScalarLinearModel model;
    SaRunOptions opts;
    opts.n_steps = 2000;
    opts.record_path = true;
    RunRecord constant_run, poly_run;
    for (auto [schedule, out] :
         {std::pair{make_constant(0.005), &constant_run}, {make_polynomial(0.005, 0.0), &poly_run}}) {
        Rng rng(77);
        const ChainState phi0 = stationary_sample(model.chain(), rng);
        *out = sa_run(model.problem(), model.chain(), schedule, scalar(2.0), phi0, opts, rng);
    }
    for (std::size_t i = 0; i < constant_run.thetas->size(); ++i)
        REQUIRE((*constant_run.thetas)[i][0] == (*poly_run.thetas)[i][0]);
}

TEST_CASE("zero-noise sa_run is the Euler scheme for the mean flow") {
    // scalar fbar(theta) = -(theta - 10); endpoint gap vs RK4 halves with alpha
    const auto fbar = [](const Eigen::VectorXd& th) -> Eigen::VectorXd {
        return -(th.array() - 10.0).matrix();
    };
    const auto prob = deterministic_problem(fbar, 1);
    const double t_end = 1.0;
    const auto flow = mean_flow_integrate(fbar, scalar(0.0), t_end, 1e-4);
    const double reference = flow.back()[0];

    auto euler_gap = [&](double alpha) {
        Rng rng(1);
        SaRunOptions opts;
        opts.n_steps = static_cast<std::size_t>(t_end / alpha);
        const RunRecord rec =
            sa_run(prob, Ar1(0.5), make_constant(alpha), scalar(0.0), ar1_state(0.0), opts, rng);
        return std::abs(rec.theta_final[0] - reference);
    };
    const double gap_coarse = euler_gap(0.01);
    const double gap_fine = euler_gap(0.005);
    CHECK(gap_coarse / gap_fine >= 1.8);
}

TEST_CASE("divergence guard reports the step index") {
    const auto prob = deterministic_problem(
        [](const Eigen::VectorXd& th) -> Eigen::VectorXd { return 2.0 * th; }, 1);
    Rng rng(1);
    SaRunOptions opts;
    opts.n_steps = 10000;
    try {
        sa_run(prob, Ar1(0.5), make_constant(1.0), scalar(1.0), ar1_state(0.0), opts, rng);
        CHECK(false);
    } catch (const DivergenceError& err) {
        CHECK(err.step() > 10);
        CHECK(err.step() < 60);  // theta triples per step, 3^k > 1e12 near k = 26
    }
}

TEST_CASE("argument errors") {
    models::ScalarLinearModel model;
    Rng rng(1);
    SaRunOptions opts;
    opts.n_steps = 10;
    opts.burn_in = 10;
    CHECK_THROWS_AS(sa_run(model.problem(), model.chain(), make_constant(0.01), scalar(0.0),
                           ar1_state(0.0), opts, rng),
                    Error);
}

TEST_CASE("sensitivity_run") {
    SUBCASE("deterministic A = -1 gives S_n = 0.9^n at alpha = 0.1") {
        SAProblem prob;
        prob.dim = 1;
        prob.f = [](const Eigen::VectorXd&, const ChainState&) { return scalar(0.0); };
        prob.jacobian_f = [](const Eigen::VectorXd&, const ChainState&) {
            return Eigen::MatrixXd::Constant(1, 1, -1.0);
        };
        Rng rng(1);
        const auto rec = sensitivity_run(prob, Ar1(0.5), 0.1, scalar(0.0), ar1_state(0.0), 500, rng);
        CHECK(rec.exponent() == doctest::Approx(std::log(0.9)).epsilon(1e-12));
        CHECK(rec.log_norm_path[9] == doctest::Approx(10.0 * std::log(0.9)).epsilon(1e-12));
        CHECK(rec.s_final()(0, 0) == doctest::Approx(std::pow(0.9, 500)).epsilon(1e-9));
    }
    SUBCASE("A = 0 leaves S at the identity") {
        SAProblem prob;
        prob.dim = 2;
        prob.f = [](const Eigen::VectorXd&, const ChainState&) { return Eigen::VectorXd::Zero(2); };
        prob.jacobian_f = [](const Eigen::VectorXd&, const ChainState&) {
            return Eigen::MatrixXd::Zero(2, 2);
        };
        Rng rng(1);
        const auto rec =
            sensitivity_run(prob, Ar1(0.5), 0.1, Eigen::VectorXd::Zero(2), ar1_state(0.0), 100, rng);
        CHECK(rec.log_norm_final == doctest::Approx(std::log(std::numbers::sqrt2)).epsilon(1e-12));
        CHECK((rec.s_final() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    }
    SUBCASE("missing Jacobian is a capability error") {
        models::ScalarLinearModel model;
        SAProblem prob = model.problem();
        prob.jacobian_f = nullptr;
        Rng rng(1);
        try {
            sensitivity_run(prob, model.chain(), 0.01, scalar(0.0), ar1_state(0.0), 10, rng);
            CHECK(false);
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::Capability);
        }
    }
    SUBCASE("scalar linear exponent is negative and matches the log-moment oracle") {
        models::ScalarLinearModel model;
        const double alpha = 0.01;
        Rng rng(61);
        const ChainState phi0 = stationary_sample(model.chain(), rng);
        const std::size_t n = 200000;
        const auto rec =
            sensitivity_run(model.problem(), model.chain(), alpha, scalar(0.0), phi0, n, rng);
        CHECK(rec.exponent() <= -alpha / 2.0);

        // oracle: E[log|1 + alpha(-1 + W)|] over the stationary N(0,1) law
        Rng orng(62);
        const int mc = 400000;
        double mean = 0.0, sq = 0.0;
        for (int i = 0; i < mc; ++i) {
            const double v = std::log(std::abs(1.0 + alpha * (-1.0 + orng.normal())));
            mean += v;
            sq += v * v;
        }
        mean /= mc;
        const double var = sq / mc - mean * mean;
        // the path summands are beta-correlated; widen by the AR(1) factor
        const double se_path = std::sqrt(var / static_cast<double>(n) * 19.0);
        const double se_mc = std::sqrt(var / mc);
        const double se = std::sqrt(se_path * se_path + se_mc * se_mc);
        CHECK(std::abs(rec.exponent() - mean) < 3.0 * se);
    }
}

TEST_CASE("mean_flow_integrate") {
    SUBCASE("exponential decay") {
        const auto path = mean_flow_integrate(
            [](const Eigen::VectorXd& th) -> Eigen::VectorXd { return -th; }, scalar(1.0), 1.0, 0.01);
        CHECK(path.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    }
    SUBCASE("zero field keeps the path constant") {
        const auto path = mean_flow_integrate(
            [](const Eigen::VectorXd& th) -> Eigen::VectorXd {
                return Eigen::VectorXd::Zero(th.size());
            },
            scalar(4.2), 2.0, 0.1);
        for (const auto& p : path) CHECK(p[0] == 4.2);
    }
    SUBCASE("modified Styblinski-Tang flow reaches the cubic root") {
        // bisection oracle for the most negative root of 4t^3 - 32t + 50 = 0
        auto cubic = [](double t) { return 4.0 * t * t * t - 32.0 * t + 50.0; };
        double lo = -4.0, hi = -3.0;
        REQUIRE(cubic(lo) < 0.0);
        REQUIRE(cubic(hi) > 0.0);
        for (int i = 0; i < 100; ++i) {
            const double mid = 0.5 * (lo + hi);
            (cubic(mid) < 0.0 ? lo : hi) = mid;
        }
        const double root = 0.5 * (lo + hi);

        const auto path = mean_flow_integrate(
            [](const Eigen::VectorXd& th) -> Eigen::VectorXd {
                return models::styblinski_mean_field(th.head<2>(), 50.0);
            },
            Eigen::Vector2d(0.0, 0.0), 10.0, 0.01);
        CHECK((path.back() - Eigen::Vector2d(root, root)).norm() < 1e-3);
    }
}
