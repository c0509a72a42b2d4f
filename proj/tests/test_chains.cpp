#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "salab/chains.hpp"

using namespace salab;

namespace {

ChainState scalar_state(double v) {
    ChainState s;
    s.values = Eigen::VectorXd::Constant(1, v);
    return s;
}

Eigen::MatrixXd flip_chain() {
    Eigen::MatrixXd p(2, 2);
    p << 0, 1, 1, 0;
    return p;
}

Eigen::MatrixXd random_stochastic(int n, Rng& rng) {
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            p(i, j) = 0.05 + rng.uniform01();
            row_sum += p(i, j);
        }
        p.row(i) /= row_sum;
    }
    return p;
}

}  // namespace

TEST_CASE("Ar1 step applies w' = beta w + sqrt(1-beta^2) xi") {
    SUBCASE("beta = 0 degenerates to i.i.d.") {
        const NoiseChain chain = Ar1(0.0);
        Rng rng(5), probe(5);
        const double xi = probe.normal();
        const ChainState next = chain_step(chain, scalar_state(5.0), rng);
        CHECK(next.values[0] == doctest::Approx(xi).epsilon(1e-15));
    }
    SUBCASE("beta = 0.9 from w = 0 scales the draw by sqrt(0.19)") {
        const NoiseChain chain = Ar1(0.9);
        Rng rng(5), probe(5);
        const double xi = probe.normal();
        const ChainState next = chain_step(chain, scalar_state(0.0), rng);
        CHECK(next.values[0] == doctest::Approx(std::sqrt(0.19) * xi).epsilon(1e-14));
        // the coefficient itself: sqrt(1 - 0.9^2) = 0.43589...
        CHECK(std::sqrt(1.0 - 0.81) == doctest::Approx(0.43589).epsilon(1e-4));
    }
    SUBCASE("general step matches the recursion") {
        const NoiseChain chain = Ar1(0.7);
        Rng rng(9), probe(9);
        const double xi = probe.normal();
        const ChainState next = chain_step(chain, scalar_state(2.5), rng);
        CHECK(next.values[0] ==
              doctest::Approx(0.7 * 2.5 + std::sqrt(1.0 - 0.49) * xi).epsilon(1e-14));
    }
}

TEST_CASE("TD chain advances X' = F X + W and keeps the trace aligned with the source state") {
    const NoiseChain chain = TdState(0.5, 1.0, 0.7, 0.0);
    Rng rng(3);
    ChainState s = stationary_sample(chain, rng);
    for (int i = 0; i < 20; ++i) {
        const double x_cur = s.values[1];
        Rng probe = rng;
        const double w = probe.normal();
        const ChainState next = chain_step(chain, s, rng);
        CHECK(next.values[0] == x_cur);
        CHECK(next.values[1] == doctest::Approx(0.5 * x_cur + w).epsilon(1e-14));
        // lambda = 0: the trace equals psi at the source state of the step
        CHECK(next.values[2] == doctest::Approx(x_cur * x_cur).epsilon(1e-14));
        CHECK(next.values[3] == 1.0);
        s = next;
    }
}

TEST_CASE("TD chain trace discounting for lambda > 0") {
    const NoiseChain chain = TdState(0.5, 1.0, 0.7, 0.4);
    Rng rng(31);
    ChainState s = stationary_sample(chain, rng);
    for (int i = 0; i < 10; ++i) {
        const Eigen::Vector2d zeta = s.values.segment<2>(2);
        const double x_cur = s.values[1];
        const ChainState next = chain_step(chain, s, rng);
        const Eigen::Vector2d expected = 0.4 * 0.7 * zeta + td_features(x_cur);
        CHECK((next.values.segment<2>(2) - expected).norm() == doctest::Approx(0.0).epsilon(1e-14));
        s = next;
    }
}

TEST_CASE("chain_step replays bit-for-bit from the same seed") {
    const std::vector<NoiseChain> chains = {IidGaussian(2, 1.5), ZigZag(2, 1.0), Ar1(0.8),
                                            LinearGauss(0.5, 1.0), TdState(0.5, 1.0, 0.7, 0.3),
                                            Finite(flip_chain(), Eigen::Vector2d(1.0, -1.0))};
    for (const auto& chain : chains) {
        Rng rng_a(99), rng_b(99);
        ChainState a = stationary_sample(chain, rng_a);
        ChainState b = stationary_sample(chain, rng_b);
        for (int i = 0; i < 200; ++i) {
            chain_step_inplace(chain, a, rng_a);
            chain_step_inplace(chain, b, rng_b);
            REQUIRE(a.values == b.values);
            REQUIRE(a.finite_index == b.finite_index);
        }
    }
}

TEST_CASE("stationary samples have the documented marginals") {
    SUBCASE("Ar1 stationary variance is unity for any beta") {
        for (double beta : {0.0, 0.5, 0.95}) {
            const NoiseChain chain = Ar1(beta);
            Rng rng(17);
            const int n = 100000;
            double sum_sq = 0.0;
            for (int i = 0; i < n; ++i) {
                const ChainState s = stationary_sample(chain, rng);
                sum_sq += s.values[0] * s.values[0];
            }
            CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.02));
        }
    }
    SUBCASE("IidGaussian variance is sigma_w^2") {
        const NoiseChain chain = IidGaussian(1, 2.0);
        Rng rng(19);
        const int n = 100000;
        double sum_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const ChainState s = stationary_sample(chain, rng);
            sum_sq += s.values[0] * s.values[0];
        }
        CHECK(sum_sq / n == doctest::Approx(4.0).epsilon(0.02));
    }
    SUBCASE("flip chain visits both states with frequency 1/2") {
        const NoiseChain chain = Finite(flip_chain(), Eigen::Vector2d(1.0, -1.0));
        Rng rng(23);
        const int n = 100000;
        int count0 = 0;
        for (int i = 0; i < n; ++i)
            if (stationary_sample(chain, rng).finite_index == 0) ++count0;
        CHECK(static_cast<double>(count0) / n == doctest::Approx(0.5).epsilon(0.02));
    }
}

TEST_CASE("Ar1 lag-k autocovariance matches beta^k") {
    const double beta = 0.8;
    const NoiseChain chain = Ar1(beta);
    Rng rng(29);
    ChainState s = stationary_sample(chain, rng);
    const int n = 1000000;
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        chain_step_inplace(chain, s, rng);
        w[static_cast<std::size_t>(i)] = s.values[0];
    }
    for (int k : {1, 2, 3}) {
        // products w_i w_{i+k} have mean beta^k; standard error from the
        // sample variance of the products, inflated for serial correlation by
        // the worst-case AR factor (1+beta)/(1-beta)
        double mean = 0.0;
        for (int i = 0; i + k < n; ++i) mean += w[i] * w[i + k];
        const int m = n - k;
        mean /= m;
        double var = 0.0;
        for (int i = 0; i + k < n; ++i) {
            const double c = w[i] * w[i + k] - mean;
            var += c * c;
        }
        var /= (m - 1);
        const double se = std::sqrt(var / m * (1.0 + beta) / (1.0 - beta));
        CHECK(std::abs(mean - std::pow(beta, k)) < 3.0 * se);
    }
}

TEST_CASE("zig-zag partial sums telescope exactly") {
    const NoiseChain chain = ZigZag(2, 1.3);
    Rng rng(37);
    ChainState s = stationary_sample(chain, rng);
    const Eigen::VectorXd w0 = s.values.tail(2);
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (int i = 0; i < 1000; ++i) {
        chain_step_inplace(chain, s, rng);
        sum += emitted(chain, s).head<2>();
    }
    const Eigen::VectorXd wn = s.values.tail(2);
    CHECK((sum - (wn - w0) / std::numbers::sqrt2).norm() < 1e-12);
}

TEST_CASE("stationary_dist") {
    SUBCASE("flip chain") {
        const Eigen::VectorXd pi = stationary_dist(flip_chain());
        CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("single absorbing state") {
        const Eigen::VectorXd pi = stationary_dist(Eigen::MatrixXd::Identity(1, 1));
        CHECK(pi[0] == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("random 5-state chain vs power iteration") {
        Rng rng(41);
        const Eigen::MatrixXd p = random_stochastic(5, rng);
        const Eigen::VectorXd pi = stationary_dist(p);
        Eigen::RowVectorXd it = Eigen::RowVectorXd::Constant(5, 0.2);
        for (int k = 0; k < 10000; ++k) it = it * p;
        CHECK((pi.transpose() - it).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("residual bound on random chains") {
        Rng rng(43);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 2 + static_cast<int>(rng.uniform01() * 7.0);
            const Eigen::MatrixXd p = random_stochastic(n, rng);
            const Eigen::VectorXd pi = stationary_dist(p);
            CHECK((pi.transpose() * p - pi.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK(pi.minCoeff() >= 0.0);
            CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("reducible chain is rejected") {
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 4);
        p(0, 1) = 1.0;
        p(1, 0) = 1.0;
        p(2, 3) = 1.0;
        p(3, 2) = 1.0;
        CHECK_THROWS_AS(stationary_dist(p), Error);
        try {
            stationary_dist(p);
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::Structure);
        }
    }
}

TEST_CASE("ar1_clt_variance") {
    CHECK(ar1_clt_variance(0.0) == doctest::Approx(1.0));
    CHECK(ar1_clt_variance(0.9) == doctest::Approx(19.0).epsilon(1e-12));
    CHECK(ar1_clt_variance(0.5) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_THROWS_AS(ar1_clt_variance(1.0), Error);
    CHECK_THROWS_AS(ar1_clt_variance(-0.1), Error);
}

TEST_CASE("chain construction and layout errors") {
    CHECK_THROWS_AS(Ar1(1.0), Error);
    CHECK_THROWS_AS(LinearGauss(1.5, 1.0), Error);
    CHECK_THROWS_AS(TdState(0.5, 1.0, 0.9, 1.2), Error);
    SUBCASE("row sums checked to 1e-12") {
        Eigen::MatrixXd p(2, 2);
        p << 0.5, 0.5001, 0.5, 0.5;
        CHECK_THROWS_AS(Finite(p, Eigen::Vector2d(0, 1)), Error);
    }
    SUBCASE("mismatched state dimension") {
        const NoiseChain chain = Ar1(0.5);
        ChainState bad;
        bad.values = Eigen::VectorXd::Zero(3);
        Rng rng(1);
        try {
            chain_step(chain, bad, rng);
            CHECK(false);
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::Layout);
        }
    }
}
