#include "salab/chains.hpp"

#include <cmath>
#include <vector>

namespace salab {

namespace {

constexpr double kRowSumTol = 1e-12;

void check_layout(const NoiseChain& chain, const ChainState& state) {
    if (state.values.size() != state_dim(chain))
        throw Error(ErrorKind::Layout, "chain state has dimension " +
                                           std::to_string(state.values.size()) + ", expected " +
                                           std::to_string(state_dim(chain)));
    if (std::holds_alternative<Finite>(chain)) {
        const auto& fin = std::get<Finite>(chain);
        if (state.finite_index < 0 || state.finite_index >= fin.p.rows())
            throw Error(ErrorKind::Layout, "finite chain state index out of range");
    }
}

/// Strong connectivity of the sparsity pattern of P, by forward and backward
/// reachability from state 0.
bool irreducible(const Eigen::MatrixXd& p) {
    const Eigen::Index n = p.rows();
    auto reach = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const Eigen::Index i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < n; ++j) {
                const double w = transpose ? p(j, i) : p(i, j);
                if (w > 0.0 && !seen[static_cast<std::size_t>(j)]) {
                    seen[static_cast<std::size_t>(j)] = 1;
                    stack.push_back(j);
                }
            }
        }
        for (char s : seen)
            if (!s) return false;
        return true;
    };
    return reach(false) && reach(true);
}

int sample_row(const Eigen::MatrixXd& p, int row, double u) {
    double acc = 0.0;
    const Eigen::Index n = p.cols();
    for (Eigen::Index j = 0; j < n; ++j) {
        acc += p(row, j);
        if (u < acc) return static_cast<int>(j);
    }
    return static_cast<int>(n - 1);
}

}  // namespace

Finite::Finite(Eigen::MatrixXd p_, Eigen::VectorXd emit_) : p(std::move(p_)), emit(std::move(emit_)) {
    if (p.rows() != p.cols() || p.rows() < 1)
        throw Error(ErrorKind::Domain, "Finite P must be square and non-empty");
    if (emit.size() != p.rows())
        throw Error(ErrorKind::Domain, "Finite emit length must match the number of states");
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if ((p.row(i).array() < 0.0).any())
            throw Error(ErrorKind::Domain, "Finite P has a negative entry in row " + std::to_string(i));
        if (std::abs(p.row(i).sum() - 1.0) > kRowSumTol)
            throw Error(ErrorKind::Domain, "Finite P row " + std::to_string(i) + " does not sum to 1");
    }
}

int state_dim(const NoiseChain& chain) {
    return std::visit(
        [](const auto& c) -> int {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, IidGaussian>) return c.dim;
            if constexpr (std::is_same_v<T, ZigZag>) return 2 * c.dim;
            if constexpr (std::is_same_v<T, Ar1>) return 1;
            if constexpr (std::is_same_v<T, LinearGauss>) return 1;
            if constexpr (std::is_same_v<T, TdState>) return 4;
            if constexpr (std::is_same_v<T, Finite>) return 1;
        },
        chain);
}

void chain_step_inplace(const NoiseChain& chain, ChainState& state, Rng& rng) {
    check_layout(chain, state);
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, IidGaussian>) {
                for (int i = 0; i < c.dim; ++i) state.values[i] = c.sigma_w * rng.normal();
            } else if constexpr (std::is_same_v<T, ZigZag>) {
                state.values.head(c.dim) = state.values.tail(c.dim);
                for (int i = 0; i < c.dim; ++i) state.values[c.dim + i] = c.sigma_w * rng.normal();
            } else if constexpr (std::is_same_v<T, Ar1>) {
                state.values[0] =
                    c.beta * state.values[0] + std::sqrt(1.0 - c.beta * c.beta) * rng.normal();
            } else if constexpr (std::is_same_v<T, LinearGauss>) {
                state.values[0] = c.f * state.values[0] + c.sigma_w * rng.normal();
            } else if constexpr (std::is_same_v<T, TdState>) {
                // (X_n, X_{n+1}, zeta_{n+1}) -> (X_{n+1}, X_{n+2}, zeta_{n+2})
                // with zeta_{n+2} = lambda*gamma*zeta_{n+1} + psi(X_{n+1}): the
                // trace runs through the source state of each transition, so
                // that the TD fixed point is the true value function.
                const double x_cur = state.values[1];
                const double x_new = c.f * x_cur + c.sigma_w * rng.normal();
                const Eigen::Vector2d zeta =
                    c.lambda * c.gamma * state.values.segment<2>(2) + td_features(x_cur);
                state.values[0] = x_cur;
                state.values[1] = x_new;
                state.values.segment<2>(2) = zeta;
            } else if constexpr (std::is_same_v<T, Finite>) {
                const int next = sample_row(c.p, state.finite_index, rng.uniform01());
                state.finite_index = next;
                state.values[0] = c.emit[next];
            }
        },
        chain);
}

ChainState chain_step(const NoiseChain& chain, const ChainState& state, Rng& rng) {
    ChainState next = state;
    chain_step_inplace(chain, next, rng);
    return next;
}

ChainState stationary_sample(const NoiseChain& chain, Rng& rng) {
    return std::visit(
        [&](const auto& c) -> ChainState {
            using T = std::decay_t<decltype(c)>;
            ChainState s;
            if constexpr (std::is_same_v<T, IidGaussian>) {
                s.values.resize(c.dim);
                for (int i = 0; i < c.dim; ++i) s.values[i] = c.sigma_w * rng.normal();
            } else if constexpr (std::is_same_v<T, ZigZag>) {
                s.values.resize(2 * c.dim);
                for (int i = 0; i < 2 * c.dim; ++i) s.values[i] = c.sigma_w * rng.normal();
            } else if constexpr (std::is_same_v<T, Ar1>) {
                s.values.resize(1);
                s.values[0] = rng.normal();  // stationary marginal is N(0,1)
            } else if constexpr (std::is_same_v<T, LinearGauss>) {
                s.values.resize(1);
                s.values[0] = c.sigma_w / std::sqrt(1.0 - c.f * c.f) * rng.normal();
            } else if constexpr (std::is_same_v<T, TdState>) {
                // X_n from the stationary marginal, X_{n+1} by one transition,
                // the trace reset to psi(X_n).
                s.values.resize(4);
                const double x0 = c.sigma_w / std::sqrt(1.0 - c.f * c.f) * rng.normal();
                const double x1 = c.f * x0 + c.sigma_w * rng.normal();
                s.values[0] = x0;
                s.values[1] = x1;
                s.values.segment<2>(2) = td_features(x0);
            } else if constexpr (std::is_same_v<T, Finite>) {
                const Eigen::VectorXd pi = stationary_dist(c.p);
                const double u = rng.uniform01();
                double acc = 0.0;
                int idx = static_cast<int>(pi.size()) - 1;
                for (Eigen::Index j = 0; j < pi.size(); ++j) {
                    acc += pi[j];
                    if (u < acc) {
                        idx = static_cast<int>(j);
                        break;
                    }
                }
                s.values.resize(1);
                s.values[0] = c.emit[idx];
                s.finite_index = idx;
            }
            return s;
        },
        chain);
}

Eigen::VectorXd emitted(const NoiseChain& chain, const ChainState& state) {
    check_layout(chain, state);
    return std::visit(
        [&](const auto& c) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, IidGaussian>) {
                return state.values;
            } else if constexpr (std::is_same_v<T, ZigZag>) {
                return (state.values.tail(c.dim) - state.values.head(c.dim)) / std::numbers::sqrt2;
            } else if constexpr (std::is_same_v<T, Ar1> || std::is_same_v<T, LinearGauss> ||
                                 std::is_same_v<T, Finite>) {
                return state.values;
            } else {
                throw Error(ErrorKind::Capability, "emitted value not defined for the TD state chain");
            }
        },
        chain);
}

Eigen::VectorXd stationary_dist(const Eigen::MatrixXd& p) {
    if (p.rows() != p.cols() || p.rows() < 1)
        throw Error(ErrorKind::Argument, "stationary_dist requires a square matrix");
    if (!irreducible(p)) throw Error(ErrorKind::Structure, "chain is reducible");

    // Stacked system [P^T - I; 1^T] pi = [0; 1], solved by least squares; the
    // system is consistent for an irreducible chain.
    const Eigen::Index n = p.rows();
    Eigen::MatrixXd a(n + 1, n);
    a.topRows(n) = p.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.bottomRows(1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs[n] = 1.0;
    Eigen::VectorXd pi = a.colPivHouseholderQr().solve(rhs);
    if (!pi.allFinite()) throw Error(ErrorKind::Numerical, "stationary distribution solve failed");
    return pi;
}

double ar1_clt_variance(double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw Error(ErrorKind::Domain, "beta must be in [0,1)");
    return (1.0 + beta) / (1.0 - beta);
}

}  // namespace salab
