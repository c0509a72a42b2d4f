#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <variant>

#include "salab/error.hpp"
#include "salab/rng.hpp"

namespace salab {

// ---------------------------------------------------------------------------
// Markovian noise processes driving the SA recursions. Each kind documents the
// layout of its state vector and the raw draws one step consumes.
// ---------------------------------------------------------------------------

/// I.i.d. Gaussian noise W_n ~ N(0, sigma_w^2 I_d).
/// State layout: W (d entries). One step consumes d normal draws.
struct IidGaussian {
    int dim;
    double sigma_w;

    IidGaussian(int dim_, double sigma_w_) : dim(dim_), sigma_w(sigma_w_) {
        if (dim < 1) throw Error(ErrorKind::Domain, "IidGaussian dim must be >= 1");
        if (!(sigma_w > 0.0)) throw Error(ErrorKind::Domain, "IidGaussian sigma_w must be > 0");
    }
};

/// Zig-zag probing pair chain. The state holds the two most recent i.i.d.
/// draws (W_prev; W_curr); the emitted value is (W_curr - W_prev)/sqrt(2),
/// whose partial sums telescope. State layout: [W_prev; W_curr] (2d entries).
/// One step consumes d normal draws.
struct ZigZag {
    int dim;
    double sigma_w;

    ZigZag(int dim_, double sigma_w_) : dim(dim_), sigma_w(sigma_w_) {
        if (dim < 1) throw Error(ErrorKind::Domain, "ZigZag dim must be >= 1");
        if (!(sigma_w > 0.0)) throw Error(ErrorKind::Domain, "ZigZag sigma_w must be > 0");
    }
};

/// Scalar AR(1): W' = beta W + sqrt(1 - beta^2) xi, xi ~ N(0,1). The scaling
/// keeps the stationary marginal standard normal for every beta.
/// State layout: [W]. One step consumes one normal draw.
struct Ar1 {
    double beta;

    explicit Ar1(double beta_) : beta(beta_) {
        if (!(beta >= 0.0 && beta < 1.0)) throw Error(ErrorKind::Domain, "Ar1 beta must be in [0,1)");
    }
};

/// Scalar linear-Gaussian chain X' = F X + W, W ~ N(0, sigma_w^2), |F| < 1.
/// State layout: [X]. One step consumes one normal draw.
struct LinearGauss {
    double f;
    double sigma_w;

    LinearGauss(double f_, double sigma_w_) : f(f_), sigma_w(sigma_w_) {
        if (!(std::abs(f) < 1.0)) throw Error(ErrorKind::Domain, "LinearGauss |F| must be < 1");
        if (!(sigma_w > 0.0)) throw Error(ErrorKind::Domain, "LinearGauss sigma_w must be > 0");
    }
};

/// State chain for TD(lambda) value estimation on the linear-Gaussian chain
/// X' = F X + W with feature map td_features. The state is the triple
/// (X_n, X_{n+1}, zeta_{n+1}) where zeta is the eligibility trace.
/// State layout: [X_n, X_{n+1}, zeta_1, zeta_2]. One step consumes one normal
/// draw.
struct TdState {
    double f;
    double sigma_w;
    double gamma;
    double lambda;

    TdState(double f_, double sigma_w_, double gamma_, double lambda_)
        : f(f_), sigma_w(sigma_w_), gamma(gamma_), lambda(lambda_) {
        if (!(std::abs(f) < 1.0)) throw Error(ErrorKind::Domain, "TdState |F| must be < 1");
        if (!(sigma_w > 0.0)) throw Error(ErrorKind::Domain, "TdState sigma_w must be > 0");
        if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::Domain, "TdState gamma must be in (0,1)");
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::Domain, "TdState lambda must be in [0,1]");
        if (!(gamma * lambda < 1.0)) throw Error(ErrorKind::Domain, "TdState gamma*lambda must be < 1");
    }
};

/// Finite-state chain with row-stochastic transition matrix P and a per-state
/// emission value. State layout: [emit[i]] plus the integer state index.
/// One step consumes one uniform draw.
struct Finite {
    Eigen::MatrixXd p;
    Eigen::VectorXd emit;

    Finite(Eigen::MatrixXd p_, Eigen::VectorXd emit_);
};

using NoiseChain = std::variant<IidGaussian, ZigZag, Ar1, LinearGauss, TdState, Finite>;

/// Current state of one trajectory of a noise chain. `values` follows the
/// layout documented on the chain kind; `finite_index` is meaningful for
/// Finite chains only.
struct ChainState {
    Eigen::VectorXd values;
    int finite_index = -1;
};

/// Dimension of the state vector for a chain kind.
int state_dim(const NoiseChain& chain);

/// Feature map used by the TD chain and model: psi(x) = (x^2, 1).
inline Eigen::Vector2d td_features(double x) { return {x * x, 1.0}; }

/// Advances the chain state in place, consuming the documented raw draws.
void chain_step_inplace(const NoiseChain& chain, ChainState& state, Rng& rng);

/// Returns the next state; pure function of (state, consumed raw draws).
ChainState chain_step(const NoiseChain& chain, const ChainState& state, Rng& rng);

/// One draw from the stationary law of the chain.
ChainState stationary_sample(const NoiseChain& chain, Rng& rng);

/// The value a chain state contributes to the driving noise: W for IidGaussian,
/// (W_curr - W_prev)/sqrt(2) for ZigZag, the scalar state for Ar1/LinearGauss,
/// emit[i] for Finite. Not defined for TdState (models read the state directly).
Eigen::VectorXd emitted(const NoiseChain& chain, const ChainState& state);

/// Stationary distribution pi of an irreducible row-stochastic matrix:
/// pi P = pi, sum pi = 1. Irreducibility is checked by reachability.
Eigen::VectorXd stationary_dist(const Eigen::MatrixXd& p);

/// Asymptotic (CLT) variance of the standardized AR(1) chain: (1+beta)/(1-beta).
double ar1_clt_variance(double beta);

}  // namespace salab
