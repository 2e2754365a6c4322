#pragma once

#include "escl/state_sim.hpp"

namespace escl {

/// Coupled (state, control-channel) pair: the channel satisfies
/// I_t = a0 + int_0^t R alpha_s ds + R W^2_t exactly at grid nodes for
/// piecewise-constant alpha, and X is driven by the channel as its control.
struct RandomizedPair {
    PathEnsemble ensemble;        // controls hold the channel at step left endpoints
    std::vector<double> channel;  // n_paths * n_nodes * m_modes

    Eigen::Map<const Eigen::VectorXd> channel_at(int path, int node) const {
        return {channel.data() +
                    (static_cast<std::size_t>(path) * ensemble.grid.n_nodes() + node) *
                        ensemble.m_modes,
                ensemble.m_modes};
    }
};

/// `init_spread` > 0 disperses the initial channel as a0 + init_spread R xi,
/// xi standard normal per path: an exploration design for regression solvers
/// (the constrained value does not depend on the channel start, but a point
/// mass at a0 leaves early-time fits without support in the channel
/// directions). Channels with zero randomization weight stay pinned at a0.
/// `antithetic` pairs path 2k+1 with path 2k through negated driving noise
/// (including the initial dispersion), halving the variance of smooth path
/// functionals at no simulation cost.
/// `state_spread` > 0 similarly disperses the initial state around x0, per
/// mode scaled by the stationary envelope g_k / sqrt(2 |lambda_k|), so a
/// single ensemble carries regression support across the state region of
/// interest and fitted values can be read anywhere on it.
RandomizedPair simulate_randomized_pair(const ModelInstance& model, const StateVec& x0,
                                        const ControlVec& a0, const ControlPolicy& alpha,
                                        const TimeGrid& grid, int n_paths, std::uint64_t seed,
                                        int workers = 1, double init_spread = 0.0,
                                        bool antithetic = false, double state_spread = 0.0);

/// Monitored diagnostic: sup over nodes of t^rho E|(delta I - A)^rho X_t|.
double fractional_power_diagnostic(const ModelInstance& model, const RandomizedPair& pair);

struct AlphaApprox {
    ControlPolicy policy;          // the ramp intensity n 1_{[t0, t0+1/n]} R^{-1} eta
    double error_formula = 0.0;    // reported closed-form value E|eta|^2 / n
    double exact_ramp_error = 0.0; // integral of the implemented ramp: E|eta|^2 / (3n)
    double projection_residual = 0.0;
    ControlVec eta_projected;
};

/// Intensity approximating the step control eta 1_[t0, T): the integrated
/// channel ramps linearly to eta over [t0, t0 + 1/n]. eta outside the span of
/// the first m_span randomization modes is projected (residual reported).
AlphaApprox approximating_alpha(const ControlVec& eta, double t0, int n, double T,
                                const RandomizationMap& R, const TimeGrid& grid, int m_span = -1);

/// L2 distance on the grid between the step target eta 1_[t0,T) and the
/// deterministic integrated channel of `alpha` (trapezoid rule on nodes).
double measured_channel_error(const ControlVec& eta, double t0, const ControlPolicy& alpha,
                              const RandomizationMap& R, const TimeGrid& grid);

struct DiscountedValue {
    double value = 0.0;
    double std_error = 0.0;
    double tail_bound = 0.0;  // M_ell e^{-beta t_end} / beta, added to the error budget
};

/// Monte Carlo estimate of E int_0^inf e^{-beta s} ell(X_s, I_s) ds truncated
/// at grid.t_end. Fails if the geometric tail exceeds tail_tol.
DiscountedValue randomized_value_mc(const ModelInstance& model, const StateVec& x0,
                                    const ControlVec& a0, const ControlPolicy& alpha, double beta,
                                    const TimeGrid& grid, int n_paths, std::uint64_t seed,
                                    double tail_tol = 1e-2, int workers = 1);

/// t_end large enough that M_ell e^{-beta t_end} / beta <= tol.
double required_horizon(double sup_cost, double beta, double tol);

}  // namespace escl
