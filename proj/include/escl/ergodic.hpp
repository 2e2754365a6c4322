#pragma once

#include "escl/bsde.hpp"

namespace escl {

/// Shared numerical configuration for the discounted / finite-horizon solves
/// behind the ergodic estimators. The time grid itself is derived per job:
/// discounted horizons from the tail budget, finite horizons from the T ladder.
struct BsdeConfig {
    double h = 0.05;  // step size
    int n_paths = 2000;
    RegressionBasis basis;
    std::vector<int> n_ladder = {2, 8, 32};
    std::uint64_t seed = 1;
    SolveOptions opts;
};

struct BetaLadderEntry {
    double beta = 0.0;
    double v0 = 0.0;       // v^beta(0)
    double beta_v0 = 0.0;  // beta v^beta(0)
};

struct VhatPoint {
    StateVec x;
    double value = 0.0;
};

struct ErgodicEstimate {
    double lambda = 0.0;
    std::vector<VhatPoint> v_hat;  // read at the smallest beta, pinned v_hat(0) = 0
    std::vector<BetaLadderEntry> beta_ladder;
    std::vector<std::pair<double, double>> t_ladder;  // (T, v^T(x0)/T), when available

    double fit_residual = 0.0;     // max |beta v^beta(0) - (lambda + c1 beta)| over the ladder
    double cauchy_max = 0.0;       // max_x |vhat^{b_min}(x) - vhat^{b_prev}(x)|
    bool cauchy_ok = true;         // false once the beta-ladder stops contracting
    double vhat_lipschitz = 0.0;   // max first-mode difference quotient on the grid
};

/// Lemma 5.1 estimator: constrained-limit discounted values on a state grid for
/// a decreasing beta ladder; v_hat from the smallest beta, lambda by affine
/// extrapolation of beta v^beta(0) on the two smallest ladder points.
ErgodicEstimate vanishing_discount_sweep(const ModelInstance& model,
                                         const std::vector<StateVec>& x_grid,
                                         const std::vector<double>& beta_ladder,
                                         const BsdeConfig& config);

/// Piecewise-linear interpolation in the first state mode; clamped outside the
/// grid hull (desk models are effectively one-dimensional in cost).
std::function<double(const StateVec&)> make_vhat_interpolator(std::vector<VhatPoint> points);

struct LongTimeEntry {
    double t = 0.0;
    double value = 0.0;     // v^T(x0)
    double per_time = 0.0;  // v^T(x0)/T
    double residual = 0.0;  // v^T(x0) - vhat_fit - lambda_fit T
};

struct LongTimeResult {
    std::vector<LongTimeEntry> entries;
    double lambda_longtime = 0.0;  // least-squares slope of v^T vs T
    double vhat_x0_fit = 0.0;      // intercept of the same fit
    double fitted_c = 0.0;         // max |residual| / (1 + |x0|)
    bool residual_bounded = true;  // no upward residual trend across the ladder
};

/// Thm 6.1 estimator: beta = 0 finite-horizon constrained limits across an
/// increasing T ladder, slope-fitted for lambda.
LongTimeResult long_time_sweep(const ModelInstance& model, const StateVec& x0,
                               const std::vector<double>& t_ladder,
                               const std::function<double(const StateVec&)>& phi,
                               const BsdeConfig& config);

struct ErgodicCostEstimate {
    double value = 0.0;  // (1/T) E int_0^T ell(X, u) dt
    double std_error = 0.0;
    bool mixing_warning = false;  // T < 10 / mu
};

ErgodicCostEstimate ergodic_cost(const ModelInstance& model, const ControlPolicy& policy, double t,
                                 double h, int n_paths, std::uint64_t seed, int workers = 1);

struct MartingaleStats {
    double mean_drift = 0.0;  // per unit time, E dM / h
    double std_error = 0.0;
    double min_bucket_drift = 0.0;  // min over time buckets of the bucket mean
    double max_bucket_drift = 0.0;
};

/// Drift of M_t = vhat(X_t) + int_0^t ell ds - lambda t along `policy`.
/// Submartingale direction for arbitrary policies, ~0 for the optimal one.
MartingaleStats martingale_residual(const ModelInstance& model, const ControlPolicy& policy,
                                    const std::function<double(const StateVec&)>& v_hat,
                                    double lambda, const TimeGrid& grid, int n_paths,
                                    std::uint64_t seed, int workers = 1, int n_buckets = 8);

}  // namespace escl
