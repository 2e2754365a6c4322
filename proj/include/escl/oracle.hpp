#pragma once

#include "escl/model.hpp"

namespace escl {

/// 1-D reduction used as ground truth at desk scale: dx = b(x,a)dt + sigma dW
/// on a bounded grid with reflecting (no-flux) boundaries, finite control set.
struct Oracle1DModel {
    std::function<double(double, double)> drift;  // b(x, a)
    double sigma = 1.0;                           // sigma = 0 allowed (degenerate)
    std::function<double(double, double)> cost;   // ell(x, a)
    std::vector<double> controls;
    double x_min = -4.0, x_max = 4.0;
    int n_x = 401;
    double mu = 1.0;  // declared dissipativity, audited by check()

    Eigen::VectorXd grid() const;
    /// Samples dissipativity of b, bounds of ell, and verifies that the
    /// stationary Gaussian envelope leaves < 1e-6 mass outside the grid.
    void check() const;
};

/// 1-mode reduction of a spectral model: b(x,a) = lambda_1 x + F(x,a)_1,
/// sigma = g_1, ell from the model cost; controls supplied by the caller.
Oracle1DModel reduce_model(const ModelInstance& model, std::vector<double> controls,
                           double x_min = -4.0, double x_max = 4.0, int n_x = 401);

struct HjbSolution {
    Eigen::VectorXd v;       // value on the grid
    Eigen::VectorXd policy;  // minimizing control per node
    int sweeps = 0;
    double residual = 0.0;   // sup-norm HJB residual
};

/// Stationary discounted HJB via monotone upwind differences and policy
/// iteration; residual < 1e-8 or error after 500 sweeps.
HjbSolution hjb_discounted(const Oracle1DModel& model, double beta);

struct ErgodicHjb {
    double lambda = 0.0;
    Eigen::VectorXd v_hat;   // pinned v_hat(0) = 0
    Eigen::VectorXd policy;
};

/// Average-cost pair by vanishing discount on the oracle itself (beta = 1e-4).
ErgodicHjb hjb_ergodic(const Oracle1DModel& model, double beta_small = 1e-4);

/// Finite-horizon value v(0, .) by implicit time stepping with pointwise
/// minimization; policy frozen per step from the current value.
Eigen::VectorXd hjb_parabolic(const Oracle1DModel& model, double t,
                              const std::function<double(double)>& phi, int n_t = 0);

/// Linear interpolation of a grid function at x (clamped to the grid hull).
double oracle_interp(const Oracle1DModel& model, const Eigen::VectorXd& values, double x);

/// Feedback policy u(x) = policy(x_1) interpolated from an oracle solve,
/// emitted in the model's control dimension (first component only).
ControlVec oracle_feedback(const Oracle1DModel& model, const Eigen::VectorXd& policy, double x,
                           int m_modes);

struct BruteForceResult {
    double value = 0.0;       // min over enumerated open-loop sequences
    std::vector<double> best_sequence;
    long n_sequences = 0;
};

/// Exhaustive minimum over open-loop control sequences on a Gauss-Hermite
/// scenario tree (Euler dynamics); an upper bound on the true value.
BruteForceResult brute_force_value(const Oracle1DModel& model, double x0, double t, int n_steps,
                                   const std::function<double(double)>& phi, int n_quad = 3);

}  // namespace escl
