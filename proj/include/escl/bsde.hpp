#pragma once

#include "escl/randomization.hpp"

namespace escl {

/// Global polynomial regression basis over (state, channel) samples,
/// Longstaff-Schwartz style. Linear features are the leading state modes and
/// (optionally tanh-squashed) channel modes; monomials up to `degree` total
/// degree are built on per-step standardized features.
struct RegressionBasis {
    int degree = 4;
    int i_degree = 4;  // cap on the combined degree in the channel features;
                       // the erosion search is sensitive to oscillation there,
                       // so it is kept lower than the state degree
    int max_x_features = 4;
    int max_i_features = 4;
    bool squash_i = false;

    int n_linear(int n_modes, int m_modes) const {
        return std::min(n_modes, max_x_features) + std::min(m_modes, max_i_features);
    }
    /// Multi-index list for monomials over f features with total degree <=
    /// degree; features at index >= first_i additionally have combined degree
    /// <= i_degree (no cap when first_i < 0).
    static std::vector<std::vector<int>> monomials(int f, int degree, int first_i = -1,
                                                   int i_degree = -1);
};

struct StepScaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd inv_sd;  // 0 marks a frozen (constant-on-sample) feature
};

struct BsdeDiagnostics {
    double clip_rate = 0.0;       // fraction of evaluations hitting the Y clip bound
    double sup_z = 0.0;           // empirical sup_t max_paths |Z_t|
    double e_int_gamma = 0.0;     // E int |Gamma| dt
    double min_k_increment = 0.0; // min over paths/steps of the K increment (>= 0 exact)
    double growth_constant = 0.0; // fitted c in |Y_t| <= c (1 + |X_t|), finite horizon
};

/// Per-time-step regression representation of (Y, Z, Gamma) plus the
/// reconstructed nondecreasing K.
struct BsdeSolution {
    double y0 = 0.0;
    double beta = 0.0;
    double horizon = 0.0;
    int penalization_n = 0;  // kLimitMarker once saturated
    static constexpr int kLimitMarker = -1;

    TimeGrid grid;
    RegressionBasis basis;
    int n_modes = 0, m_modes = 0;
    std::vector<std::vector<int>> powers;  // monomial multi-indices

    Eigen::VectorXd r_weights;    // randomization weights (Gamma = R grad_I u)
    Eigen::VectorXd noise_gains;  // per-mode gains (Z = G grad_x u)

    std::vector<StepScaler> scalers;         // per step
    std::vector<Eigen::VectorXd> y_coeffs;   // per step: fit of the updated Y_i
    std::vector<Eigen::VectorXd> cont_coeffs;  // per step: fit of E[Y_{i+1}|F_i]
    std::vector<double> k_mean;              // mean K at each node
    std::vector<double> k_path;              // optional per-path K at nodes, path-major
    std::vector<double> mean_y;              // mean Y at each node
    BsdeDiagnostics diag;

    /// Evaluates the regression representation of Y at step `step`.
    double evaluate_y(int step, const StateVec& x, const ControlVec& i) const;
    /// Gamma / Z by the Ito identities Gamma_j = r_j d/dI_j u, Z_k = g_k d/dx_k u,
    /// applied to the fitted continuation surface.
    Eigen::VectorXd evaluate_gamma(int step, const StateVec& x, const ControlVec& i) const;
    Eigen::VectorXd evaluate_z(int step, const StateVec& x, const ControlVec& i) const;
};

struct SolveOptions {
    double tail_tol = 0.05;          // absolute tail budget for the infinite-horizon truncation
    double init_channel_spread = 0.7;  // exploration spread of I_0 (see simulate_randomized_pair)
    double init_state_spread = 0.0;    // exploration spread of X_0; the step-0 fit then carries
                                       // the value surface over the dispersed state region
    std::optional<int> smoothing_k;  // replaces |Gamma| by sqrt(|Gamma|^2 + 1/k)
    std::function<double(double)> forced_k_rate;  // extra dK/dt, for supersolution probes
    bool store_k_paths = false;
    bool want_z = true;  // track the sup|Z| diagnostic
    int workers = 1;
};

/// Penalized infinite-horizon BSDE, truncated at grid.t_end with terminal 0
/// and Y clipped to +-M_ell/beta. The representation pair uses alpha == 0.
BsdeSolution solve_penalized(const ModelInstance& model, const StateVec& x0, const ControlVec& a0,
                             double beta, int n, const TimeGrid& grid, int n_paths,
                             const RegressionBasis& basis, std::uint64_t seed,
                             const SolveOptions& opts = {});

/// Finite-horizon analogue with terminal phi(X_T) (beta >= 0 allowed, no
/// tail truncation, no clipping; growth constant fitted instead).
BsdeSolution solve_finite_horizon(const ModelInstance& model, const StateVec& x0,
                                  const ControlVec& a0, double beta, int n, const TimeGrid& grid,
                                  int n_paths, const RegressionBasis& basis, std::uint64_t seed,
                                  const std::function<double(const StateVec&)>& phi = {},
                                  const SolveOptions& opts = {});

struct LadderEntry {
    int n = 0;
    double y0 = 0.0;
    double e_int_gamma = 0.0;
};

struct MonotonicityReport {
    std::vector<LadderEntry> entries;
    double tolerance = 0.0;
    bool monotone = false;   // y0 nonincreasing in n up to tolerance
    bool saturated = false;  // |y0(last) - y0(prev)| < tolerance
};

struct ConstrainedResult {
    BsdeSolution solution;  // largest-n solve, penalization_n = kLimitMarker
    MonotonicityReport report;
};

/// Common-random-number ladder over n. Shares the forward ensemble and the
/// per-step design factorization across all ladder entries.
ConstrainedResult constrained_limit(const ModelInstance& model, const StateVec& x0,
                                    const ControlVec& a0, double beta,
                                    const std::vector<int>& n_ladder, const TimeGrid& grid,
                                    int n_paths, const RegressionBasis& basis, std::uint64_t seed,
                                    const SolveOptions& opts = {});

/// Finite-horizon ladder (beta >= 0, terminal phi).
ConstrainedResult constrained_limit_finite(const ModelInstance& model, const StateVec& x0,
                                           const ControlVec& a0, double beta,
                                           const std::vector<int>& n_ladder, const TimeGrid& grid,
                                           int n_paths, const RegressionBasis& basis,
                                           std::uint64_t seed,
                                           const std::function<double(const StateVec&)>& phi = {},
                                           const SolveOptions& opts = {});

struct ComparisonReport {
    double min_margin = 0.0;  // min over evaluated states of Y_ref - Y_cand
    double y0_reference = 0.0;
    double y0_candidate = 0.0;
    bool dominated = false;  // reference >= candidate - tol everywhere evaluated
};

/// Pointwise comparison of two solutions on the states visited by `pair`.
ComparisonReport maximality_probe(const BsdeSolution& candidate, const BsdeSolution& reference,
                                  const RandomizedPair& pair, double tol = 1e-6);

}  // namespace escl
