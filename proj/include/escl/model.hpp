#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "escl/common.hpp"

namespace escl {

/// Diagonal unbounded operator A given through its (nonpositive, nonincreasing)
/// spectrum on the truncated mode space.
struct SpectralOperator {
    Eigen::VectorXd eigenvalues;

    int n_modes() const { return static_cast<int>(eigenvalues.size()); }
    void check() const;
};

/// Diagonal noise map G together with its declared Hilbert-Schmidt profile:
/// s^gamma * |e^{sA} G|_HS <= hs_constant on (0,1). Zero gains are allowed;
/// degenerate noise is a supported regime, not an error.
struct NoiseMap {
    Eigen::VectorXd per_mode_gain;
    double hs_constant = 1.0;
    double hs_exponent = 0.0;  // gamma in [0, 1/2)
};

/// Trace-class injective randomization operator R = diag(r_j), r_j > 0.
struct RandomizationMap {
    Eigen::VectorXd per_mode_weight;
    double declared_weight_sum = 0.0;  // summability certificate for the full sequence

    int m_control_modes() const { return static_cast<int>(per_mode_weight.size()); }
    void check() const;
};

using StateVec = Eigen::VectorXd;
using ControlVec = Eigen::VectorXd;

/// Drift F(x, a), catalog-backed so that model files stay declarative.
/// Constants are declared by the catalog entry and audited by sampling.
struct DriftSpec {
    std::string name;
    std::vector<double> params;
    std::function<void(const StateVec&, const ControlVec&, StateVec&)> evaluator;
    double lipschitz_x = 0.0;    // L_F
    double growth = 0.0;         // C_F
    double dissipativity = 0.0;  // mu > 0

    StateVec operator()(const StateVec& x, const ControlVec& a) const {
        StateVec out(x.size());
        evaluator(x, a, out);
        return out;
    }
};

/// Running cost ell(x, a) with sup bound M_ell and x-Lipschitz constant L_ell,
/// plus terminal cost phi(x) with linear growth constant C_phi.
struct CostSpec {
    std::string running_name;
    std::vector<double> running_params;
    std::function<double(const StateVec&, const ControlVec&)> running;
    // channel-separable decomposition when the catalog entry admits one:
    //   running(x, a) == running_state(x) + sum_j running_channel(j, a[j]).
    // Solvers that probe many channel displacements per state use it to avoid
    // re-evaluating the state part (both are set or both are empty).
    std::function<double(const StateVec&)> running_state;
    std::function<double(int, double)> running_channel;
    double sup_bound = 0.0;     // M_ell
    double lipschitz_x = 0.0;   // L_ell

    std::string terminal_name;
    std::vector<double> terminal_params;
    std::function<double(const StateVec&)> terminal;
    double terminal_growth = 0.0;  // C_phi
};

struct ModelInstance {
    SpectralOperator op;
    NoiseMap noise;
    DriftSpec drift;
    CostSpec cost;
    RandomizationMap randomization;
    double delta = 1.0;  // shift in (delta I - A)^rho
    double rho = 0.0;    // fractional exponent, 0 < rho < 1/2 - gamma
    std::optional<double> eta;  // colored-noise exponent, when applicable

    int n_modes() const { return op.n_modes(); }
    int m_modes() const { return randomization.m_control_modes(); }
};

// ---- catalog -------------------------------------------------------------

/// Builds a drift from the registered catalog. Known names:
///   "linear"             params {mu}:        F = -mu x
///   "sin_control"        params {mu, b}:     F = -mu x + b sin(a_1) e_1
///   "tanh_control"       params {mu, b}:     F = -mu x + b tanh(a_1) e_1
///   "tanh_state_control" params {mu, c, b}:  F = -mu x + c tanh.(x) + b tanh(a_1) e_1
///   "linear_control"     params {mu, b}:     F = -mu x + b a_1 e_1
///   "expansive"          params {}:          F = x   (fails (A.5); test material)
DriftSpec make_drift(const std::string& name, const std::vector<double>& params);

/// Running costs:
///   "constant"          params {c}
///   "tanh_sq_state"     params {w}:        w tanh^2(x_1)
///   "tanh_sq"           params {wx, wu}:   wx tanh^2(x_1) + wu tanh^2(a_1)
///   "sat_quad_control"  params {wx, wu}:   wx tanh^2(x_1) + wu min(a_1^2, 1)
void set_running_cost(CostSpec& cost, const std::string& name, const std::vector<double>& params);

/// Terminal costs: "zero" {}, "abs_first" {c}: c|x_1|, "log_cosh" {c}: c log cosh(x_1).
void set_terminal_cost(CostSpec& cost, const std::string& name, const std::vector<double>& params);

// ---- builders ------------------------------------------------------------

struct CostParams {
    std::string running_name;
    std::vector<double> running_params;
    std::string terminal_name = "zero";
    std::vector<double> terminal_params;
};

struct DriftParams {
    std::string name;
    std::vector<double> params;
};

/// Dirichlet-Laplacian heat model on (0,1): lambda_k = -(k pi)^2.
/// noise_profile: per-mode gains (size n_modes) or empty for identity noise.
ModelInstance build_heat_model(int n_modes, const DriftParams& drift, const CostParams& cost,
                               const Eigen::VectorXd& noise_profile = {},
                               int m_control_modes = 1);

/// Colored-noise model: lambda_k = -c k and g_k = (c k)^(-eta), eta > 1/4.
ModelInstance build_colored_model(int n_modes, const DriftParams& drift, const CostParams& cost,
                                  double eta, double c = 1.0, int m_control_modes = 1);

// ---- assumption validation ----------------------------------------------

struct AssumptionCheck {
    std::string name;     // "A.1" ... "A.8"
    bool pass = false;
    double margin = 0.0;  // worst sampled slack; negative = violated
    std::string witness;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass() const;
    const AssumptionCheck& at(const std::string& name) const;
};

/// Samples (A.1)-(A.8) deterministically (Halton points scrambled by seed) and
/// reports the worst witness per assumption. Failures are entries, not faults.
ValidationReport validate_assumptions(const ModelInstance& model, int n_samples = 1000,
                                      std::uint64_t seed = 0);

/// Numerical form of the (A.2) Hilbert-Schmidt profile: the supremum of
/// s^gamma (sum_k g_k^2 e^{2 lambda_k s})^{1/2} over a log grid of s in (0,1).
double hs_profile_sup(const Eigen::VectorXd& eigenvalues, const Eigen::VectorXd& gains,
                      double gamma, int n_s = 200);

// ---- serialization -------------------------------------------------------

std::string model_to_json(const ModelInstance& model);
ModelInstance model_from_json(const std::string& text);

}  // namespace escl
