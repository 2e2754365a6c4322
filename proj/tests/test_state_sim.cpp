#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "escl/state_sim.hpp"

using namespace escl;

namespace {

// Hand-assembled spectral model: explicit eigenvalues and gains, catalog drift.
ModelInstance make_custom(const std::vector<double>& eigenvalues, const std::vector<double>& gains,
                          const std::string& drift_name, const std::vector<double>& drift_params,
                          const std::string& cost_name = "constant",
                          const std::vector<double>& cost_params = {1.0}) {
    ModelInstance m;
    m.op.eigenvalues = Eigen::Map<const Eigen::VectorXd>(eigenvalues.data(), eigenvalues.size());
    m.noise.per_mode_gain = Eigen::Map<const Eigen::VectorXd>(gains.data(), gains.size());
    m.drift = make_drift(drift_name, drift_params);
    set_running_cost(m.cost, cost_name, cost_params);
    set_terminal_cost(m.cost, "zero", {});
    m.randomization.per_mode_weight = Eigen::VectorXd::Constant(1, 0.5);
    m.randomization.declared_weight_sum = 1.0;
    m.rho = 0.1;
    return m;
}

// Effectively zero drift through the catalog (the catalog has no F == 0 entry).
constexpr double kNullMu = 1e-12;

}  // namespace

TEST_CASE("zero drift, zero noise: exact semigroup decay at every node") {
    const ModelInstance m =
        make_custom({-M_PI * M_PI, -4.0 * M_PI * M_PI}, {0.0, 0.0}, "linear", {kNullMu});
    StateVec x0(2);
    x0 << 1.0, -0.5;
    const TimeGrid grid{0.0, 1.0, 50};
    const PathEnsemble ens = simulate_state(m, x0, ControlPolicy::zero(1), grid, 3, 11);
    for (int i = 0; i <= grid.n_steps; ++i) {
        const double t = grid.node(i);
        for (int k = 0; k < 2; ++k)
            CHECK(ens.state_at(1, i)[k] ==
                  doctest::Approx(std::exp(m.op.eigenvalues[k] * t) * x0[k]).epsilon(1e-9));
    }
}

TEST_CASE("single-mode OU matches the stationary variance") {
    const ModelInstance m = make_custom({-1.0}, {1.0}, "linear", {kNullMu});
    const StateVec x0 = StateVec::Zero(1);
    const int n_paths = 10000;
    const double t_end = 10.0;
    const PathEnsemble ens =
        simulate_state(m, x0, ControlPolicy::zero(1), TimeGrid{0.0, t_end, 100}, n_paths, 5);
    double s = 0.0, s2 = 0.0, sa = 0.0;
    for (int p = 0; p < n_paths; ++p) {
        const double v = ens.state_at(p, 100)[0];
        s += v;
        s2 += v * v;
        sa += std::abs(v);
    }
    const double var = s2 / n_paths - (s / n_paths) * (s / n_paths);
    const double target = (1.0 - std::exp(-2.0 * t_end)) / 2.0;
    const double se_var = target * std::sqrt(2.0 / n_paths);
    CHECK(std::abs(var - target) <= 3.0 * se_var);
    // half-normal mean of the stationary N(0, 1/2) law
    const double mean_abs = sa / n_paths;
    const double se_abs = std::sqrt((0.5 - 1.0 / M_PI) / n_paths);
    CHECK(std::abs(mean_abs - std::sqrt(1.0 / M_PI)) <= 3.0 * se_abs);
}

TEST_CASE("zero model has zero moments") {
    const ModelInstance m = make_custom({0.0}, {0.0}, "linear", {kNullMu});
    const PathEnsemble ens = simulate_state(m, StateVec::Zero(1), ControlPolicy::zero(1),
                                            TimeGrid{0.0, 1.0, 20}, 50, 1);
    const MomentReport rep = moment_report(ens, {1.0, 2.0, 4.0});
    for (const auto& row : rep.rows) CHECK(row.sup_moment == 0.0);
    CHECK_FALSE(rep.growth_flagged);
}

TEST_CASE("contraction gap: identical starts give zero ratio") {
    const ModelInstance m = make_custom({-1.0}, {1.0}, "tanh_control", {1.0, 1.0});
    StateVec x0(1);
    x0 << 0.7;
    const GapStats g =
        contraction_gap(m, x0, x0, ControlPolicy::zero(1), TimeGrid{0.0, 1.0, 100}, 20, 3);
    CHECK(g.overall_max == 0.0);
}

TEST_CASE("contraction gap: linear drift stays on the exponential envelope") {
    // left-endpoint drift makes the per-step gap factor (1 - mu h) e^{mu h};
    // at h = 1e-3 the accumulated deviation from 1 is O(mu^2 h T)
    const ModelInstance m = make_custom({0.0}, {1.0}, "linear", {2.0});
    StateVec a(1), b(1);
    a << 1.0;
    b << -1.0;
    const GapStats g =
        contraction_gap(m, a, b, ControlPolicy::zero(1), TimeGrid{0.0, 1.0, 1000}, 10, 3);
    CHECK(g.overall_max <= 1.0 + 1e-9);
    CHECK(g.max_ratio.back() == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("contraction gap: nonlinear dissipative drift stays below the envelope") {
    const ModelInstance m = make_custom({-1.0}, {1.0}, "tanh_state_control", {2.0, 1.0, 1.0});
    StateVec a(1), b(1);
    a << 2.0;
    b << -1.0;
    const GapStats g =
        contraction_gap(m, a, b, ControlPolicy::zero(1), TimeGrid{0.0, 2.0, 2000}, 50, 3);
    CHECK(g.overall_max <= 1.0 + 1e-6);
}

TEST_CASE("bounded feedback keeps sup-moments within the dissipative envelope") {
    const ModelInstance m = make_custom({-1.0}, {1.0}, "tanh_control", {1.0, 1.0});
    StateVec x0(1);
    x0 << 1.0;
    auto fb = ControlPolicy::make_feedback(
        [](double, const StateVec& x) { return ControlVec::Constant(1, -std::tanh(x[0])); });
    const PathEnsemble ens = simulate_state(m, x0, fb, TimeGrid{0.0, 20.0, 400}, 2000, 9);
    const MomentReport rep = moment_report(ens, {2.0});
    CHECK_FALSE(rep.growth_flagged);
    CHECK(rep.fitted_kappa < 3.0);
}

TEST_CASE("simulation rejects h L_F >= 1") {
    const ModelInstance m = make_custom({-1.0}, {1.0}, "linear", {2.0});
    CHECK_THROWS_AS(simulate_state(m, StateVec::Zero(1), ControlPolicy::zero(1),
                                   TimeGrid{0.0, 1.0, 1}, 1, 0),
                    Error);
}

TEST_CASE("worker count does not change the ensemble") {
    const ModelInstance m = make_custom({-1.0, -2.0}, {1.0, 0.5}, "tanh_control", {1.0, 1.0});
    StateVec x0(2);
    x0 << 1.0, 0.0;
    const TimeGrid grid{0.0, 1.0, 50};
    const PathEnsemble one = simulate_state(m, x0, ControlPolicy::zero(1), grid, 64, 13, 1);
    const PathEnsemble four = simulate_state(m, x0, ControlPolicy::zero(1), grid, 64, 13, 4);
    CHECK(one.states == four.states);
    CHECK(one.noise1 == four.noise1);
    CHECK(one.noise2 == four.noise2);
}
