#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "escl/model.hpp"

using namespace escl;

namespace {

CostParams tanh_state_cost() { return {"tanh_sq_state", {1.0}, "zero", {}}; }

}  // namespace

TEST_CASE("heat spectrum: Dirichlet Laplacian eigenvalues") {
    const ModelInstance m = build_heat_model(2, {"tanh_control", {1.0, 1.0}}, tanh_state_cost());
    const double pi2 = M_PI * M_PI;
    CHECK(m.op.eigenvalues[0] == doctest::Approx(-pi2).epsilon(1e-12));
    CHECK(m.op.eigenvalues[1] == doctest::Approx(-4.0 * pi2).epsilon(1e-12));
}

TEST_CASE("colored noise gains follow the power law") {
    const ModelInstance m =
        build_colored_model(16, {"tanh_control", {1.0, 1.0}}, tanh_state_cost(), 0.3);
    CHECK(m.noise.per_mode_gain[0] == doctest::Approx(1.0));
    CHECK(m.noise.per_mode_gain[15] == doctest::Approx(std::pow(16.0, -0.3)));
}

TEST_CASE("colored noise rejects eta <= 1/4") {
    CHECK_THROWS_AS(build_colored_model(8, {"tanh_control", {1.0, 1.0}}, tanh_state_cost(), 0.2),
                    Error);
}

TEST_CASE("linear dissipative drift passes (A.5)") {
    const ModelInstance m = build_heat_model(1, {"sin_control", {2.0, 1.0}}, tanh_state_cost());
    CHECK(m.drift.dissipativity == doctest::Approx(2.0));
    const ValidationReport rep = validate_assumptions(m, 500, 3);
    CHECK(rep.at("A.5").pass);
    CHECK(rep.all_pass());
}

TEST_CASE("expansive drift fails (A.5) with a witness") {
    ModelInstance m = build_heat_model(1, {"tanh_control", {1.0, 1.0}}, tanh_state_cost());
    m.drift = make_drift("expansive", {});
    const ValidationReport rep = validate_assumptions(m, 500, 3);
    CHECK_FALSE(rep.at("A.5").pass);
    CHECK(rep.at("A.5").margin < 0.0);
}

TEST_CASE("bounded running cost passes (A.6) with M = 1") {
    const ModelInstance m = build_heat_model(1, {"tanh_control", {1.0, 1.0}}, tanh_state_cost());
    CHECK(m.cost.sup_bound == doctest::Approx(1.0));
    CHECK(validate_assumptions(m, 500, 3).at("A.6").pass);
}

TEST_CASE("degenerate noise is accepted by (A.2)") {
    Eigen::VectorXd gains = Eigen::VectorXd::Zero(4);
    gains[0] = 1.0;  // only the first mode is forced
    const ModelInstance m =
        build_heat_model(4, {"tanh_control", {1.0, 1.0}}, tanh_state_cost(), gains);
    CHECK(validate_assumptions(m, 500, 3).at("A.2").pass);
}

TEST_CASE("identity noise admits the gamma = 1/4 profile") {
    Eigen::VectorXd ev(64), g(64);
    for (int k = 0; k < 64; ++k) {
        ev[k] = -(k + 1.0) * (k + 1.0) * M_PI * M_PI;
        g[k] = 1.0;
    }
    const double sup = hs_profile_sup(ev, g, 0.25);
    CHECK(sup > 0.0);
    CHECK(sup < 2.0);  // finite and modest on (0,1)
}

TEST_CASE("channel-separable cost decomposition matches the full cost") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    const std::vector<std::pair<std::string, std::vector<double>>> kinds = {
        {"constant", {0.7}},
        {"tanh_sq_state", {1.3}},
        {"tanh_sq", {1.0, 0.1}},
        {"sat_quad_control", {1.0, 1.0}}};
    for (const auto& [name, params] : kinds) {
        CostSpec cost;
        set_running_cost(cost, name, params);
        REQUIRE(static_cast<bool>(cost.running_state));
        REQUIRE(static_cast<bool>(cost.running_channel));
        for (int trial = 0; trial < 50; ++trial) {
            StateVec x(2);
            ControlVec a(2);
            for (int i = 0; i < 2; ++i) {
                x[i] = 2.0 * gauss(rng);
                a[i] = 2.0 * gauss(rng);
            }
            double split = cost.running_state(x);
            for (int j = 0; j < 2; ++j) split += cost.running_channel(j, a[j]);
            CHECK(split == doctest::Approx(cost.running(x, a)).epsilon(1e-12));
        }
    }
}

TEST_CASE("model JSON round-trip is stable") {
    const ModelInstance m =
        build_colored_model(8, {"tanh_control", {1.0, 1.0}}, tanh_state_cost(), 0.5);
    const std::string once = model_to_json(m);
    const std::string twice = model_to_json(model_from_json(once));
    CHECK(once == twice);
}

TEST_CASE("model JSON rejects unknown schema") {
    CHECK_THROWS_AS(model_from_json("{\"schema\": \"escl-model/2\"}"), Error);
}

TEST_CASE("randomization map rejects nonpositive weights") {
    RandomizationMap r;
    r.per_mode_weight = Eigen::VectorXd::Zero(1);
    r.declared_weight_sum = 1.0;
    CHECK_THROWS_AS(r.check(), Error);
}
