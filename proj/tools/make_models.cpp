// Regenerates the shipped desk models in models/.
#include <filesystem>
#include <fstream>

#include "escl/model.hpp"

using namespace escl;

namespace {

void dump(const std::string& dir, const std::string& name, const ModelInstance& m) {
    std::ofstream out(dir + "/" + name);
    out << model_to_json(m) << "\n";
}

ModelInstance desk1d() {
    ModelInstance m;
    m.op.eigenvalues = Eigen::VectorXd::Constant(1, -0.5);
    m.noise.per_mode_gain = Eigen::VectorXd::Ones(1);
    m.noise.hs_exponent = 0.0;
    m.noise.hs_constant = 1.05 * hs_profile_sup(m.op.eigenvalues, m.noise.per_mode_gain, 0.0);
    m.drift = make_drift("tanh_control", {0.5, 1.0});
    set_running_cost(m.cost, "tanh_sq", {1.0, 0.1});
    set_terminal_cost(m.cost, "log_cosh", {0.5});
    m.randomization.per_mode_weight = Eigen::VectorXd::Constant(1, 0.5);
    m.randomization.declared_weight_sum = 1.0;
    m.delta = 1.0;
    m.rho = 0.2;
    if (!validate_assumptions(m).all_pass()) throw Error("desk1d fails its own assumptions");
    return m;
}

ModelInstance desk1d_sat() {
    ModelInstance m = desk1d();
    set_running_cost(m.cost, "sat_quad_control", {1.0, 1.0});
    if (!validate_assumptions(m).all_pass()) throw Error("desk1d_sat fails its own assumptions");
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "models";
    std::filesystem::create_directories(dir);
    dump(dir, "desk1d.json", desk1d());
    dump(dir, "desk1d_sat.json", desk1d_sat());
    dump(dir, "heat4.json",
         build_heat_model(4, {"tanh_state_control", {2.0, 1.0, 1.0}}, {"tanh_sq_state", {1.0}}));
    dump(dir, "colored8.json",
         build_colored_model(8, {"tanh_control", {1.0, 1.0}}, {"tanh_sq_state", {1.0}}, 0.5));
    return 0;
}
