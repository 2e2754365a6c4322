#include "escl/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace escl {

void SpectralOperator::check() const {
    if (eigenvalues.size() == 0) throw Error("SpectralOperator: empty spectrum");
    for (int k = 0; k < eigenvalues.size(); ++k) {
        if (eigenvalues[k] > 0.0) throw Error("SpectralOperator: eigenvalue > 0 violates dissipativity");
        if (k > 0 && eigenvalues[k] > eigenvalues[k - 1])
            throw Error("SpectralOperator: eigenvalues must be nonincreasing");
    }
}

void RandomizationMap::check() const {
    if (per_mode_weight.size() == 0) throw Error("RandomizationMap: empty weights");
    for (int j = 0; j < per_mode_weight.size(); ++j)
        if (!(per_mode_weight[j] > 0.0)) throw Error("RandomizationMap: weights must be strictly positive");
    const double partial = per_mode_weight.sum();
    if (declared_weight_sum > 0.0 && partial > declared_weight_sum + 1e-9)
        throw Error("RandomizationMap: partial sums exceed declared summability limit");
}

// ---- catalog -------------------------------------------------------------

namespace {

void need_params(const std::string& name, const std::vector<double>& p, std::size_t n) {
    if (p.size() != n)
        throw Error("catalog entry '" + name + "' expects " + std::to_string(n) + " parameters, got " +
                    std::to_string(p.size()));
}

}  // namespace

DriftSpec make_drift(const std::string& name, const std::vector<double>& params) {
    DriftSpec d;
    d.name = name;
    d.params = params;
    if (name == "linear") {
        need_params(name, params, 1);
        const double mu = params[0];
        if (mu <= 0.0) throw Error("drift 'linear': mu must be positive");
        d.evaluator = [mu](const StateVec& x, const ControlVec&, StateVec& out) { out = -mu * x; };
        d.lipschitz_x = mu;
        d.growth = mu;
        d.dissipativity = mu;
    } else if (name == "sin_control" || name == "tanh_control") {
        need_params(name, params, 2);
        const double mu = params[0], b = params[1];
        if (mu <= 0.0) throw Error("drift '" + name + "': mu must be positive");
        const bool use_sin = (name == "sin_control");
        d.evaluator = [mu, b, use_sin](const StateVec& x, const ControlVec& a, StateVec& out) {
            out = -mu * x;
            const double u = a.size() > 0 ? a[0] : 0.0;
            out[0] += b * (use_sin ? std::sin(u) : std::tanh(u));
        };
        d.lipschitz_x = mu;
        d.growth = std::max(mu, std::abs(b));
        d.dissipativity = mu;
    } else if (name == "tanh_state_control") {
        need_params(name, params, 3);
        const double mu = params[0], c = params[1], b = params[2];
        if (mu <= 0.0) throw Error("drift 'tanh_state_control': mu must be positive");
        if (std::abs(c) >= mu) throw Error("drift 'tanh_state_control': |c| < mu required for (A.5)");
        d.evaluator = [mu, c, b](const StateVec& x, const ControlVec& a, StateVec& out) {
            out = -mu * x + c * x.array().tanh().matrix();
            const double u = a.size() > 0 ? a[0] : 0.0;
            out[0] += b * std::tanh(u);
        };
        d.lipschitz_x = mu + std::abs(c);
        d.growth = std::max(mu + std::abs(c), std::abs(b));
        d.dissipativity = mu - std::abs(c);
    } else if (name == "linear_control") {
        need_params(name, params, 2);
        const double mu = params[0], b = params[1];
        if (mu <= 0.0) throw Error("drift 'linear_control': mu must be positive");
        d.evaluator = [mu, b](const StateVec& x, const ControlVec& a, StateVec& out) {
            out = -mu * x;
            if (a.size() > 0) out[0] += b * a[0];
        };
        d.lipschitz_x = mu;
        d.growth = mu + 5.0 * std::abs(b);  // covers the sampled control box
        d.dissipativity = mu;
    } else if (name == "expansive") {
        need_params(name, params, 0);
        d.evaluator = [](const StateVec& x, const ControlVec&, StateVec& out) { out = x; };
        d.lipschitz_x = 1.0;
        d.growth = 1.0;
        d.dissipativity = 1.0;  // declared but false; validate_assumptions exposes it
    } else {
        throw Error("unknown drift catalog entry '" + name + "'");
    }
    return d;
}

void set_running_cost(CostSpec& cost, const std::string& name, const std::vector<double>& params) {
    cost.running_name = name;
    cost.running_params = params;
    if (name == "constant") {
        need_params(name, params, 1);
        const double c = params[0];
        cost.running = [c](const StateVec&, const ControlVec&) { return c; };
        cost.running_state = [c](const StateVec&) { return c; };
        cost.running_channel = [](int, double) { return 0.0; };
        cost.sup_bound = std::abs(c);
        cost.lipschitz_x = 0.0;
    } else if (name == "tanh_sq_state") {
        need_params(name, params, 1);
        const double w = params[0];
        cost.running = [w](const StateVec& x, const ControlVec&) {
            const double t = std::tanh(x[0]);
            return w * t * t;
        };
        cost.running_state = [w](const StateVec& x) {
            const double t = std::tanh(x[0]);
            return w * t * t;
        };
        cost.running_channel = [](int, double) { return 0.0; };
        cost.sup_bound = std::abs(w);
        cost.lipschitz_x = std::abs(w);  // sup |d/dx tanh^2| < 0.77, declare w
    } else if (name == "tanh_sq") {
        need_params(name, params, 2);
        const double wx = params[0], wu = params[1];
        cost.running = [wx, wu](const StateVec& x, const ControlVec& a) {
            const double tx = std::tanh(x[0]);
            const double tu = std::tanh(a.size() > 0 ? a[0] : 0.0);
            return wx * tx * tx + wu * tu * tu;
        };
        cost.running_state = [wx](const StateVec& x) {
            const double tx = std::tanh(x[0]);
            return wx * tx * tx;
        };
        cost.running_channel = [wu](int j, double v) {
            if (j != 0) return 0.0;
            const double tu = std::tanh(v);
            return wu * tu * tu;
        };
        cost.sup_bound = std::abs(wx) + std::abs(wu);
        cost.lipschitz_x = std::abs(wx);
    } else if (name == "sat_quad_control") {
        need_params(name, params, 2);
        const double wx = params[0], wu = params[1];
        cost.running = [wx, wu](const StateVec& x, const ControlVec& a) {
            const double tx = std::tanh(x[0]);
            const double u = a.size() > 0 ? a[0] : 0.0;
            return wx * tx * tx + wu * std::min(u * u, 1.0);
        };
        cost.running_state = [wx](const StateVec& x) {
            const double tx = std::tanh(x[0]);
            return wx * tx * tx;
        };
        cost.running_channel = [wu](int j, double v) {
            return j == 0 ? wu * std::min(v * v, 1.0) : 0.0;
        };
        cost.sup_bound = std::abs(wx) + std::abs(wu);
        cost.lipschitz_x = std::abs(wx);
    } else {
        throw Error("unknown running-cost catalog entry '" + name + "'");
    }
}

void set_terminal_cost(CostSpec& cost, const std::string& name, const std::vector<double>& params) {
    cost.terminal_name = name;
    cost.terminal_params = params;
    if (name == "zero") {
        need_params(name, params, 0);
        cost.terminal = [](const StateVec&) { return 0.0; };
        cost.terminal_growth = 0.0;
    } else if (name == "abs_first") {
        need_params(name, params, 1);
        const double c = params[0];
        cost.terminal = [c](const StateVec& x) { return c * std::abs(x[0]); };
        cost.terminal_growth = std::abs(c);
    } else if (name == "log_cosh") {
        need_params(name, params, 1);
        const double c = params[0];
        cost.terminal = [c](const StateVec& x) { return c * std::log(std::cosh(x[0])); };
        cost.terminal_growth = std::abs(c);
    } else {
        throw Error("unknown terminal-cost catalog entry '" + name + "'");
    }
}

// ---- builders ------------------------------------------------------------

namespace {

CostSpec make_cost(const CostParams& cp) {
    CostSpec cost;
    set_running_cost(cost, cp.running_name, cp.running_params);
    set_terminal_cost(cost, cp.terminal_name, cp.terminal_params);
    return cost;
}

RandomizationMap default_randomization(int m) {
    RandomizationMap r;
    r.per_mode_weight.resize(m);
    for (int j = 0; j < m; ++j) r.per_mode_weight[j] = std::pow(2.0, -(j + 1));
    r.declared_weight_sum = 1.0;  // sum_j 2^-j over the full sequence
    return r;
}

void audit_builder(const ModelInstance& model) {
    const ValidationReport rep = validate_assumptions(model, 1000, 17);
    for (const auto& c : rep.checks) {
        if (!c.pass)
            throw Error("builder audit failed " + c.name + ": " + c.witness);
    }
}

}  // namespace

ModelInstance build_heat_model(int n_modes, const DriftParams& drift, const CostParams& cost,
                               const Eigen::VectorXd& noise_profile, int m_control_modes) {
    if (n_modes < 1) throw Error("build_heat_model: n_modes must be >= 1");
    ModelInstance model;
    model.op.eigenvalues.resize(n_modes);
    for (int k = 1; k <= n_modes; ++k) model.op.eigenvalues[k - 1] = -(k * M_PI) * (k * M_PI);

    model.noise.per_mode_gain =
        noise_profile.size() == 0 ? Eigen::VectorXd::Ones(n_modes) : noise_profile;
    if (model.noise.per_mode_gain.size() != n_modes)
        throw Error("build_heat_model: noise profile size mismatch");
    // Identity noise on the Dirichlet Laplacian admits gamma = 1/4.
    model.noise.hs_exponent = 0.25;
    model.noise.hs_constant =
        1.05 * hs_profile_sup(model.op.eigenvalues, model.noise.per_mode_gain, model.noise.hs_exponent);

    model.drift = make_drift(drift.name, drift.params);
    if (model.drift.dissipativity <= 0.0) throw Error("build_heat_model: mu <= 0 rejected");
    model.cost = make_cost(cost);
    if (!(model.cost.sup_bound < 1e300)) throw Error("build_heat_model: unbounded running cost rejected");
    model.randomization = default_randomization(m_control_modes);

    model.delta = 1.0;
    model.rho = 0.5 * (0.5 - model.noise.hs_exponent);
    audit_builder(model);
    return model;
}

ModelInstance build_colored_model(int n_modes, const DriftParams& drift, const CostParams& cost,
                                  double eta, double c, int m_control_modes) {
    if (n_modes < 1) throw Error("build_colored_model: n_modes must be >= 1");
    if (!(eta > 0.25)) throw Error("build_colored_model: eta must exceed 1/4");
    if (!(c > 0.0)) throw Error("build_colored_model: eigenvalue scale c must be positive");
    ModelInstance model;
    model.op.eigenvalues.resize(n_modes);
    model.noise.per_mode_gain.resize(n_modes);
    for (int k = 1; k <= n_modes; ++k) {
        model.op.eigenvalues[k - 1] = -c * k;
        model.noise.per_mode_gain[k - 1] = std::pow(c * k, -eta);
    }
    // G = (-A)^(-eta) with eta > 1/4 in dimension 2 keeps the profile summable;
    // on the truncation sum g_k^2 is finite outright, so gamma ~ 0 works.
    model.noise.hs_exponent = 0.01;
    model.noise.hs_constant =
        1.05 * hs_profile_sup(model.op.eigenvalues, model.noise.per_mode_gain, model.noise.hs_exponent);

    model.drift = make_drift(drift.name, drift.params);
    if (model.drift.dissipativity <= 0.0) throw Error("build_colored_model: mu <= 0 rejected");
    model.cost = make_cost(cost);
    model.randomization = default_randomization(m_control_modes);
    model.delta = 1.0;
    model.rho = 0.5 * (0.5 - model.noise.hs_exponent);
    model.eta = eta;
    audit_builder(model);
    return model;
}

// ---- validation ----------------------------------------------------------

double hs_profile_sup(const Eigen::VectorXd& eigenvalues, const Eigen::VectorXd& gains,
                      double gamma, int n_s) {
    double sup = 0.0;
    for (int i = 0; i < n_s; ++i) {
        // log grid on (1e-8, 1)
        const double s = std::pow(10.0, -8.0 + 8.0 * (i + 1) / n_s);
        double sum = 0.0;
        for (int k = 0; k < eigenvalues.size(); ++k)
            sum += gains[k] * gains[k] * std::exp(2.0 * eigenvalues[k] * s);
        sup = std::max(sup, std::pow(s, gamma) * std::sqrt(sum));
    }
    return sup;
}

bool ValidationReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const AssumptionCheck& ValidationReport::at(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw Error("ValidationReport: no check named " + name);
}

namespace {

double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61};

// Deterministic quasi-random sample in [-box, box]^dim, scrambled by seed offset.
Eigen::VectorXd halton_point(std::uint64_t i, int dim, double box, std::uint64_t offset) {
    Eigen::VectorXd x(dim);
    for (int d = 0; d < dim; ++d)
        x[d] = box * (2.0 * halton(i + 1 + offset, kPrimes[d % 18]) - 1.0);
    return x;
}

}  // namespace

ValidationReport validate_assumptions(const ModelInstance& model, int n_samples, std::uint64_t seed) {
    ValidationReport rep;
    const int n = model.n_modes();
    const int m = model.m_modes();
    const double box = 5.0;
    std::uint64_t s = seed;
    const std::uint64_t offset = splitmix64(s) % 4096;

    auto fmt = [](const Eigen::VectorXd& v) {
        std::ostringstream os;
        os << "[" << v.transpose() << "]";
        return os.str();
    };

    // A.1 dissipativity + monotone spectrum
    {
        AssumptionCheck c{"A.1", true, 0.0, "spectrum nonpositive and nonincreasing"};
        for (int k = 0; k < n; ++k) {
            const double ev = model.op.eigenvalues[k];
            if (ev > 0.0 || (k > 0 && ev > model.op.eigenvalues[k - 1])) {
                c.pass = false;
                c.margin = std::min(c.margin, -std::abs(ev));
                c.witness = "eigenvalue index " + std::to_string(k);
            }
        }
        rep.checks.push_back(c);
    }
    // A.2 Hilbert-Schmidt profile
    {
        AssumptionCheck c{"A.2", true, 0.0, ""};
        const double sup = hs_profile_sup(model.op.eigenvalues, model.noise.per_mode_gain,
                                          model.noise.hs_exponent);
        c.margin = model.noise.hs_constant - sup;
        c.pass = c.margin >= 0.0;
        std::ostringstream os;
        os << "sup_s s^gamma |e^{sA}G|_HS = " << sup << " vs M_A = " << model.noise.hs_constant;
        c.witness = os.str();
        rep.checks.push_back(c);
    }
    // A.3 fractional parameter window
    {
        AssumptionCheck c{"A.3", true, 0.0, ""};
        c.margin = 0.5 - model.noise.hs_exponent - model.rho;
        c.pass = model.rho > 0.0 && c.margin > 0.0 && model.delta > 0.0;
        std::ostringstream os;
        os << "rho = " << model.rho << ", gamma = " << model.noise.hs_exponent
           << ", slack 1/2 - gamma - rho = " << c.margin;
        c.witness = os.str();
        rep.checks.push_back(c);
    }
    // A.4 linear growth of F
    {
        AssumptionCheck c{"A.4", true, 1e300, ""};
        for (int i = 0; i < n_samples; ++i) {
            const Eigen::VectorXd x = halton_point(2 * i, n, box, offset);
            const Eigen::VectorXd a = halton_point(2 * i + 1, m, box, offset + 131);
            const double lhs = model.drift(x, a).norm();
            const double margin = model.drift.growth * (1.0 + x.norm()) - lhs;
            if (margin < c.margin) {
                c.margin = margin;
                c.witness = "x=" + fmt(x) + " a=" + fmt(a);
            }
        }
        c.pass = c.margin >= -1e-9;
        rep.checks.push_back(c);
    }
    // A.5 strong dissipativity of F
    {
        AssumptionCheck c{"A.5", true, 1e300, ""};
        const double mu = model.drift.dissipativity;
        for (int i = 0; i < n_samples; ++i) {
            const Eigen::VectorXd x = halton_point(3 * i, n, box, offset + 7);
            const Eigen::VectorXd xp = halton_point(3 * i + 1, n, box, offset + 57);
            const Eigen::VectorXd a = halton_point(3 * i + 2, m, box, offset + 213);
            const Eigen::VectorXd dx = x - xp;
            const double d2 = dx.squaredNorm();
            if (d2 < 1e-14) continue;
            const double inner = (model.drift(x, a) - model.drift(xp, a)).dot(dx);
            const double margin = -mu * d2 - inner;  // require inner <= -mu |dx|^2
            if (margin < c.margin) {
                c.margin = margin;
                c.witness = "x=" + fmt(x) + " x'=" + fmt(xp) + " a=" + fmt(a);
            }
        }
        c.pass = c.margin >= -1e-9;
        rep.checks.push_back(c);
    }
    // A.6 bounded, x-Lipschitz running cost
    {
        AssumptionCheck c{"A.6", true, 1e300, ""};
        for (int i = 0; i < n_samples; ++i) {
            const Eigen::VectorXd x = halton_point(3 * i, n, box, offset + 311);
            const Eigen::VectorXd xp = halton_point(3 * i + 1, n, box, offset + 401);
            const Eigen::VectorXd a = halton_point(3 * i + 2, m, box, offset + 599);
            const double lx = model.cost.running(x, a);
            const double lxp = model.cost.running(xp, a);
            double margin = model.cost.sup_bound - std::abs(lx);
            const double dxn = (x - xp).norm();
            if (dxn > 1e-12)
                margin = std::min(margin, model.cost.lipschitz_x * dxn - std::abs(lx - lxp));
            if (margin < c.margin) {
                c.margin = margin;
                c.witness = "x=" + fmt(x) + " x'=" + fmt(xp) + " a=" + fmt(a);
            }
        }
        c.pass = c.margin >= -1e-9;
        rep.checks.push_back(c);
    }
    // A.7 terminal growth
    {
        AssumptionCheck c{"A.7", true, 1e300, ""};
        for (int i = 0; i < n_samples; ++i) {
            const Eigen::VectorXd x = halton_point(i, n, box, offset + 701);
            const double margin = model.cost.terminal_growth * (1.0 + x.norm()) -
                                  std::abs(model.cost.terminal(x));
            if (margin < c.margin) {
                c.margin = margin;
                c.witness = "x=" + fmt(x);
            }
        }
        c.pass = c.margin >= -1e-9;
        rep.checks.push_back(c);
    }
    // A.8 trace-class injective R
    {
        AssumptionCheck c{"A.8", true, 1e300, ""};
        for (int j = 0; j < m; ++j)
            c.margin = std::min(c.margin, model.randomization.per_mode_weight[j]);
        const double partial = model.randomization.per_mode_weight.sum();
        const double limit = model.randomization.declared_weight_sum;
        std::ostringstream os;
        os << "min weight = " << c.margin << ", partial sum = " << partial
           << (limit > 0 ? " <= declared " + std::to_string(limit) : "");
        c.witness = os.str();
        c.pass = c.margin > 0.0 && (limit <= 0.0 || partial <= limit + 1e-9);
        rep.checks.push_back(c);
    }
    return rep;
}

// ---- serialization -------------------------------------------------------

namespace {
using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}
}  // namespace

std::string model_to_json(const ModelInstance& model) {
    json j;
    j["schema"] = "escl-model/1";
    j["eigenvalues"] = vec_to_json(model.op.eigenvalues);
    j["noise_gains"] = vec_to_json(model.noise.per_mode_gain);
    j["randomization_weights"] = vec_to_json(model.randomization.per_mode_weight);
    j["mu"] = model.drift.dissipativity;
    j["M_ell"] = model.cost.sup_bound;
    j["L_ell"] = model.cost.lipschitz_x;
    j["C_F"] = model.drift.growth;
    j["L_F"] = model.drift.lipschitz_x;
    j["M_A"] = model.noise.hs_constant;
    j["gamma"] = model.noise.hs_exponent;
    j["rho"] = model.rho;
    j["delta"] = model.delta;
    j["eta"] = model.eta ? json(*model.eta) : json(nullptr);
    j["drift"] = {{"name", model.drift.name}, {"params", model.drift.params}};
    j["cost"] = {{"running", {{"name", model.cost.running_name}, {"params", model.cost.running_params}}},
                 {"terminal", {{"name", model.cost.terminal_name}, {"params", model.cost.terminal_params}}}};
    j["randomization_weight_sum"] = model.randomization.declared_weight_sum;
    j["terminal_growth"] = model.cost.terminal_growth;
    return j.dump(2);
}

ModelInstance model_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.value("schema", "") != "escl-model/1") throw Error("model JSON: unknown schema");
    ModelInstance model;
    model.op.eigenvalues = vec_from_json(j.at("eigenvalues"));
    model.op.check();
    model.noise.per_mode_gain = vec_from_json(j.at("noise_gains"));
    model.noise.hs_constant = j.at("M_A").get<double>();
    model.noise.hs_exponent = j.at("gamma").get<double>();
    model.randomization.per_mode_weight = vec_from_json(j.at("randomization_weights"));
    model.randomization.declared_weight_sum = j.value("randomization_weight_sum", 0.0);
    model.randomization.check();

    const auto& dj = j.at("drift");
    model.drift = make_drift(dj.at("name").get<std::string>(), dj.at("params").get<std::vector<double>>());
    model.drift.dissipativity = j.at("mu").get<double>();
    model.drift.growth = j.at("C_F").get<double>();
    model.drift.lipschitz_x = j.at("L_F").get<double>();

    const auto& cj = j.at("cost");
    set_running_cost(model.cost, cj.at("running").at("name").get<std::string>(),
                     cj.at("running").at("params").get<std::vector<double>>());
    set_terminal_cost(model.cost, cj.at("terminal").at("name").get<std::string>(),
                      cj.at("terminal").at("params").get<std::vector<double>>());
    model.cost.sup_bound = j.at("M_ell").get<double>();
    model.cost.lipschitz_x = j.at("L_ell").get<double>();
    if (j.contains("terminal_growth")) model.cost.terminal_growth = j["terminal_growth"].get<double>();

    model.rho = j.at("rho").get<double>();
    model.delta = j.at("delta").get<double>();
    if (!j.at("eta").is_null()) model.eta = j["eta"].get<double>();
    return model;
}

}  // namespace escl
