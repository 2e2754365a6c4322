#include "escl/oracle.hpp"

#include <cmath>

namespace escl {

Eigen::VectorXd Oracle1DModel::grid() const {
    Eigen::VectorXd x(n_x);
    const double dx = (x_max - x_min) / (n_x - 1);
    for (int i = 0; i < n_x; ++i) x[i] = x_min + i * dx;
    return x;
}

void Oracle1DModel::check() const {
    if (!drift || !cost) throw Error("Oracle1DModel: drift/cost not set");
    if (controls.empty()) throw Error("Oracle1DModel: empty control set");
    if (n_x < 3 || x_min >= 0.0 || x_max <= 0.0)
        throw Error("Oracle1DModel: grid must bracket 0 with >= 3 nodes");
    if (sigma < 0.0) throw Error("Oracle1DModel: sigma must be >= 0");

    // sampled dissipativity of b in x, uniformly over the control set
    double mu_sampled = 1e300, sup_ell = 0.0;
    const int ns = 64;
    for (int i = 0; i < ns; ++i) {
        const double x = x_min + (x_max - x_min) * i / (ns - 1);
        const double y = x + 1e-4;
        for (double a : controls) {
            mu_sampled = std::min(mu_sampled, -(drift(y, a) - drift(x, a)) / 1e-4);
            sup_ell = std::max(sup_ell, std::abs(cost(x, a)));
        }
    }
    if (!(mu_sampled > 0.0))
        throw Error("Oracle1DModel: drift not dissipative on the grid (sampled mu = " +
                    std::to_string(mu_sampled) + ")");
    if (!std::isfinite(sup_ell)) throw Error("Oracle1DModel: cost unbounded on the grid");

    if (sigma > 0.0) {
        // stationary envelope N(0, sigma^2/(2 mu)); < 1e-6 mass outside needs ~4.9 sd
        const double sd = sigma / std::sqrt(2.0 * mu_sampled);
        const double half = std::min(-x_min, x_max);
        if (half < 4.9 * sd)
            throw Error("Oracle1DModel: grid too narrow for the stationary mass (need half-width >= " +
                        std::to_string(4.9 * sd) + ")");
    }
}

Oracle1DModel reduce_model(const ModelInstance& model, std::vector<double> controls, double x_min,
                           double x_max, int n_x) {
    if (model.n_modes() < 1) throw Error("reduce_model: empty model");
    const double lam = model.op.eigenvalues[0];
    const int n = model.n_modes(), m = model.m_modes();
    const auto drift = model.drift;
    const auto running = model.cost.running;
    Oracle1DModel o;
    o.drift = [lam, drift, n, m](double x, double a) {
        StateVec xs = StateVec::Zero(n), f(n);
        ControlVec as = ControlVec::Zero(m);
        xs[0] = x;
        as[0] = a;
        drift.evaluator(xs, as, f);
        return lam * x + f[0];
    };
    o.sigma = model.noise.per_mode_gain[0];
    o.cost = [running, n, m](double x, double a) {
        StateVec xs = StateVec::Zero(n);
        ControlVec as = ControlVec::Zero(m);
        xs[0] = x;
        as[0] = a;
        return running(xs, as);
    };
    o.controls = std::move(controls);
    o.x_min = x_min;
    o.x_max = x_max;
    o.n_x = n_x;
    o.mu = model.drift.dissipativity - lam;  // diagonal mode adds -lam to the contraction rate
    o.check();
    return o;
}

namespace {

// Thomas solve of a tridiagonal system; diag is strictly dominant here.
void tridiag_solve(Eigen::VectorXd& lower, Eigen::VectorXd& diag, Eigen::VectorXd& upper,
                   Eigen::VectorXd& rhs) {
    const int n = static_cast<int>(diag.size());
    for (int i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (int i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Upwind generator row at node i for action a; reflecting boundaries fold the
// out-of-grid coefficient into the diagonal.
struct Row {
    double lower = 0.0, diag = 0.0, upper = 0.0;  // coefficients of L v at i
};

Row generator_row(const Oracle1DModel& model, double x, double a, double dx, bool left_edge,
                  bool right_edge) {
    const double b = model.drift(x, a);
    const double bp = std::max(b, 0.0), bm = std::max(-b, 0.0);
    const double s = 0.5 * model.sigma * model.sigma / (dx * dx);
    Row r;
    r.upper = bp / dx + s;
    r.lower = bm / dx + s;
    r.diag = -(r.upper + r.lower);
    if (left_edge) {
        r.diag += r.lower;
        r.lower = 0.0;
    }
    if (right_edge) {
        r.diag += r.upper;
        r.upper = 0.0;
    }
    return r;
}

double apply_row(const Row& r, const Eigen::VectorXd& v, int i) {
    double out = r.diag * v[i];
    if (r.lower != 0.0) out += r.lower * v[i - 1];
    if (r.upper != 0.0) out += r.upper * v[i + 1];
    return out;
}

}  // namespace

HjbSolution hjb_discounted(const Oracle1DModel& model, double beta) {
    if (beta <= 0.0) throw Error("hjb_discounted: beta must be positive");
    model.check();
    const Eigen::VectorXd xs = model.grid();
    const int n = model.n_x;
    const double dx = (model.x_max - model.x_min) / (n - 1);
    const int na = static_cast<int>(model.controls.size());

    std::vector<int> policy(n, 0);
    for (int i = 0; i < n; ++i) {
        double best = model.cost(xs[i], model.controls[0]);
        for (int a = 1; a < na; ++a) {
            const double c = model.cost(xs[i], model.controls[a]);
            if (c < best) {
                best = c;
                policy[i] = a;
            }
        }
    }

    HjbSolution sol;
    sol.v = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd lower(n), diag(n), upper(n), rhs(n);
    for (sol.sweeps = 1; sol.sweeps <= 500; ++sol.sweeps) {
        for (int i = 0; i < n; ++i) {
            const double a = model.controls[policy[i]];
            const Row r = generator_row(model, xs[i], a, dx, i == 0, i == n - 1);
            lower[i] = -r.lower;
            diag[i] = beta - r.diag;
            upper[i] = -r.upper;
            rhs[i] = model.cost(xs[i], a);
        }
        tridiag_solve(lower, diag, upper, rhs);
        sol.v = rhs;

        bool changed = false;
        sol.residual = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = 1e300;
            int best_a = policy[i];
            for (int a = 0; a < na; ++a) {
                const Row r =
                    generator_row(model, xs[i], model.controls[a], dx, i == 0, i == n - 1);
                const double q = model.cost(xs[i], model.controls[a]) + apply_row(r, sol.v, i);
                if (q < best - 1e-12) {
                    best = q;
                    best_a = a;
                }
            }
            if (best_a != policy[i]) {
                policy[i] = best_a;
                changed = true;
            }
            sol.residual = std::max(sol.residual, std::abs(beta * sol.v[i] - best));
        }
        if (!changed && sol.residual < 1e-8) break;
        if (sol.sweeps == 500)
            throw Error("hjb_discounted: policy iteration did not converge (residual " +
                        std::to_string(sol.residual) + ")");
    }
    sol.policy.resize(n);
    for (int i = 0; i < n; ++i) sol.policy[i] = model.controls[policy[i]];
    return sol;
}

double oracle_interp(const Oracle1DModel& model, const Eigen::VectorXd& values, double x) {
    const double dx = (model.x_max - model.x_min) / (model.n_x - 1);
    const double s = std::clamp((x - model.x_min) / dx, 0.0, double(model.n_x - 1));
    const int i = std::min(model.n_x - 2, static_cast<int>(s));
    const double w = s - i;
    return (1.0 - w) * values[i] + w * values[i + 1];
}

ErgodicHjb hjb_ergodic(const Oracle1DModel& model, double beta_small) {
    const HjbSolution d = hjb_discounted(model, beta_small);
    ErgodicHjb e;
    const double v0 = oracle_interp(model, d.v, 0.0);
    e.lambda = beta_small * v0;
    e.v_hat = d.v.array() - v0;
    e.policy = d.policy;
    return e;
}

Eigen::VectorXd hjb_parabolic(const Oracle1DModel& model, double t,
                              const std::function<double(double)>& phi, int n_t) {
    if (t < 0.0) throw Error("hjb_parabolic: negative horizon");
    model.check();
    const Eigen::VectorXd xs = model.grid();
    const int n = model.n_x;
    const double dx = (model.x_max - model.x_min) / (n - 1);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = phi ? phi(xs[i]) : 0.0;
    if (t == 0.0) return v;
    if (n_t <= 0) n_t = std::max(10, static_cast<int>(std::ceil(t / 0.01)));
    const double dt = t / n_t;
    const int na = static_cast<int>(model.controls.size());

    Eigen::VectorXd lower(n), diag(n), upper(n), rhs(n);
    for (int m = 0; m < n_t; ++m) {
        // freeze the pointwise minimizer from the current value, then implicit step
        for (int i = 0; i < n; ++i) {
            double best = 1e300;
            int best_a = 0;
            for (int a = 0; a < na; ++a) {
                const Row r =
                    generator_row(model, xs[i], model.controls[a], dx, i == 0, i == n - 1);
                const double q = model.cost(xs[i], model.controls[a]) + apply_row(r, v, i);
                if (q < best - 1e-12) {
                    best = q;
                    best_a = a;
                }
            }
            const double a = model.controls[best_a];
            const Row r = generator_row(model, xs[i], a, dx, i == 0, i == n - 1);
            lower[i] = -dt * r.lower;
            diag[i] = 1.0 - dt * r.diag;
            upper[i] = -dt * r.upper;
            rhs[i] = v[i] + dt * model.cost(xs[i], a);
        }
        tridiag_solve(lower, diag, upper, rhs);
        v = rhs;
    }
    return v;
}

ControlVec oracle_feedback(const Oracle1DModel& model, const Eigen::VectorXd& policy, double x,
                           int m_modes) {
    ControlVec u = ControlVec::Zero(m_modes);
    u[0] = oracle_interp(model, policy, x);
    return u;
}

namespace {

// probabilists' Gauss-Hermite nodes/weights (weights sum to 1)
std::vector<std::pair<double, double>> gh_rule(int n) {
    const double s2 = std::sqrt(2.0), isp = 1.0 / std::sqrt(M_PI);
    switch (n) {
        case 1:
            return {{0.0, 1.0}};
        case 2:
            return {{-1.0, 0.5}, {1.0, 0.5}};
        case 3:
            return {{-1.2247448713915890 * s2, 0.2954089751509193 * isp},
                    {0.0, 1.1816359006036774 * isp},
                    {1.2247448713915890 * s2, 0.2954089751509193 * isp}};
        case 4:
            return {{-1.6506801238857845 * s2, 0.08131283544724518 * isp},
                    {-0.5246476232752903 * s2, 0.8049140900055128 * isp},
                    {0.5246476232752903 * s2, 0.8049140900055128 * isp},
                    {1.6506801238857845 * s2, 0.08131283544724518 * isp}};
        case 5:
            return {{-2.0201828704560856 * s2, 0.019953242059045913 * isp},
                    {-0.9585724646138185 * s2, 0.3936193231522411 * isp},
                    {0.0, 0.9453087204829419 * isp},
                    {0.9585724646138185 * s2, 0.3936193231522411 * isp},
                    {2.0201828704560856 * s2, 0.019953242059045913 * isp}};
        default:
            throw Error("brute_force_value: quadrature order must be in [1,5]");
    }
}

}  // namespace

BruteForceResult brute_force_value(const Oracle1DModel& model, double x0, double t, int n_steps,
                                   const std::function<double(double)>& phi, int n_quad) {
    if (n_steps < 1 || n_steps > 6) throw Error("brute_force_value: n_steps must be in [1,6]");
    const int na = static_cast<int>(model.controls.size());
    double budget = 1.0;
    for (int s = 0; s < n_steps; ++s) budget *= na;
    if (budget > 1e6) throw Error("brute_force_value: enumeration budget exceeded");
    const auto quad = gh_rule(n_quad);
    const double dt = t / n_steps;
    const double noise = model.sigma * std::sqrt(dt);

    BruteForceResult out;
    out.value = 1e300;
    out.n_sequences = static_cast<long>(budget);
    std::vector<int> seq(n_steps, 0);
    std::vector<std::pair<double, double>> particles, next;  // (x, weight)
    for (long s = 0; s < out.n_sequences; ++s) {
        particles.assign(1, {x0, 1.0});
        double cost = 0.0;
        for (int i = 0; i < n_steps; ++i) {
            const double a = model.controls[seq[i]];
            next.clear();
            for (const auto& [x, w] : particles) {
                cost += dt * w * model.cost(x, a);
                const double mean = x + dt * model.drift(x, a);
                for (const auto& [node, qw] : quad) next.push_back({mean + noise * node, w * qw});
            }
            particles.swap(next);
        }
        if (phi)
            for (const auto& [x, w] : particles) cost += w * phi(x);
        if (cost < out.value) {
            out.value = cost;
            out.best_sequence.assign(n_steps, 0.0);
            for (int i = 0; i < n_steps; ++i) out.best_sequence[i] = model.controls[seq[i]];
        }
        // odometer increment over control indices
        for (int i = 0; i < n_steps; ++i) {
            if (++seq[i] < na) break;
            seq[i] = 0;
        }
    }
    return out;
}

}  // namespace escl
