#include "escl/ergodic.hpp"

#include <algorithm>
#include <cmath>

namespace escl {

namespace {

TimeGrid horizon_grid(double t_end, const BsdeConfig& cfg) {
    const int steps = std::max(1, static_cast<int>(std::ceil(t_end / cfg.h)));
    return TimeGrid{0.0, steps * cfg.h, steps};
}

double fit_line(const std::vector<double>& xs, const std::vector<double>& ys, double& intercept) {
    const int n = static_cast<int>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-14) throw Error("fit_line: degenerate abscissae");
    const double slope = (n * sxy - sx * sy) / det;
    intercept = (sy - slope * sx) / n;
    return slope;
}

}  // namespace

ErgodicEstimate vanishing_discount_sweep(const ModelInstance& model,
                                         const std::vector<StateVec>& x_grid,
                                         const std::vector<double>& beta_ladder,
                                         const BsdeConfig& cfg) {
    if (beta_ladder.size() < 2) throw Error("vanishing_discount_sweep: need >= 2 betas");
    for (std::size_t k = 1; k < beta_ladder.size(); ++k)
        if (beta_ladder[k] >= beta_ladder[k - 1] || beta_ladder[k] <= 0.0)
            throw Error("vanishing_discount_sweep: beta ladder must be decreasing positives");
    int zero_idx = -1;
    for (std::size_t i = 0; i < x_grid.size(); ++i)
        if (x_grid[i].norm() == 0.0) zero_idx = static_cast<int>(i);
    if (zero_idx < 0) throw Error("vanishing_discount_sweep: x_grid must contain the origin");

    const int nb = static_cast<int>(beta_ladder.size());
    const int ng = static_cast<int>(x_grid.size());
    const ControlVec a0 = ControlVec::Zero(model.m_modes());

    // all (beta, grid point) solves are independent jobs
    std::vector<double> values(static_cast<std::size_t>(nb) * ng, 0.0);
    SolveOptions job_opts = cfg.opts;
    job_opts.workers = 1;
    job_opts.want_z = false;
    parallel_for(values.size(), cfg.opts.workers, [&](std::size_t job) {
        const int b = static_cast<int>(job) / ng;
        const int g = static_cast<int>(job) % ng;
        const TimeGrid grid = horizon_grid(12.0, cfg);
        const ConstrainedResult res =
            constrained_limit(model, x_grid[g], a0, beta_ladder[b], cfg.n_ladder, grid,
                              cfg.n_paths, cfg.basis, cfg.seed, job_opts);
        values[job] = res.solution.y0;
    });

    ErgodicEstimate est;
    for (int b = 0; b < nb; ++b) {
        const double v0 = values[static_cast<std::size_t>(b) * ng + zero_idx];
        est.beta_ladder.push_back({beta_ladder[b], v0, beta_ladder[b] * v0});
    }

    // v_hat read at the smallest beta, pinned at the origin
    const int last = nb - 1;
    const double v0_min = est.beta_ladder[last].v0;
    est.v_hat.resize(ng);
    for (int g = 0; g < ng; ++g) {
        est.v_hat[g].x = x_grid[g];
        est.v_hat[g].value = values[static_cast<std::size_t>(last) * ng + g] - v0_min;
    }
    est.v_hat[zero_idx].value = 0.0;

    // affine extrapolation lambda = beta v(0) - c1 beta on the two smallest betas
    const double b1 = beta_ladder[last - 1], b2 = beta_ladder[last];
    const double y1 = est.beta_ladder[last - 1].beta_v0, y2 = est.beta_ladder[last].beta_v0;
    const double c1 = (y1 - y2) / (b1 - b2);
    est.lambda = y2 - c1 * b2;
    for (int b = 0; b < nb; ++b)
        est.fit_residual = std::max(
            est.fit_residual, std::abs(est.beta_ladder[b].beta_v0 - (est.lambda + c1 * beta_ladder[b])));

    // beta-Cauchy diagnostic on v_hat: the last contraction must not exceed the
    // previous one by more than 50% (plus a small noise floor)
    std::vector<double> contraction(nb, 0.0);
    for (int b = 1; b < nb; ++b) {
        double d = 0.0;
        for (int g = 0; g < ng; ++g) {
            const double va = values[static_cast<std::size_t>(b) * ng + g] -
                              values[static_cast<std::size_t>(b) * ng + zero_idx];
            const double vb = values[static_cast<std::size_t>(b - 1) * ng + g] -
                              values[static_cast<std::size_t>(b - 1) * ng + zero_idx];
            d = std::max(d, std::abs(va - vb));
        }
        contraction[b] = d;
    }
    est.cauchy_max = contraction[last];
    if (nb >= 3) est.cauchy_ok = contraction[last] <= 1.5 * contraction[last - 1] + 1e-3;

    for (int g = 1; g < ng; ++g) {
        const double dx = std::abs(est.v_hat[g].x[0] - est.v_hat[g - 1].x[0]);
        if (dx > 1e-12)
            est.vhat_lipschitz = std::max(
                est.vhat_lipschitz, std::abs(est.v_hat[g].value - est.v_hat[g - 1].value) / dx);
    }
    return est;
}

std::function<double(const StateVec&)> make_vhat_interpolator(std::vector<VhatPoint> points) {
    if (points.empty()) throw Error("make_vhat_interpolator: empty grid");
    std::sort(points.begin(), points.end(),
              [](const VhatPoint& a, const VhatPoint& b) { return a.x[0] < b.x[0]; });
    return [pts = std::move(points)](const StateVec& x) {
        const double s = x[0];
        if (s <= pts.front().x[0]) return pts.front().value;
        if (s >= pts.back().x[0]) return pts.back().value;
        auto it = std::upper_bound(pts.begin(), pts.end(), s, [](double v, const VhatPoint& p) {
            return v < p.x[0];
        });
        const VhatPoint& hi = *it;
        const VhatPoint& lo = *(it - 1);
        const double w = (s - lo.x[0]) / (hi.x[0] - lo.x[0]);
        return (1.0 - w) * lo.value + w * hi.value;
    };
}

LongTimeResult long_time_sweep(const ModelInstance& model, const StateVec& x0,
                               const std::vector<double>& t_ladder,
                               const std::function<double(const StateVec&)>& phi,
                               const BsdeConfig& cfg) {
    if (t_ladder.size() < 2) throw Error("long_time_sweep: need >= 2 horizons");
    for (std::size_t k = 1; k < t_ladder.size(); ++k)
        if (t_ladder[k] <= t_ladder[k - 1] || t_ladder[k - 1] <= 0.0)
            throw Error("long_time_sweep: T ladder must be increasing positives");

    const int nt = static_cast<int>(t_ladder.size());
    const ControlVec a0 = ControlVec::Zero(model.m_modes());
    std::vector<double> values(nt, 0.0);
    SolveOptions job_opts = cfg.opts;
    job_opts.workers = 1;
    job_opts.want_z = false;
    parallel_for(static_cast<std::size_t>(nt), cfg.opts.workers, [&](std::size_t j) {
        const int steps = std::max(1, static_cast<int>(std::ceil(t_ladder[j] / cfg.h)));
        const TimeGrid grid{0.0, steps * cfg.h, steps};
        const ConstrainedResult res =
            constrained_limit_finite(model, x0, a0, 0.0, cfg.n_ladder, grid, cfg.n_paths,
                                     cfg.basis, cfg.seed, phi, job_opts);
        values[j] = res.solution.y0;
    });

    LongTimeResult out;
    out.lambda_longtime = fit_line(t_ladder, values, out.vhat_x0_fit);
    for (int j = 0; j < nt; ++j) {
        LongTimeEntry e;
        e.t = t_ladder[j];
        e.value = values[j];
        e.per_time = values[j] / t_ladder[j];
        e.residual = values[j] - out.vhat_x0_fit - out.lambda_longtime * t_ladder[j];
        out.fitted_c = std::max(out.fitted_c, std::abs(e.residual) / (1.0 + x0.norm()));
        out.entries.push_back(e);
    }
    double early = 0.0, late = 0.0;
    for (int j = 0; j < nt; ++j)
        (j < nt / 2 ? early : late) = std::max(j < nt / 2 ? early : late,
                                               std::abs(out.entries[j].residual));
    out.residual_bounded = late <= 2.0 * early + 0.05 * (1.0 + x0.norm());
    return out;
}

ErgodicCostEstimate ergodic_cost(const ModelInstance& model, const ControlPolicy& policy, double t,
                                 double h, int n_paths, std::uint64_t seed, int workers) {
    if (t <= 0.0) throw Error("ergodic_cost: horizon must be positive");
    const int steps = std::max(1, static_cast<int>(std::ceil(t / h)));
    const TimeGrid grid{0.0, steps * h, steps};
    const StateVec x0 = StateVec::Zero(model.n_modes());
    const PathEnsemble ens = simulate_state(model, x0, policy, grid, n_paths, seed, workers);

    std::vector<double> per_path(n_paths, 0.0);
    parallel_for(static_cast<std::size_t>(n_paths), workers, [&](std::size_t p) {
        double acc = 0.0;
        for (int i = 0; i < steps; ++i)
            acc += h * model.cost.running(ens.state_at(static_cast<int>(p), i),
                                          ens.control_at(static_cast<int>(p), i));
        per_path[p] = acc / grid.t_end;
    });
    double sum = 0.0, sum2 = 0.0;
    for (double v : per_path) {
        sum += v;
        sum2 += v * v;
    }
    ErgodicCostEstimate est;
    est.value = sum / n_paths;
    est.std_error = std::sqrt(std::max(0.0, sum2 / n_paths - est.value * est.value) / n_paths);
    est.mixing_warning = grid.t_end < 10.0 / model.drift.dissipativity;
    return est;
}

MartingaleStats martingale_residual(const ModelInstance& model, const ControlPolicy& policy,
                                    const std::function<double(const StateVec&)>& v_hat,
                                    double lambda, const TimeGrid& grid, int n_paths,
                                    std::uint64_t seed, int workers, int n_buckets) {
    const StateVec x0 = StateVec::Zero(model.n_modes());
    const PathEnsemble ens = simulate_state(model, x0, policy, grid, n_paths, seed, workers);
    const double h = grid.step();
    const int S = grid.n_steps;
    n_buckets = std::clamp(n_buckets, 1, S);

    // per-path drift of M_t = vhat(X_t) + int ell - lambda t, per unit time
    std::vector<double> per_path(n_paths, 0.0);
    std::vector<std::vector<double>> bucket_by_path(n_paths);
    parallel_for(static_cast<std::size_t>(n_paths), workers, [&](std::size_t p) {
        std::vector<double> bucket(n_buckets, 0.0);
        double acc = 0.0;
        for (int i = 0; i < S; ++i) {
            const auto x = ens.state_at(static_cast<int>(p), i);
            const auto xn = ens.state_at(static_cast<int>(p), i + 1);
            const double dm = v_hat(xn) - v_hat(x) +
                              h * model.cost.running(x, ens.control_at(static_cast<int>(p), i)) -
                              lambda * h;
            acc += dm;
            bucket[std::min(n_buckets - 1, i * n_buckets / S)] += dm;
        }
        per_path[p] = acc / grid.t_end;
        bucket_by_path[p] = std::move(bucket);
    });

    MartingaleStats st;
    double sum = 0.0, sum2 = 0.0;
    for (double v : per_path) {
        sum += v;
        sum2 += v * v;
    }
    st.mean_drift = sum / n_paths;
    st.std_error = std::sqrt(std::max(0.0, sum2 / n_paths - st.mean_drift * st.mean_drift) / n_paths);

    st.min_bucket_drift = 1e300;
    st.max_bucket_drift = -1e300;
    const double bucket_time = grid.t_end / n_buckets;
    for (int b = 0; b < n_buckets; ++b) {
        double m = 0.0;
        for (int p = 0; p < n_paths; ++p) m += bucket_by_path[p][b];
        m /= n_paths * bucket_time;
        st.min_bucket_drift = std::min(st.min_bucket_drift, m);
        st.max_bucket_drift = std::max(st.max_bucket_drift, m);
    }
    return st;
}

}  // namespace escl
