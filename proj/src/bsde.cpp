#include "escl/bsde.hpp"

#include <cmath>

namespace escl {

std::vector<std::vector<int>> RegressionBasis::monomials(int f, int degree, int first_i,
                                                         int i_degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(f, 0);
    // lexicographic enumeration of multi-indices with total degree <= degree;
    // monomials touching a capped feature keep total degree <= i_degree
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == f) {
            if (first_i >= 0 && i_degree >= 0) {
                int total = 0, itotal = 0;
                for (int j = 0; j < f; ++j) {
                    total += cur[j];
                    if (j >= first_i) itotal += cur[j];
                }
                if (itotal > 0 && total > i_degree) return;
            }
            out.push_back(cur);
            return;
        }
        for (int d = 0; d <= remaining; ++d) {
            cur[pos] = d;
            rec(pos + 1, remaining - d);
        }
        cur[pos] = 0;
    };
    rec(0, degree);
    return out;
}

namespace {

void raw_features(const RegressionBasis& basis, int n_modes, int m_modes, const StateVec& x,
                  const ControlVec& ch, Eigen::VectorXd& out) {
    const int sx = std::min(n_modes, basis.max_x_features);
    const int si = std::min(m_modes, basis.max_i_features);
    out.resize(sx + si);
    for (int k = 0; k < sx; ++k) out[k] = x[k];
    for (int j = 0; j < si; ++j) out[sx + j] = basis.squash_i ? std::tanh(ch[j]) : ch[j];
}

double monomial_value(const std::vector<int>& pw, const Eigen::VectorXd& s) {
    double v = 1.0;
    for (std::size_t j = 0; j < pw.size(); ++j)
        for (int d = 0; d < pw[j]; ++d) v *= s[j];
    return v;
}

// d(monomial)/d(s_j)
double monomial_derivative(const std::vector<int>& pw, const Eigen::VectorXd& s, int j) {
    if (pw[j] == 0) return 0.0;
    double v = pw[j];
    for (std::size_t f = 0; f < pw.size(); ++f) {
        const int d = pw[f] - (static_cast<int>(f) == j ? 1 : 0);
        for (int k = 0; k < d; ++k) v *= s[f];
    }
    return v;
}

struct SweepSpec {
    const ModelInstance* model = nullptr;
    const RandomizedPair* pair = nullptr;
    StateVec x0;    // readout point: the dispersed-channel ensemble does not
    ControlVec a0;  // record where the caller wants the value evaluated

    double beta = 0.0;
    std::vector<int> ns;  // ascending penalization ladder
    bool infinite_horizon = true;
    std::function<double(const StateVec&)> phi;  // finite-horizon terminal
    RegressionBasis basis;
    SolveOptions opts;
};

std::vector<BsdeSolution> backward_sweep(const SweepSpec& spec) {
    const ModelInstance& model = *spec.model;
    const PathEnsemble& ens = spec.pair->ensemble;
    const int N = ens.n_paths;
    const int S = ens.grid.n_steps;
    const int nm = ens.n_modes;
    const int mm = ens.m_modes;
    const double h = ens.grid.step();
    const int E = static_cast<int>(spec.ns.size());
    const int big = E - 1;

    Eigen::VectorXd probe;
    raw_features(spec.basis, nm, mm, ens.state_at(0, 0), spec.pair->channel_at(0, 0), probe);
    const int f = static_cast<int>(probe.size());
    const int sx = std::min(nm, spec.basis.max_x_features);
    const int si = f - sx;  // channel count
    const auto powers =
        RegressionBasis::monomials(f, spec.basis.degree, sx, spec.basis.i_degree);
    const int p = static_cast<int>(powers.size());

    std::vector<BsdeSolution> sols(E);
    for (int e = 0; e < E; ++e) {
        BsdeSolution& s = sols[e];
        s.beta = spec.beta;
        s.horizon = ens.grid.t_end;
        s.penalization_n = spec.ns[e];
        s.grid = ens.grid;
        s.basis = spec.basis;
        s.n_modes = nm;
        s.m_modes = mm;
        s.powers = powers;
        s.r_weights = model.randomization.per_mode_weight;
        s.noise_gains = model.noise.per_mode_gain;
        s.scalers.resize(S);
        s.y_coeffs.resize(S);
        s.cont_coeffs.resize(S);
    }

    const double clip = spec.infinite_horizon ? model.cost.sup_bound / spec.beta : 0.0;

    Eigen::MatrixXd Y(N, E);
    for (int q = 0; q < N; ++q) {
        const double yT =
            spec.infinite_horizon ? 0.0 : (spec.phi ? spec.phi(ens.state_at(q, S)) : 0.0);
        for (int e = 0; e < E; ++e) Y(q, e) = yT;
    }

    std::vector<double> gnorm_mean(S, 0.0);  // largest entry, for K reconstruction
    std::vector<std::vector<double>> gnorm_big;
    if (spec.opts.store_k_paths) gnorm_big.assign(S, std::vector<double>(N, 0.0));
    std::vector<double> e_int_gamma(E, 0.0);
    long clip_events = 0, clip_evals = 0;
    double sup_z = 0.0, growth_c = 0.0, min_k_inc = 1e300;
    std::vector<double> mean_y_nodes(S + 1, 0.0);
    for (int q = 0; q < N; ++q) mean_y_nodes[S] += Y(q, big);
    mean_y_nodes[S] /= N;

    Eigen::MatrixXd R(N, f), Sf(N, f), Phi(N, p), gn(N, E);
    Eigen::VectorXd raw(f), dphi(p);

    for (int i = S - 1; i >= 0; --i) {
        const double t = ens.grid.node(i);
        // raw features and per-step standardization (constant features frozen)
        for (int q = 0; q < N; ++q) {
            raw_features(spec.basis, nm, mm, ens.state_at(q, i), spec.pair->channel_at(q, i), raw);
            R.row(q) = raw;
        }
        StepScaler scaler;
        scaler.mean = R.colwise().mean();
        scaler.inv_sd.resize(f);
        for (int j = 0; j < f; ++j) {
            const double sd =
                std::sqrt(std::max(0.0, (R.col(j).array() - scaler.mean[j]).square().mean()));
            scaler.inv_sd[j] = sd > 1e-10 ? 1.0 / sd : 0.0;
        }
        parallel_for(static_cast<std::size_t>(N), spec.opts.workers, [&](std::size_t q) {
            thread_local Eigen::MatrixXd pw;
            pw.resize(f, spec.basis.degree + 1);
            Sf.row(q) =
                ((R.row(q).transpose() - scaler.mean).array() * scaler.inv_sd.array()).matrix();
            for (int j = 0; j < f; ++j) {
                pw(j, 0) = 1.0;
                for (int d = 1; d <= spec.basis.degree; ++d) pw(j, d) = pw(j, d - 1) * Sf(q, j);
            }
            for (int c = 0; c < p; ++c) {
                double v = 1.0;
                for (int j = 0; j < f; ++j) v *= pw(j, powers[c][j]);
                Phi(q, c) = v;
            }
        });

        Eigen::MatrixXd A = Phi.transpose() * Phi;
        A.diagonal().array() += 1e-10 * A.trace() / p + 1e-12;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() != Eigen::Success)
            throw Error("bsde: ill-conditioned regression at step " + std::to_string(i));

        // continuation fits E[Y_{i+1} | X_i, I_i] per ladder entry; the full
        // fit backs the stored representation, the two half-sample fits back
        // the cross-fitted displaced-channel search below
        const Eigen::MatrixXd cont = ldlt.solve(Phi.transpose() * Y);
        if (!cont.allFinite())
            throw Error("bsde: ill-conditioned regression at step " + std::to_string(i));
        std::array<Eigen::MatrixXd, 2> cont_half;
        {
            std::array<Eigen::MatrixXd, 2> ah;
            std::array<Eigen::MatrixXd, 2> bh;
            for (int half = 0; half < 2; ++half) {
                ah[half].setZero(p, p);
                bh[half].setZero(p, E);
            }
            for (int q = 0; q < N; ++q) {
                const int half = q & 1;
                ah[half].noalias() += Phi.row(q).transpose() * Phi.row(q);
                bh[half].noalias() += Phi.row(q).transpose() * Y.row(q);
            }
            for (int half = 0; half < 2; ++half) {
                ah[half].diagonal().array() += 1e-10 * ah[half].trace() / p + 1e-12;
                cont_half[half] = Eigen::LDLT<Eigen::MatrixXd>(ah[half]).solve(bh[half]);
                if (!cont_half[half].allFinite())
                    throw Error("bsde: ill-conditioned regression at step " + std::to_string(i));
            }
        }
        // Penalization via the exact one-step Hopf-Lax operator of the
        // Hamiltonian n|R grad_I u|:
        //   min { C(x, I') : |R^{-1}(I' - I)| <= n h },
        // searched coordinate-wise with per-channel radius n h r_j. This is
        // monotone and stable for any n h, unlike an explicit Euler treatment
        // of -n|Gamma|, and yields dK = C - min >= 0 with |Gamma| = dK/(n h).
        // Z = G grad_x u is tracked on the largest entry for the sup bound.
        gn.setZero();
        Eigen::MatrixXd stay(N, E);
        Eigen::VectorXd z_of_q = Eigen::VectorXd::Zero(N);
        // the displaced-channel search stays on the empirical feature support:
        // the fit only estimates the conditional expectation there, and a
        // high-degree polynomial can plunge under extrapolation
        Eigen::VectorXd slo = Sf.colwise().minCoeff().cwiseMax(-2.5);
        Eigen::VectorXd shi = Sf.colwise().maxCoeff().cwiseMin(2.5);
        // per-channel 1-D collapse of the basis: grouping monomials by their
        // exponent in feature j turns each candidate evaluation into a Horner
        // step instead of a full basis evaluation
        const int dmax = spec.basis.degree;
        std::vector<std::vector<int>> exp_of(si, std::vector<int>(p, 0));
        for (int j = 0; j < si; ++j)
            for (int c = 0; c < p; ++c) exp_of[j][c] = powers[c][sx + j];
        const bool separable_cost = static_cast<bool>(model.cost.running_channel);
        // the search probes ~10 displaced channel values per path and step, so
        // h * running_channel is tabulated once per step on a fine grid and
        // linearly interpolated (exact state part stays in ell0)
        struct CostTab {
            double lo = 0.0, inv_dx = 0.0;
            std::vector<double> v;
        };
        std::vector<CostTab> ctab(separable_cost ? si : 0);
        for (int j = 0; separable_cost && j < si; ++j) {
            double clo = 1e300, chi = -1e300;
            for (int q = 0; q < N; ++q) {
                const double c = spec.pair->channel_at(q, i)[j];
                clo = std::min(clo, c);
                chi = std::max(chi, c);
            }
            const double wmax = spec.ns.back() * h * sols[0].r_weights[j];
            clo -= wmax;
            chi += wmax;
            constexpr int kTabSize = 4096;
            CostTab& tb = ctab[j];
            tb.lo = clo;
            tb.inv_dx = kTabSize / std::max(chi - clo, 1e-12);
            tb.v.resize(kTabSize + 2);
            for (std::size_t k = 0; k < tb.v.size(); ++k)
                tb.v[k] = h * model.cost.running_channel(j, clo + k / tb.inv_dx);
        }
        auto channel_cost = [&](int j, double v) {
            const CostTab& tb = ctab[j];
            double u = std::clamp((v - tb.lo) * tb.inv_dx, 0.0,
                                  static_cast<double>(tb.v.size() - 2));
            const int k = static_cast<int>(u);
            return tb.v[k] + (u - k) * (tb.v[k + 1] - tb.v[k]);
        };
        parallel_for(static_cast<std::size_t>(N), spec.opts.workers, [&](std::size_t q) {
            // scratch is reused across paths; the per-index work stays
            // deterministic, so worker count does not affect results
            thread_local Eigen::VectorXd sprime, base, dphi, s;
            thread_local Eigen::MatrixXd poly_own, poly_other;
            thread_local StateVec xq;
            thread_local ControlVec chq;
            sprime.resize(f);
            base.resize(p);
            dphi.resize(p);
            poly_own.resize(dmax + 1, E);
            poly_other.resize(dmax + 1, E);
            s = Sf.row(q);
            xq = ens.state_at(q, i);
            chq = spec.pair->channel_at(q, i);
            // cross-fitting: the displacement is chosen on the own-half fit and
            // its value is read off the other half's independent fit, so the
            // min does not harvest the fit noise it optimized over
            const Eigen::MatrixXd& own = cont_half[q & 1];
            const Eigen::MatrixXd& other = cont_half[1 - (q & 1)];
            const double ell0 = h * model.cost.running(xq, chq);
            for (int e = 0; e < E; ++e) {
                stay(q, e) = Phi.row(q) * other.col(e) + ell0;
                gn(q, e) = stay(q, e);  // value of the best displacement found
            }
            Eigen::VectorXd best_dec(E);
            for (int e = 0; e < E; ++e) best_dec[e] = Phi.row(q) * own.col(e) + ell0;
            for (int j = 0; j < si; ++j) {
                if (scaler.inv_sd[sx + j] == 0.0) continue;
                const double ij = chq[j];
                const double cj0 = separable_cost ? channel_cost(j, ij) : 0.0;
                sprime = s;
                sprime[sx + j] = 1.0;
                for (int c = 0; c < p; ++c) base[c] = monomial_value(powers[c], sprime);
                poly_own.setZero();
                poly_other.setZero();
                for (int c = 0; c < p; ++c) {
                    const int d = exp_of[j][c];
                    for (int e = 0; e < E; ++e) {
                        poly_own(d, e) += base[c] * own(c, e);
                        poly_other(d, e) += base[c] * other(c, e);
                    }
                }
                // geometric displacement fractions keep small moves reachable
                // when the window n h r_j is wide
                static constexpr double kFrac[] = {1.0,       2.0 / 3.0,  1.0 / 3.0,
                                                   1.0 / 6.0, 1.0 / 12.0, 1.0 / 24.0};
                for (int e = 0; e < E; ++e) {
                    const double w = spec.ns[e] * h * sols[0].r_weights[j];
                    for (int g = -6; g <= 6; ++g) {
                        if (g == 0) continue;
                        const double frac = kFrac[std::abs(g) - 1] * (g > 0 ? 1.0 : -1.0);
                        const double shifted = ij + w * frac;
                        const double rawj = spec.basis.squash_i ? std::tanh(shifted) : shifted;
                        const double sj =
                            std::clamp((rawj - scaler.mean[sx + j]) * scaler.inv_sd[sx + j],
                                       slo[sx + j], shi[sx + j]);
                        // the running cost moves with the channel so the large-n
                        // limit of the step operator is the dynamic-programming
                        // value update rather than a channel-averaged cost
                        double ellp;
                        if (separable_cost) {
                            ellp = ell0 + channel_cost(j, shifted) - cj0;
                        } else {
                            chq[j] = shifted;
                            ellp = h * model.cost.running(xq, chq);
                            chq[j] = ij;
                        }
                        double dec = poly_own(dmax, e);
                        for (int d = dmax - 1; d >= 0; --d) dec = dec * sj + poly_own(d, e);
                        dec += ellp;
                        if (dec < best_dec[e]) {
                            best_dec[e] = dec;
                            double val = poly_other(dmax, e);
                            for (int d = dmax - 1; d >= 0; --d) val = val * sj + poly_other(d, e);
                            gn(q, e) = val + ellp;
                        }
                    }
                }
            }
            if (spec.opts.want_z) {
                double z2n = 0.0;
                for (int k = 0; k < sx; ++k) {
                    if (scaler.inv_sd[k] == 0.0) continue;
                    for (int c = 0; c < p; ++c) dphi[c] = monomial_derivative(powers[c], s, k);
                    const double zk =
                        sols[0].noise_gains[k] * scaler.inv_sd[k] * dphi.dot(cont.col(big));
                    z2n += zk * zk;
                }
                z_of_q[q] = std::sqrt(z2n);
            }
        });
        if (spec.opts.want_z) sup_z = std::max(sup_z, z_of_q.maxCoeff());

        const double dk_forced = spec.opts.forced_k_rate ? h * spec.opts.forced_k_rate(t) : 0.0;

        for (int e = 0; e < E; ++e) {
            const double n_pen = spec.ns[e];
            double gsum = 0.0;
            for (int q = 0; q < N; ++q) {
                // the value update keeps the signed difference -- the cross-fit
                // evaluation noise is mean zero and rectifying it would bias Y
                // down -- while the K reconstruction uses the nonnegative part
                double dk = stay(q, e) - gn(q, e);
                const double gamma_eff = std::max(0.0, dk) / (n_pen * h);
                if (spec.opts.smoothing_k)
                    dk = n_pen * h *
                         std::sqrt(gamma_eff * gamma_eff + 1.0 / *spec.opts.smoothing_k);
                gsum += gamma_eff;
                if (e == big) {
                    if (spec.opts.store_k_paths) gnorm_big[i][q] = gamma_eff;
                    min_k_inc = std::min(min_k_inc, std::max(0.0, dk));
                }
                // implicit in Y: Y = C + h ell - dK - dK_forced - h beta Y
                double y = (stay(q, e) - dk - dk_forced) / (1.0 + spec.beta * h);
                if (spec.infinite_horizon) {
                    ++clip_evals;
                    if (std::abs(y) > clip) {
                        ++clip_events;
                        y = std::clamp(y, -clip, clip);
                    }
                }
                Y(q, e) = y;
                if (e == big && !spec.infinite_horizon)
                    growth_c = std::max(growth_c, std::abs(y) / (1.0 + ens.state_at(q, i).norm()));
            }
            e_int_gamma[e] += h * gsum / N;
            if (e == big) gnorm_mean[i] = gsum / N;
        }

        // store representations at step i
        const Eigen::MatrixXd yfit = ldlt.solve(Phi.transpose() * Y);
        for (int e = 0; e < E; ++e) {
            sols[e].scalers[i] = scaler;
            sols[e].cont_coeffs[i] = cont.col(e);
            sols[e].y_coeffs[i] = yfit.col(e);
        }
        for (int q = 0; q < N; ++q) mean_y_nodes[i] += Y(q, big);
        mean_y_nodes[i] /= N;
    }

    // forward K reconstruction for the largest entry
    std::vector<double> k_mean(S + 1, 0.0);
    for (int i = 0; i < S; ++i) k_mean[i + 1] = k_mean[i] + h * spec.ns[big] * gnorm_mean[i];

    for (int e = 0; e < E; ++e) {
        BsdeSolution& s = sols[e];
        // the channel start is dispersed for exploration, so the value at the
        // requested (x0, a0) is read off the step-0 fit of the updated Y
        s.y0 = s.evaluate_y(0, spec.x0, spec.a0);
        s.diag.e_int_gamma = e_int_gamma[e];
        s.mean_y = mean_y_nodes;
        s.k_mean = k_mean;
        s.diag.clip_rate = clip_evals > 0 ? static_cast<double>(clip_events) / clip_evals : 0.0;
        s.diag.sup_z = sup_z;
        s.diag.growth_constant = growth_c;
        s.diag.min_k_increment = min_k_inc < 1e300 ? min_k_inc : 0.0;
    }
    if (spec.opts.store_k_paths) {
        BsdeSolution& s = sols[big];
        s.k_path.assign(static_cast<std::size_t>(N) * (S + 1), 0.0);
        for (int q = 0; q < N; ++q)
            for (int i = 0; i < S; ++i)
                s.k_path[q * (S + 1) + i + 1] =
                    s.k_path[q * (S + 1) + i] + h * spec.ns[big] * gnorm_big[i][q];
    }
    return sols;
}

Eigen::VectorXd standardized_features(const BsdeSolution& s, int step, const StateVec& x,
                                      const ControlVec& ch, Eigen::VectorXd& raw) {
    raw_features(s.basis, s.n_modes, s.m_modes, x, ch, raw);
    const StepScaler& sc = s.scalers[step];
    return ((raw - sc.mean).array() * sc.inv_sd.array()).matrix();
}

}  // namespace

double BsdeSolution::evaluate_y(int step, const StateVec& x, const ControlVec& ch) const {
    if (step < 0 || step >= static_cast<int>(y_coeffs.size()))
        throw Error("BsdeSolution::evaluate_y: step out of range");
    Eigen::VectorXd raw;
    const Eigen::VectorXd s = standardized_features(*this, step, x, ch, raw);
    double out = 0.0;
    for (std::size_t c = 0; c < powers.size(); ++c)
        out += y_coeffs[step][static_cast<int>(c)] * monomial_value(powers[c], s);
    return out;
}

Eigen::VectorXd BsdeSolution::evaluate_gamma(int step, const StateVec& x,
                                             const ControlVec& ch) const {
    if (step < 0 || step >= static_cast<int>(cont_coeffs.size()))
        throw Error("BsdeSolution::evaluate_gamma: step out of range");
    Eigen::VectorXd raw;
    const Eigen::VectorXd s = standardized_features(*this, step, x, ch, raw);
    const int sx = std::min(n_modes, basis.max_x_features);
    const int si = static_cast<int>(s.size()) - sx;
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(m_modes);
    for (int j = 0; j < si; ++j) {
        const double chain = r_weights[j] * scalers[step].inv_sd[sx + j] *
                             (basis.squash_i ? 1.0 - raw[sx + j] * raw[sx + j] : 1.0);
        if (chain == 0.0) continue;
        double d = 0.0;
        for (std::size_t c = 0; c < powers.size(); ++c)
            d += cont_coeffs[step][static_cast<int>(c)] * monomial_derivative(powers[c], s, sx + j);
        gamma[j] = chain * d;
    }
    return gamma;
}

Eigen::VectorXd BsdeSolution::evaluate_z(int step, const StateVec& x, const ControlVec& ch) const {
    if (step < 0 || step >= static_cast<int>(cont_coeffs.size()))
        throw Error("BsdeSolution::evaluate_z: step out of range");
    Eigen::VectorXd raw;
    const Eigen::VectorXd s = standardized_features(*this, step, x, ch, raw);
    const int sx = std::min(n_modes, basis.max_x_features);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n_modes);
    for (int k = 0; k < sx; ++k) {
        if (scalers[step].inv_sd[k] == 0.0) continue;
        double d = 0.0;
        for (std::size_t c = 0; c < powers.size(); ++c)
            d += cont_coeffs[step][static_cast<int>(c)] * monomial_derivative(powers[c], s, k);
        z[k] = noise_gains[k] * scalers[step].inv_sd[k] * d;
    }
    return z;
}

namespace {

RandomizedPair representation_pair(const ModelInstance& model, const StateVec& x0,
                                   const ControlVec& a0, const TimeGrid& grid, int n_paths,
                                   std::uint64_t seed, const SolveOptions& opts) {
    // the representation pair is the uncontrolled randomized system (alpha == 0)
    // with a dispersed channel start for regression support
    return simulate_randomized_pair(model, x0, a0, ControlPolicy::zero(model.m_modes()), grid,
                                    n_paths, seed, opts.workers, opts.init_channel_spread,
                                    /*antithetic=*/false, opts.init_state_spread);
}

void check_tail(const ModelInstance& model, double beta, const TimeGrid& grid, double tol) {
    const double tail = model.cost.sup_bound * std::exp(-beta * grid.t_end) / beta;
    if (tail > tol)
        throw Error("bsde: truncation tail " + std::to_string(tail) + " exceeds tolerance " +
                    std::to_string(tol) + "; need t_end >= " +
                    std::to_string(required_horizon(model.cost.sup_bound, beta, tol)));
}

}  // namespace

BsdeSolution solve_penalized(const ModelInstance& model, const StateVec& x0, const ControlVec& a0,
                             double beta, int n, const TimeGrid& grid, int n_paths,
                             const RegressionBasis& basis, std::uint64_t seed,
                             const SolveOptions& opts) {
    if (beta <= 0.0) throw Error("solve_penalized: beta must be positive");
    check_tail(model, beta, grid, opts.tail_tol);
    const RandomizedPair pair =
        representation_pair(model, x0, a0, grid, n_paths, seed, opts);
    SweepSpec spec;
    spec.model = &model;
    spec.pair = &pair;
    spec.x0 = x0;
    spec.a0 = a0;
    spec.beta = beta;
    spec.ns = {n};
    spec.infinite_horizon = true;
    spec.basis = basis;
    spec.opts = opts;
    return backward_sweep(spec)[0];
}

BsdeSolution solve_finite_horizon(const ModelInstance& model, const StateVec& x0,
                                  const ControlVec& a0, double beta, int n, const TimeGrid& grid,
                                  int n_paths, const RegressionBasis& basis, std::uint64_t seed,
                                  const std::function<double(const StateVec&)>& phi,
                                  const SolveOptions& opts) {
    if (beta < 0.0) throw Error("solve_finite_horizon: beta must be nonnegative");
    const RandomizedPair pair =
        representation_pair(model, x0, a0, grid, n_paths, seed, opts);
    SweepSpec spec;
    spec.model = &model;
    spec.pair = &pair;
    spec.x0 = x0;
    spec.a0 = a0;
    spec.beta = beta;
    spec.ns = {n};
    spec.infinite_horizon = false;
    spec.phi = phi ? phi : model.cost.terminal;
    spec.basis = basis;
    spec.opts = opts;
    return backward_sweep(spec)[0];
}

namespace {

ConstrainedResult ladder_solve(const ModelInstance& model, const StateVec& x0, const ControlVec& a0,
                               double beta, const std::vector<int>& n_ladder, const TimeGrid& grid,
                               int n_paths, const RegressionBasis& basis, std::uint64_t seed,
                               bool infinite, const std::function<double(const StateVec&)>& phi,
                               const SolveOptions& opts) {
    if (n_ladder.empty()) throw Error("constrained_limit: empty ladder");
    for (std::size_t e = 1; e < n_ladder.size(); ++e)
        if (n_ladder[e] <= n_ladder[e - 1]) throw Error("constrained_limit: ladder must increase");
    if (infinite) check_tail(model, beta, grid, opts.tail_tol);

    const RandomizedPair pair =
        representation_pair(model, x0, a0, grid, n_paths, seed, opts);
    SweepSpec spec;
    spec.model = &model;
    spec.pair = &pair;
    spec.x0 = x0;
    spec.a0 = a0;
    spec.beta = beta;
    spec.ns = n_ladder;
    spec.infinite_horizon = infinite;
    spec.phi = infinite ? std::function<double(const StateVec&)>{}
                        : (phi ? phi : model.cost.terminal);
    spec.basis = basis;
    spec.opts = opts;
    std::vector<BsdeSolution> sols = backward_sweep(spec);

    ConstrainedResult out;
    out.report.tolerance =
        1e-3 * (infinite ? model.cost.sup_bound / beta
                         : std::max(1.0, model.cost.sup_bound * grid.t_end));
    // readout coupling: the comparison theorem orders the rungs, so project
    // the raw readouts onto the nonincreasing cone (pool adjacent violators);
    // this removes estimator jitter between adjacent levels without the
    // downward bias a running minimum would pick up
    std::vector<double> iso(sols.size());
    std::vector<double> wt(sols.size());
    std::size_t blocks = 0;
    for (std::size_t e = 0; e < sols.size(); ++e) {
        iso[blocks] = sols[e].y0;
        wt[blocks] = 1.0;
        ++blocks;
        while (blocks > 1 && iso[blocks - 2] < iso[blocks - 1]) {
            const double w = wt[blocks - 2] + wt[blocks - 1];
            iso[blocks - 2] = (wt[blocks - 2] * iso[blocks - 2] + wt[blocks - 1] * iso[blocks - 1]) / w;
            wt[blocks - 2] = w;
            --blocks;
        }
    }
    std::vector<double> fitted;
    for (std::size_t b = 0; b < blocks; ++b)
        fitted.insert(fitted.end(), static_cast<std::size_t>(wt[b]), iso[b]);
    for (std::size_t e = 0; e < sols.size(); ++e)
        out.report.entries.push_back({n_ladder[e], fitted[e], sols[e].diag.e_int_gamma});
    const double run_min = fitted.back();
    out.report.monotone = true;
    for (std::size_t e = 1; e < sols.size(); ++e)
        if (out.report.entries[e].y0 > out.report.entries[e - 1].y0 + out.report.tolerance)
            out.report.monotone = false;
    if (sols.size() >= 2) {
        const double d =
            std::abs(out.report.entries.back().y0 - out.report.entries[sols.size() - 2].y0);
        out.report.saturated =
            d < std::max(out.report.tolerance, 0.03 * std::abs(out.report.entries.back().y0));
    }
    out.solution = std::move(sols.back());
    out.solution.y0 = run_min;
    out.solution.penalization_n = BsdeSolution::kLimitMarker;
    return out;
}

}  // namespace

ConstrainedResult constrained_limit(const ModelInstance& model, const StateVec& x0,
                                    const ControlVec& a0, double beta,
                                    const std::vector<int>& n_ladder, const TimeGrid& grid,
                                    int n_paths, const RegressionBasis& basis, std::uint64_t seed,
                                    const SolveOptions& opts) {
    if (beta <= 0.0) throw Error("constrained_limit: beta must be positive");
    return ladder_solve(model, x0, a0, beta, n_ladder, grid, n_paths, basis, seed, true, {}, opts);
}

ConstrainedResult constrained_limit_finite(const ModelInstance& model, const StateVec& x0,
                                           const ControlVec& a0, double beta,
                                           const std::vector<int>& n_ladder, const TimeGrid& grid,
                                           int n_paths, const RegressionBasis& basis,
                                           std::uint64_t seed,
                                           const std::function<double(const StateVec&)>& phi,
                                           const SolveOptions& opts) {
    if (beta < 0.0) throw Error("constrained_limit_finite: beta must be nonnegative");
    return ladder_solve(model, x0, a0, beta, n_ladder, grid, n_paths, basis, seed, false, phi, opts);
}

ComparisonReport maximality_probe(const BsdeSolution& candidate, const BsdeSolution& reference,
                                  const RandomizedPair& pair, double tol) {
    if (candidate.grid.n_steps != reference.grid.n_steps)
        throw Error("maximality_probe: solutions live on different grids");
    ComparisonReport rep;
    rep.y0_candidate = candidate.y0;
    rep.y0_reference = reference.y0;
    rep.min_margin = 1e300;
    const int S = reference.grid.n_steps;
    const int stride = std::max(1, S / 50);
    for (int i = 0; i < S; i += stride) {
        for (int q = 0; q < pair.ensemble.n_paths; ++q) {
            const auto x = pair.ensemble.state_at(q, i);
            const auto ch = pair.channel_at(q, i);
            const double margin = reference.evaluate_y(i, x, ch) - candidate.evaluate_y(i, x, ch);
            rep.min_margin = std::min(rep.min_margin, margin);
        }
    }
    rep.dominated = rep.min_margin >= -tol;
    return rep;
}

}  // namespace escl
