#include "escl/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

namespace escl {

using nlohmann::json;
namespace fs = std::filesystem;

bool RunRecord::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ManifestError("cannot write " + path);
    out << text;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ManifestError(where + ": unknown key \"" + it.key() + "\"");
    for (const auto& k : required)
        if (!j.contains(k)) throw ManifestError(where + ": missing key \"" + k + "\"");
}

Eigen::VectorXd get_vector(const json& a, const std::string& name) {
    if (!a.is_array()) throw ManifestError(name + " must be an array");
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
    return v;
}

std::vector<double> get_list(const json& a, const std::string& name, bool increasing,
                             bool decreasing) {
    if (!a.is_array() || a.empty()) throw ManifestError(name + " must be a nonempty array");
    std::vector<double> v = a.get<std::vector<double>>();
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (increasing && v[i] <= v[i - 1])
            throw ManifestError(name + " must be strictly increasing");
        if (decreasing && v[i] >= v[i - 1])
            throw ManifestError(name + " must be strictly decreasing");
    }
    return v;
}

TimeGrid get_grid(const json& j) {
    require_keys(j, {"t0", "t_end", "n_steps"}, {"t0", "t_end", "n_steps"}, "grid");
    return TimeGrid{j.at("t0").get<double>(), j.at("t_end").get<double>(),
                    j.at("n_steps").get<int>()};
}

struct Context {
    json manifest;
    std::string kind;
    fs::path out_dir;
    std::uint64_t seed = 0;
    int workers = 1;
    std::optional<ModelInstance> model;
    std::string model_json;
    RunRecord rec;
    json tolerances;

    double tol(const std::string& name, double fallback) const {
        if (tolerances.contains(name)) return tolerances.at(name).get<double>();
        return fallback;
    }
    std::string result_path(const std::string& file) {
        const std::string p = (out_dir / file).string();
        rec.result_files.push_back(p);
        return p;
    }
    std::string provenance_comment() const {
        return "# manifest=" + rec.manifest_hash + " seed=" + std::to_string(seed) + "\n";
    }
    json provenance_json() const {
        return {{"manifest_hash", rec.manifest_hash},
                {"model_hash", rec.model_hash},
                {"seed", seed},
                {"version", kVersion},
                {"kind", kind}};
    }
    void check(const std::string& name, bool pass, const std::string& detail) {
        rec.checks.push_back({name, pass, detail});
    }
    BsdeConfig bsde_config() const {
        BsdeConfig cfg;
        cfg.h = manifest.at("h").get<double>();
        if (cfg.h <= 0.0) throw ManifestError("h must be positive");
        cfg.n_paths = manifest.at("n_paths").get<int>();
        cfg.basis.degree = manifest.at("basis_degree").get<int>();
        cfg.n_ladder = manifest.at("n_ladder").get<std::vector<int>>();
        cfg.seed = seed;
        cfg.opts.workers = workers;
        cfg.opts.tail_tol = tol("tail", 0.05);
        return cfg;
    }
};

const std::set<std::string> kKinds = {"validate",   "simulate",  "bsde",  "ergodic-sweep",
                                      "long-time",  "oracle-compare", "report"};

std::set<std::string> allowed_keys(const std::string& kind) {
    std::set<std::string> common = {"schema", "kind", "master_seed", "out_dir",
                                    "model",  "model_path", "tolerances"};
    auto with = [&](std::initializer_list<const char*> extra) {
        std::set<std::string> s = common;
        for (const char* k : extra) s.insert(k);
        return s;
    };
    if (kind == "validate") return with({"n_samples"});
    if (kind == "simulate") return with({"grid", "n_paths", "x0", "control"});
    if (kind == "bsde") return with({"grid", "n_paths", "basis_degree", "n_ladder", "beta", "x0", "a0"});
    if (kind == "ergodic-sweep")
        return with({"h", "n_paths", "basis_degree", "n_ladder", "beta_ladder", "x_grid"});
    if (kind == "long-time")
        return with({"h", "n_paths", "basis_degree", "n_ladder", "t_ladder", "x0"});
    if (kind == "oracle-compare")
        return with({"beta", "h", "n_paths", "basis_degree", "n_ladder", "x_grid", "oracle"});
    if (kind == "report") return {"schema", "kind", "master_seed", "out_dir", "records", "tolerances"};
    throw ManifestError("unknown kind \"" + kind + "\"");
}

std::set<std::string> required_keys(const std::string& kind) {
    if (kind == "validate") return {"schema", "kind", "master_seed", "out_dir"};
    if (kind == "simulate") return {"schema", "kind", "master_seed", "out_dir", "grid", "n_paths", "x0"};
    if (kind == "bsde")
        return {"schema", "kind", "master_seed", "out_dir", "grid",
                "n_paths", "basis_degree", "n_ladder", "beta", "x0", "a0"};
    if (kind == "ergodic-sweep")
        return {"schema", "kind", "master_seed", "out_dir", "h",
                "n_paths", "basis_degree", "n_ladder", "beta_ladder", "x_grid"};
    if (kind == "long-time")
        return {"schema", "kind", "master_seed", "out_dir", "h",
                "n_paths", "basis_degree", "n_ladder", "t_ladder", "x0"};
    if (kind == "oracle-compare")
        return {"schema", "kind", "master_seed", "out_dir", "beta", "h",
                "n_paths", "basis_degree", "n_ladder", "x_grid", "oracle"};
    return {"schema", "kind", "master_seed", "out_dir", "records"};
}

// ---- kind runners --------------------------------------------------------

void run_validate(Context& ctx) {
    const int n_samples = ctx.manifest.value("n_samples", 1000);
    const ValidationReport rep = validate_assumptions(*ctx.model, n_samples, ctx.seed);
    json j;
    j["provenance"] = ctx.provenance_json();
    j["assumptions"] = json::array();
    for (const auto& c : rep.checks) {
        j["assumptions"].push_back(
            {{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}, {"witness", c.witness}});
        ctx.check(c.name, c.pass, "margin " + fmt(c.margin));
    }
    write_file(ctx.result_path("validation.json"), j.dump(2) + "\n");
}

void run_simulate(Context& ctx) {
    const TimeGrid grid = get_grid(ctx.manifest.at("grid"));
    const int n_paths = ctx.manifest.at("n_paths").get<int>();
    const Eigen::VectorXd x0 = get_vector(ctx.manifest.at("x0"), "x0");
    if (x0.size() != ctx.model->n_modes()) throw ManifestError("x0 dimension mismatch");
    ControlPolicy policy = ControlPolicy::zero(ctx.model->m_modes());
    if (ctx.manifest.contains("control")) {
        const Eigen::VectorXd u = get_vector(ctx.manifest.at("control"), "control");
        if (u.size() != ctx.model->m_modes()) throw ManifestError("control dimension mismatch");
        policy = ControlPolicy::make_constant(u);
    }
    const PathEnsemble ens =
        simulate_state(*ctx.model, x0, policy, grid, n_paths, ctx.seed, ctx.workers);
    write_ensemble_binary(ctx.result_path("paths.bin"), ens);

    const MomentReport mom = moment_report(ens, {1.0, 2.0, 4.0});
    std::string csv = ctx.provenance_comment() + "p,sup_moment,std_error\n";
    for (const auto& r : mom.rows)
        csv += fmt(r.p) + "," + fmt(r.sup_moment) + "," + fmt(r.std_error) + "\n";
    write_file(ctx.result_path("moments.csv"), csv);
    ctx.check("moment_growth", !mom.growth_flagged, "kappa " + fmt(mom.fitted_kappa));
}

void run_bsde(Context& ctx) {
    const TimeGrid grid = get_grid(ctx.manifest.at("grid"));
    const int n_paths = ctx.manifest.at("n_paths").get<int>();
    const double beta = ctx.manifest.at("beta").get<double>();
    const Eigen::VectorXd x0 = get_vector(ctx.manifest.at("x0"), "x0");
    const Eigen::VectorXd a0 = get_vector(ctx.manifest.at("a0"), "a0");
    RegressionBasis basis;
    basis.degree = ctx.manifest.at("basis_degree").get<int>();
    const auto n_ladder = ctx.manifest.at("n_ladder").get<std::vector<int>>();
    SolveOptions opts;
    opts.workers = ctx.workers;
    opts.tail_tol = ctx.tol("tail", 0.05);

    const ConstrainedResult res =
        constrained_limit(*ctx.model, x0, a0, beta, n_ladder, grid, n_paths, basis, ctx.seed, opts);

    std::string csv = ctx.provenance_comment() + "n,y0,e_int_gamma\n";
    for (const auto& e : res.report.entries)
        csv += std::to_string(e.n) + "," + fmt(e.y0) + "," + fmt(e.e_int_gamma) + "\n";
    write_file(ctx.result_path("bsde_ladder.csv"), csv);

    json j;
    j["provenance"] = ctx.provenance_json();
    j["y0"] = res.solution.y0;
    j["beta"] = beta;
    j["clip_rate"] = res.solution.diag.clip_rate;
    j["sup_z"] = res.solution.diag.sup_z;
    j["monotone"] = res.report.monotone;
    j["saturated"] = res.report.saturated;
    write_file(ctx.result_path("summary.json"), j.dump(2) + "\n");

    ctx.check("ladder_monotone", res.report.monotone, "tolerance " + fmt(res.report.tolerance));
    ctx.check("clip_rate", res.solution.diag.clip_rate < 0.01,
              "rate " + fmt(res.solution.diag.clip_rate));
}

void run_ergodic_sweep(Context& ctx) {
    const BsdeConfig cfg = ctx.bsde_config();
    const auto betas = get_list(ctx.manifest.at("beta_ladder"), "beta_ladder", false, true);
    const auto xs = get_list(ctx.manifest.at("x_grid"), "x_grid", true, false);
    std::vector<StateVec> x_grid;
    for (double s : xs) {
        StateVec x = StateVec::Zero(ctx.model->n_modes());
        x[0] = s;
        x_grid.push_back(x);
    }
    const ErgodicEstimate est = vanishing_discount_sweep(*ctx.model, x_grid, betas, cfg);

    std::string csv = ctx.provenance_comment() + "beta,v0,beta_v0\n";
    for (const auto& e : est.beta_ladder)
        csv += fmt(e.beta) + "," + fmt(e.v0) + "," + fmt(e.beta_v0) + "\n";
    write_file(ctx.result_path("beta_ladder.csv"), csv);

    csv = ctx.provenance_comment() + "x,v_hat\n";
    for (const auto& p : est.v_hat) csv += fmt(p.x[0]) + "," + fmt(p.value) + "\n";
    write_file(ctx.result_path("vhat_grid.csv"), csv);

    json j;
    j["provenance"] = ctx.provenance_json();
    j["lambda"] = est.lambda;
    j["fit_residual"] = est.fit_residual;
    j["cauchy_ok"] = est.cauchy_ok;
    j["vhat_lipschitz"] = est.vhat_lipschitz;
    j["beta_ladder"] = json::array();
    for (const auto& e : est.beta_ladder)
        j["beta_ladder"].push_back({{"beta", e.beta}, {"v0", e.v0}, {"beta_v0", e.beta_v0}});
    j["v_hat"] = json::array();
    for (const auto& p : est.v_hat) j["v_hat"].push_back({{"x", p.x[0]}, {"value", p.value}});
    write_file(ctx.result_path("summary.json"), j.dump(2) + "\n");

    ctx.check("beta_cauchy", est.cauchy_ok, "last contraction " + fmt(est.cauchy_max));
    ctx.check("lambda_bound", std::abs(est.lambda) <= ctx.model->cost.sup_bound + 1e-9,
              "lambda " + fmt(est.lambda));
}

void run_long_time(Context& ctx) {
    const BsdeConfig cfg = ctx.bsde_config();
    const auto ts = get_list(ctx.manifest.at("t_ladder"), "t_ladder", true, false);
    const Eigen::VectorXd x0 = get_vector(ctx.manifest.at("x0"), "x0");
    if (x0.size() != ctx.model->n_modes()) throw ManifestError("x0 dimension mismatch");
    const LongTimeResult res = long_time_sweep(*ctx.model, x0, ts, ctx.model->cost.terminal, cfg);

    std::string csv = ctx.provenance_comment() + "T,vT,vT_over_T,residual\n";
    for (const auto& e : res.entries)
        csv += fmt(e.t) + "," + fmt(e.value) + "," + fmt(e.per_time) + "," + fmt(e.residual) + "\n";
    write_file(ctx.result_path("t_ladder.csv"), csv);

    json j;
    j["provenance"] = ctx.provenance_json();
    j["lambda_longtime"] = res.lambda_longtime;
    j["vhat_x0_fit"] = res.vhat_x0_fit;
    j["fitted_c"] = res.fitted_c;
    j["residual_bounded"] = res.residual_bounded;
    j["t_ladder"] = json::array();
    for (const auto& e : res.entries)
        j["t_ladder"].push_back({{"T", e.t},
                                 {"vT", e.value},
                                 {"vT_over_T", e.per_time},
                                 {"residual", e.residual}});
    write_file(ctx.result_path("summary.json"), j.dump(2) + "\n");

    ctx.check("residual_bounded", res.residual_bounded, "fitted C " + fmt(res.fitted_c));
    ctx.check("lambda_bound", std::abs(res.lambda_longtime) <= ctx.model->cost.sup_bound + 1e-9,
              "lambda " + fmt(res.lambda_longtime));
}

void run_oracle_compare(Context& ctx) {
    const BsdeConfig cfg = ctx.bsde_config();
    const double beta = ctx.manifest.at("beta").get<double>();
    const json& oj = ctx.manifest.at("oracle");
    require_keys(oj, {"controls", "x_min", "x_max", "n_x"}, {"controls", "x_min", "x_max", "n_x"},
                 "oracle");
    const Oracle1DModel oracle =
        reduce_model(*ctx.model, oj.at("controls").get<std::vector<double>>(),
                     oj.at("x_min").get<double>(), oj.at("x_max").get<double>(),
                     oj.at("n_x").get<int>());
    const HjbSolution hjb = hjb_discounted(oracle, beta);

    const auto xs = get_list(ctx.manifest.at("x_grid"), "x_grid", true, false);
    const ControlVec a0 = ControlVec::Zero(ctx.model->m_modes());
    const TimeGrid grid = [&] {
        const double t_end = required_horizon(ctx.model->cost.sup_bound, beta, 0.5 * cfg.opts.tail_tol);
        const int steps = std::max(1, static_cast<int>(std::ceil(t_end / cfg.h)));
        return TimeGrid{0.0, steps * cfg.h, steps};
    }();

    std::vector<double> bsde_v(xs.size(), 0.0);
    SolveOptions job_opts = cfg.opts;
    job_opts.workers = 1;
    job_opts.want_z = false;
    parallel_for(xs.size(), ctx.workers, [&](std::size_t i) {
        StateVec x = StateVec::Zero(ctx.model->n_modes());
        x[0] = xs[i];
        bsde_v[i] = constrained_limit(*ctx.model, x, a0, beta, cfg.n_ladder, grid, cfg.n_paths,
                                      cfg.basis, cfg.seed, job_opts)
                        .solution.y0;
    });

    double max_rel = 0.0;
    std::string csv = ctx.provenance_comment() + "x,bsde,oracle,rel_err\n";
    json rows = json::array();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double ov = oracle_interp(oracle, hjb.v, xs[i]);
        const double rel = std::abs(bsde_v[i] - ov) / std::max(1e-12, std::abs(ov));
        max_rel = std::max(max_rel, rel);
        csv += fmt(xs[i]) + "," + fmt(bsde_v[i]) + "," + fmt(ov) + "," + fmt(rel) + "\n";
        rows.push_back({{"x", xs[i]}, {"bsde", bsde_v[i]}, {"oracle", ov}, {"rel_err", rel}});
    }
    write_file(ctx.result_path("compare.csv"), csv);

    json j;
    j["provenance"] = ctx.provenance_json();
    j["beta"] = beta;
    j["max_rel_err"] = max_rel;
    j["rows"] = rows;
    write_file(ctx.result_path("summary.json"), j.dump(2) + "\n");

    const double tol = ctx.tol("rel_value", 0.03);
    ctx.check("value_match", max_rel <= tol, "max rel err " + fmt(max_rel));
}

void run_report(Context& ctx) {
    const auto paths = ctx.manifest.at("records").get<std::vector<std::string>>();
    if (paths.empty()) throw ManifestError("report: records must be nonempty");
    std::vector<json> records;
    std::string model_hash;
    for (const auto& p : paths) {
        json r = json::parse(read_file(p));
        const std::string mh = r.at("provenance").at("model_hash").get<std::string>();
        if (model_hash.empty()) model_hash = mh;
        else if (mh != model_hash)
            throw ManifestError("report: records come from different models (" + model_hash +
                                " vs " + mh + ")");
        records.push_back(std::move(r));
    }
    ctx.rec.model_hash = model_hash;

    std::optional<double> lambda_vd, lambda_lt;
    std::string beta_csv = ctx.provenance_comment() + "beta,beta_v0\n";
    std::string t_csv = ctx.provenance_comment() + "T,vT_over_T\n";
    std::string vhat_csv = ctx.provenance_comment() + "x,v_hat\n";
    bool have_beta = false, have_t = false, have_vhat = false;
    for (const auto& r : records) {
        const std::string kind = r.at("provenance").at("kind").get<std::string>();
        if (kind == "ergodic-sweep") {
            lambda_vd = r.at("lambda").get<double>();
            for (const auto& e : r.at("beta_ladder")) {
                beta_csv += fmt(e.at("beta").get<double>()) + "," +
                            fmt(e.at("beta_v0").get<double>()) + "\n";
                have_beta = true;
            }
            for (const auto& e : r.at("v_hat")) {
                vhat_csv += fmt(e.at("x").get<double>()) + "," + fmt(e.at("value").get<double>()) + "\n";
                have_vhat = true;
            }
        } else if (kind == "long-time") {
            lambda_lt = r.at("lambda_longtime").get<double>();
            for (const auto& e : r.at("t_ladder")) {
                t_csv += fmt(e.at("T").get<double>()) + "," +
                         fmt(e.at("vT_over_T").get<double>()) + "\n";
                have_t = true;
            }
        }
    }
    if (have_beta) write_file(ctx.result_path("report_beta.csv"), beta_csv);
    if (have_t) write_file(ctx.result_path("report_longtime.csv"), t_csv);
    if (have_vhat) write_file(ctx.result_path("report_vhat.csv"), vhat_csv);

    json j;
    j["provenance"] = ctx.provenance_json();
    j["provenance"]["model_hash"] = model_hash;
    if (lambda_vd) j["lambda_vanishing_discount"] = *lambda_vd;
    if (lambda_lt) j["lambda_longtime"] = *lambda_lt;
    if (lambda_vd && lambda_lt) {
        const double diff = std::abs(*lambda_vd - *lambda_lt);
        const double tol = ctx.tol("lambda_consistency", 0.05);
        const double budget = tol * std::max({std::abs(*lambda_vd), std::abs(*lambda_lt), 1e-3});
        j["lambda_abs_diff"] = diff;
        j["lambda_budget"] = budget;
        ctx.check("lambda_consistency", diff <= budget, "diff " + fmt(diff));
    }
    write_file(ctx.result_path("report.json"), j.dump(2) + "\n");
}

}  // namespace

RunRecord run_manifest(const std::string& manifest_path, const RunOptions& opts) {
    const auto t_start = std::chrono::steady_clock::now();
    Context ctx;
    const std::string text = read_file(manifest_path);
    try {
        ctx.manifest = json::parse(text);
    } catch (const json::exception& e) {
        throw ManifestError(std::string("manifest parse error: ") + e.what());
    }
    if (!ctx.manifest.is_object()) throw ManifestError("manifest must be a JSON object");
    if (!ctx.manifest.contains("kind")) throw ManifestError("manifest: missing key \"kind\"");
    ctx.kind = ctx.manifest.at("kind").get<std::string>();
    if (!kKinds.count(ctx.kind)) throw ManifestError("unknown kind \"" + ctx.kind + "\"");
    require_keys(ctx.manifest, allowed_keys(ctx.kind), required_keys(ctx.kind), "manifest");
    if (ctx.manifest.at("schema").get<std::string>() != kManifestSchema)
        throw ManifestError("unsupported manifest schema");

    ctx.seed = ctx.manifest.at("master_seed").get<std::uint64_t>();
    if (opts.seed_override) ctx.seed = *opts.seed_override;
    ctx.workers = std::max(1, opts.workers);
    ctx.out_dir = opts.out_dir.empty() ? fs::path(ctx.manifest.at("out_dir").get<std::string>())
                                       : fs::path(opts.out_dir);
    fs::create_directories(ctx.out_dir);

    if (ctx.manifest.contains("tolerances")) {
        ctx.tolerances = ctx.manifest.at("tolerances");
        for (auto it = ctx.tolerances.begin(); it != ctx.tolerances.end(); ++it)
            if (!it.value().is_number() || it.value().get<double>() <= 0.0)
                throw ManifestError("tolerances must be strictly positive numbers");
    }

    if (ctx.kind != "report") {
        if (ctx.manifest.contains("model") == ctx.manifest.contains("model_path"))
            throw ManifestError("exactly one of \"model\" / \"model_path\" is required");
        const std::string model_text = ctx.manifest.contains("model")
                                           ? ctx.manifest.at("model").dump()
                                           : read_file(ctx.manifest.at("model_path").get<std::string>());
        try {
            ctx.model = model_from_json(model_text);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw ManifestError(std::string("model parse error: ") + e.what());
        }
        ctx.model_json = model_to_json(*ctx.model);
        ctx.rec.model_hash = hex64(fnv1a64(ctx.model_json.data(), ctx.model_json.size()));
    }

    ctx.rec.manifest_hash = hex64(fnv1a64(text.data(), text.size()));
    ctx.rec.version = kVersion;
    ctx.rec.kind = ctx.kind;
    ctx.rec.seed = ctx.seed;

    const auto t_exec = std::chrono::steady_clock::now();
    if (ctx.kind == "validate") run_validate(ctx);
    else if (ctx.kind == "simulate") run_simulate(ctx);
    else if (ctx.kind == "bsde") run_bsde(ctx);
    else if (ctx.kind == "ergodic-sweep") run_ergodic_sweep(ctx);
    else if (ctx.kind == "long-time") run_long_time(ctx);
    else if (ctx.kind == "oracle-compare") run_oracle_compare(ctx);
    else run_report(ctx);
    const auto t_end = std::chrono::steady_clock::now();

    ctx.rec.stage_ms.emplace_back(
        "setup", std::chrono::duration<double, std::milli>(t_exec - t_start).count());
    ctx.rec.stage_ms.emplace_back(
        ctx.kind, std::chrono::duration<double, std::milli>(t_end - t_exec).count());
    ctx.rec.wall_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();

    write_file((ctx.out_dir / "run_record.json").string(), run_record_to_json(ctx.rec));
    return ctx.rec;
}

std::string run_record_to_json(const RunRecord& rec) {
    json j;
    j["manifest_hash"] = rec.manifest_hash;
    j["model_hash"] = rec.model_hash;
    j["version"] = rec.version;
    j["kind"] = rec.kind;
    j["seed"] = rec.seed;
    j["wall_ms"] = rec.wall_ms;
    j["stage_ms"] = json::array();
    for (const auto& [name, ms] : rec.stage_ms) j["stage_ms"].push_back({{name, ms}});
    j["result_files"] = rec.result_files;
    j["checks"] = json::array();
    for (const auto& c : rec.checks)
        j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["all_pass"] = rec.all_pass();
    return j.dump(2) + "\n";
}

}  // namespace escl
