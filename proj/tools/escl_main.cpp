#include <CLI11.hpp>
#include <cstdio>

#include "escl/manifest.hpp"

namespace {

struct Args {
    std::string manifest;
    std::string out;
    int workers = 1;
    std::optional<std::uint64_t> seed_override;
};

int execute(const Args& args, const std::string& expected_kind) {
    try {
        escl::RunOptions opts;
        opts.workers = args.workers;
        opts.seed_override = args.seed_override;
        opts.out_dir = args.out;
        const escl::RunRecord rec = escl::run_manifest(args.manifest, opts);
        if (rec.kind != expected_kind) {
            std::fprintf(stderr, "error: manifest kind \"%s\" does not match subcommand \"%s\"\n",
                         rec.kind.c_str(), expected_kind.c_str());
            return 1;
        }
        for (const auto& c : rec.checks)
            std::printf("%s %s (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                        c.detail.c_str());
        std::printf("%s: %zu result file(s), %.0f ms\n", rec.kind.c_str(),
                    rec.result_files.size(), rec.wall_ms);
        if (!rec.all_pass()) {
            for (const auto& c : rec.checks)
                if (!c.pass) std::fprintf(stderr, "failed check: %s\n", c.name.c_str());
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergodic control laboratory: manifest-driven experiment runner"};
    app.require_subcommand(1);

    Args args;
    std::string expected;
    for (const char* kind : {"validate", "simulate", "bsde", "ergodic-sweep", "long-time",
                             "oracle-compare", "report"}) {
        CLI::App* sub = app.add_subcommand(kind, std::string("run a \"") + kind + "\" manifest");
        sub->add_option("--manifest", args.manifest, "manifest JSON path")->required();
        sub->add_option("--out", args.out, "output directory (overrides the manifest)");
        sub->add_option("--workers", args.workers, "worker thread count")->check(CLI::PositiveNumber);
        sub->add_option("--seed-override", args.seed_override,
                        "replace the manifest master seed (recorded in the run record)");
        sub->callback([&expected, kind] { expected = kind; });
    }

    CLI11_PARSE(app, argc, argv);
    return execute(args, expected);
}
