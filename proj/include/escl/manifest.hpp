#pragma once

#include "escl/ergodic.hpp"
#include "escl/oracle.hpp"

namespace escl {

inline constexpr const char* kVersion = "escl 1.0.0";
inline constexpr const char* kManifestSchema = "escl-manifest/1";

struct RunOptions {
    int workers = 1;
    std::optional<std::uint64_t> seed_override;
    std::string out_dir;  // overrides the manifest's output directory when set
};

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunRecord {
    std::string manifest_hash;  // FNV-1a of the manifest bytes, hex
    std::string model_hash;     // FNV-1a of the canonical model JSON, hex
    std::string version;
    std::string kind;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
    std::vector<std::pair<std::string, double>> stage_ms;
    std::vector<std::string> result_files;
    std::vector<CheckResult> checks;

    bool all_pass() const;
};

/// Thrown on schema/IO/config problems (operational errors, CLI exit 1);
/// check failures are recorded in the RunRecord instead (CLI exit 2).
struct ManifestError : Error {
    using Error::Error;
};

/// Parses, validates (strict: unknown keys rejected), and executes the
/// manifest. Writes result files plus run_record.json into the output
/// directory and returns the record.
RunRecord run_manifest(const std::string& manifest_path, const RunOptions& opts = {});

std::string run_record_to_json(const RunRecord& rec);

}  // namespace escl
