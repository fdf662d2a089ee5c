#pragma once

// Batch experiment runner: JSON configuration ingestion with strict key
// validation, a string-addressed experiment registry, CSV/JSON result
// persistence and a reproducibility manifest with file digests.

#include <cstdint>
#include <string>
#include <vector>

namespace skorolab {

struct ExperimentInfo {
    std::string name;
    std::string description;
    std::string anchor;  // the identity or rate formula the experiment exercises
};

/// Stable-ordered registry of runnable experiments.
std::vector<ExperimentInfo> list_experiments();

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ResultFile {
    std::string file;
    std::string sha256;
};

struct RunManifest {
    std::string config_echo;  // normalized config JSON (re-parses to an equal config)
    std::string version;
    std::string started;
    double elapsed_s = 0.0;
    int threads = 1;
    std::vector<ResultFile> results;
    std::vector<CheckResult> checks;

    bool all_pass() const;
    std::string to_json() const;
};

/// Parse and validate a config document. Unknown keys and unknown experiment
/// names throw std::invalid_argument naming the offending key.
struct RunConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    std::string json_text;  // normalized echo
};

RunConfig parse_run_config(const std::string& json_text);

/// Run one experiment: writes CSV result files plus manifest.json under
/// out_dir and returns the manifest. Thread count affects wall time only;
/// outputs are bit-identical for any worker count.
RunManifest run_experiment(const RunConfig& config, const std::string& out_dir, int threads = 0);

}  // namespace skorolab
