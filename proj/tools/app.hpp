#pragma once

// Command implementations behind the uavrisk CLI. Kept out of main() so the
// test suites can drive them directly.

#include "uavrisk/coverage.hpp"
#include "uavrisk/dynamics.hpp"
#include "uavrisk/metrics.hpp"
#include "uavrisk/montecarlo.hpp"
#include "uavrisk/power_model.hpp"
#include "uavrisk/risk.hpp"
#include "uavrisk/wind.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace uavrisk::app {

enum ExitCode : int { kOk = 0, kComputeFailure = 1, kInputError = 2 };

// Full default mission document; every accepted key appears here.
nlohmann::json default_config();

// Overlays `user` on the defaults; unknown keys or wrong value types throw ConfigError.
nlohmann::json merge_config(const nlohmann::json& user);

struct MissionConfig {
    std::filesystem::path base_dir;
    std::filesystem::path trajectory;
    std::vector<std::filesystem::path> wind_grids;
    std::filesystem::path power_model;
    std::filesystem::path occupancy_map;
    InletDistribution inlet;
    ContextFeatures context;
    RiskProfile profile;
    double nu = 0.95;
    McConfig mc;
    SimConfig sim;
    ControllerConfig controller;
    DynamicsNoise noise;
    CoverageConfig coverage;
    nlohmann::json document;  // merged document, as hashed into every artifact
};

// Parses and validates the merged document; referenced paths are resolved
// against base_dir but not opened here.
MissionConfig mission_from_json(const nlohmann::json& merged, const std::filesystem::path& base_dir);
MissionConfig load_mission_config(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);
std::string config_hash(const MissionConfig& cfg);

int default_workers();

struct RunContext {
    std::filesystem::path out_dir;
    int workers = 1;
    std::ostream* log = nullptr;  // human-readable summary; may be null
};

struct AssessSummary {
    double mean_energy_j = 0.0;
    double var = 0.0;
    double cvar = 0.0;
    double cap = 0.0;
    double mean_risk = 0.0;
    int incomplete = 0;
    EnergySamples samples;
};

// Single-trajectory assessment. Throws LoadError/ConfigError/InputError on bad inputs.
AssessSummary cmd_assess(const MissionConfig& cfg, const RunContext& ctx);
CoverageResult cmd_coverage(const MissionConfig& cfg, const RunContext& ctx);
SingleRun cmd_simulate(const MissionConfig& cfg, const RunContext& ctx, int run_index);

struct EvalOptions {
    std::filesystem::path model;
    std::filesystem::path corpus;
    YawSegmentation segmentation;
    bool perfect_oracle = false;  // predictions = ground truth (pipeline check)
};

struct FlightRow {
    std::string id;
    std::string split;
    double mape = 0.0;
    double re = 0.0;
    int sections = 0;
};

struct EvalReport {
    std::vector<FlightRow> flights;
    nlohmann::json summary;
};

EvalReport cmd_eval_model(const EvalOptions& opts, const RunContext& ctx);
AnalyticalCoefficients cmd_fit_baseline(const std::filesystem::path& corpus, const std::filesystem::path& out_file);

struct CorpusEntry {
    std::string split;
    ProcessedFlight flight;
};
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& dir);

// Loads every input the config references; missing files raise LoadError naming the path.
WindFieldSet load_windset(const MissionConfig& cfg);

// Full CLI entry point (argv excludes nothing; argv[0] is the program name).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace uavrisk::app
