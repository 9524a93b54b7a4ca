#pragma once

#include <map>
#include <string>
#include <variant>

#include "torusflow/diagnostics.hpp"
#include "torusflow/flow.hpp"

namespace torusflow {

// --- minimal TOML subset: [tables], key = value with strings, numbers,
// booleans and flat numeric arrays; '#' comments.  Parse errors carry
// line/column. ---

struct TomlValue {
    std::variant<bool, double, std::string, std::vector<double>> data;
    int line = 0;

    bool as_bool() const;
    double as_number() const;
    const std::string& as_string() const;
    const std::vector<double>& as_array() const;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text);

// --- experiment configuration ---

enum class InitialKind { Zero, SingleMode, RandomBandLimited };

struct InitialSpec {
    InitialKind kind = InitialKind::Zero;
    double amplitude = 0.0; // C0 amplitude for single_mode; fallback for random
    int k = 1;              // single_mode wavenumber
    int kmax = 8;           // random band limit
    std::uint64_t seed = 0;
    double c11_target = 0.0; // when > 0, random fields are rescaled to this C^{1,1} norm
};

struct DiagnosticsSpec {
    double delta_star = 0.1;
    std::array<double, 2> fit_window = {0.0, 0.0}; // empty window disables the fit
    bool asymmetry = false;
    int asymmetry_stride = 1;
};

struct ExperimentConfig {
    ReferenceSpec reference;
    FlowConfig flow;
    InitialSpec initial;
    DiagnosticsSpec diagnostics;
    std::string output_dir = "out";

    static ExperimentConfig from_string(const std::string& toml_text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_toml() const; // canonical echo, also the hashing input
    std::uint64_t hash() const;
};

/// Seeded initial datum: zero, single mode, or counter-seeded random
/// band-limited field rescaled to the requested discrete C^{1,1} norm, then
/// volume projected; rescale and projection are interleaved until both the
/// norm (1e-12 relative) and the volume (1e-14 relative) are met.
HeightField generate_initial(const ReferenceSurface& ref, const InitialSpec& spec);

struct RunManifest {
    std::string config_hash;
    std::string code_version;
    std::string reference;
    std::array<int, 2> grid_n = {0, 0};
    std::string flow;
    long steps = 0;
    double wall_time_sec = 0.0;
    std::string output_dir;
    std::map<std::string, bool> acceptance; // filled by verify-all only
    RateFit rate_fit;                       // perimeter-gap fit when a window is configured
    bool has_rate_fit = false;

    std::string to_json() const;
};

/// Runs the configured experiment and persists config echo, snapshots,
/// step reports, diagnostics and recentering streams plus a manifest under
/// output_dir (overridable via the TORUSFLOW_OUTPUT_DIR environment variable).
RunManifest run_experiment(const ExperimentConfig& config);

struct LoadedRun {
    ExperimentConfig config;
    ReferenceSurface ref;
    Trajectory trajectory;
};

LoadedRun load_run(const std::string& dir);

void write_steps_ndjson(const std::string& path, const std::vector<StepReport>& steps);

extern const char* kCodeVersion;

} // namespace torusflow
