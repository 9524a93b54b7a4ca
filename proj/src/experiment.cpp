#include "torusflow/experiment.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace torusflow {

const char* kCodeVersion = "torusflow 0.1.0";

namespace {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FlowError("cannot open '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace

bool TomlValue::as_bool() const {
    if (auto* b = std::get_if<bool>(&data)) return *b;
    throw ConfigError("expected a boolean", line, 0);
}
double TomlValue::as_number() const {
    if (auto* d = std::get_if<double>(&data)) return *d;
    throw ConfigError("expected a number", line, 0);
}
const std::string& TomlValue::as_string() const {
    if (auto* s = std::get_if<std::string>(&data)) return *s;
    throw ConfigError("expected a string", line, 0);
}
const std::vector<double>& TomlValue::as_array() const {
    if (auto* a = std::get_if<std::vector<double>>(&data)) return *a;
    throw ConfigError("expected an array", line, 0);
}

TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::string section;
    std::istringstream stream(text);
    std::string raw;
    int lineno = 0;

    auto fail = [&](const std::string& what, int col) -> void {
        throw ConfigError(what, lineno, col + 1);
    };

    while (std::getline(stream, raw)) {
        ++lineno;
        // strip comment outside quotes
        std::string line;
        bool in_str = false;
        for (char c : raw) {
            if (c == '"') in_str = !in_str;
            if (c == '#' && !in_str) break;
            line.push_back(c);
        }
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        std::string body = line.substr(first, last - first + 1);

        if (body.front() == '[') {
            if (body.back() != ']') fail("unterminated table header", static_cast<int>(last));
            section = body.substr(1, body.size() - 2);
            if (section.empty()) fail("empty table name", static_cast<int>(first));
            table[section];
            continue;
        }

        auto eq = body.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'", static_cast<int>(first));
        std::string key = body.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key.empty()) fail("empty key", static_cast<int>(first));
        std::string val = body.substr(eq + 1);
        auto vfirst = val.find_first_not_of(" \t");
        if (vfirst == std::string::npos) fail("missing value", static_cast<int>(first + eq + 1));
        val = val.substr(vfirst);
        int vcol = static_cast<int>(first + eq + 1 + vfirst);

        TomlValue out;
        out.line = lineno;
        if (val.front() == '"') {
            auto close = val.find('"', 1);
            if (close == std::string::npos) fail("unterminated string", vcol);
            out.data = val.substr(1, close - 1);
        } else if (val == "true" || val == "false") {
            out.data = (val == "true");
        } else if (val.front() == '[') {
            if (val.back() != ']') fail("unterminated array", vcol);
            std::vector<double> arr;
            std::string inner = val.substr(1, val.size() - 2);
            std::istringstream items(inner);
            std::string item;
            while (std::getline(items, item, ',')) {
                try {
                    std::size_t used = 0;
                    double d = std::stod(item, &used);
                    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
                    if (used != item.size()) throw std::invalid_argument("trailing");
                    arr.push_back(d);
                } catch (const std::exception&) {
                    fail("invalid array element '" + item + "'", vcol);
                }
            }
            out.data = std::move(arr);
        } else {
            try {
                std::size_t used = 0;
                double d = std::stod(val, &used);
                while (used < val.size() && std::isspace(static_cast<unsigned char>(val[used]))) ++used;
                if (used != val.size()) throw std::invalid_argument("trailing");
                out.data = d;
            } catch (const std::exception&) {
                fail("invalid value '" + val + "'", vcol);
            }
        }
        table[section][key] = std::move(out);
    }
    return table;
}

namespace {

const TomlValue* find(const TomlTable& t, const std::string& sec, const std::string& key) {
    auto si = t.find(sec);
    if (si == t.end()) return nullptr;
    auto ki = si->second.find(key);
    return ki == si->second.end() ? nullptr : &ki->second;
}

double number_or(const TomlTable& t, const std::string& sec, const std::string& key, double dflt) {
    auto* v = find(t, sec, key);
    return v ? v->as_number() : dflt;
}

bool bool_or(const TomlTable& t, const std::string& sec, const std::string& key, bool dflt) {
    auto* v = find(t, sec, key);
    return v ? v->as_bool() : dflt;
}

std::string string_or(const TomlTable& t, const std::string& sec, const std::string& key,
                      const std::string& dflt) {
    auto* v = find(t, sec, key);
    return v ? v->as_string() : dflt;
}

} // namespace

ExperimentConfig ExperimentConfig::from_string(const std::string& toml_text) {
    auto t = parse_toml(toml_text);
    ExperimentConfig cfg;

    cfg.reference.kind = reference_kind_from_string(string_or(t, "reference", "kind", "lamella2d"));
    cfg.reference.radius = number_or(t, "reference", "radius", 0.25);
    cfg.reference.slab_width = number_or(t, "reference", "slab_width", 0.5);
    const bool two_d = cfg.reference.kind == ReferenceKind::Lamella3D ||
                       cfg.reference.kind == ReferenceKind::Cylinder3D;
    cfg.reference.grid.dims = two_d ? 2 : 1;
    if (auto* v = find(t, "reference", "n")) {
        if (std::holds_alternative<std::vector<double>>(v->data)) {
            auto arr = v->as_array();
            if (arr.empty() || static_cast<int>(arr.size()) > 2)
                throw ConfigError("reference.n must have 1 or 2 entries", v->line, 0);
            cfg.reference.grid.n[0] = static_cast<int>(arr[0]);
            cfg.reference.grid.n[1] = arr.size() == 2 ? static_cast<int>(arr[1]) : 1;
            if (two_d && arr.size() == 1) cfg.reference.grid.n[1] = cfg.reference.grid.n[0];
        } else {
            cfg.reference.grid.n[0] = static_cast<int>(v->as_number());
            cfg.reference.grid.n[1] = two_d ? cfg.reference.grid.n[0] : 1;
        }
    } else {
        cfg.reference.grid.n = {256, two_d ? 256 : 1};
    }

    cfg.flow.kind = flow_kind_from_string(string_or(t, "flow", "kind", "vpmcf"));
    cfg.flow.dt = number_or(t, "flow", "dt", 1e-5);
    cfg.flow.t_end = number_or(t, "flow", "t_end", 0.05);
    cfg.flow.imex_theta = number_or(t, "flow", "theta", 1.0);
    cfg.flow.volume_projection = bool_or(t, "flow", "volume_projection", true);
    cfg.flow.adapt = bool_or(t, "flow", "adapt", true);
    cfg.flow.safety = number_or(t, "flow", "safety", 1.0);
    cfg.flow.snapshot_every = static_cast<int>(number_or(t, "flow", "snapshot_every", 100));
    cfg.flow.seed = static_cast<std::uint64_t>(number_or(t, "flow", "seed", 0));

    std::string ikind = string_or(t, "initial", "kind", "zero");
    if (ikind == "zero") cfg.initial.kind = InitialKind::Zero;
    else if (ikind == "single_mode") cfg.initial.kind = InitialKind::SingleMode;
    else if (ikind == "random_band_limited") cfg.initial.kind = InitialKind::RandomBandLimited;
    else {
        auto* v = find(t, "initial", "kind");
        throw ConfigError("unknown initial kind '" + ikind + "'", v ? v->line : 0, 0);
    }
    cfg.initial.amplitude = number_or(t, "initial", "amplitude", 0.0);
    cfg.initial.k = static_cast<int>(number_or(t, "initial", "k", 1));
    cfg.initial.kmax = static_cast<int>(number_or(t, "initial", "kmax", 8));
    cfg.initial.seed = static_cast<std::uint64_t>(number_or(t, "initial", "seed", 0));
    cfg.initial.c11_target = number_or(t, "initial", "c11_target", 0.0);

    cfg.diagnostics.delta_star = number_or(t, "diagnostics", "delta_star", 0.1);
    if (auto* v = find(t, "diagnostics", "fit_window")) {
        auto arr = v->as_array();
        if (arr.size() != 2) throw ConfigError("fit_window must be [t0, t1]", v->line, 0);
        cfg.diagnostics.fit_window = {arr[0], arr[1]};
    }
    cfg.diagnostics.asymmetry = bool_or(t, "diagnostics", "asymmetry", false);
    cfg.diagnostics.asymmetry_stride =
        static_cast<int>(number_or(t, "diagnostics", "asymmetry_stride", 1));

    cfg.output_dir = string_or(t, "output", "dir", "out");
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_string(read_file(path));
}

std::string ExperimentConfig::to_toml() const {
    std::ostringstream os;
    os.precision(17);
    os << "[reference]\n";
    os << "kind = \"" << to_string(reference.kind) << "\"\n";
    os << "radius = " << reference.radius << "\n";
    os << "slab_width = " << reference.slab_width << "\n";
    os << "n = [" << reference.grid.n[0];
    if (reference.grid.dims == 2) os << ", " << reference.grid.n[1];
    os << "]\n\n";
    os << "[flow]\n";
    os << "kind = \"" << to_string(flow.kind) << "\"\n";
    os << "dt = " << flow.dt << "\n";
    os << "t_end = " << flow.t_end << "\n";
    os << "theta = " << flow.imex_theta << "\n";
    os << "volume_projection = " << (flow.volume_projection ? "true" : "false") << "\n";
    os << "adapt = " << (flow.adapt ? "true" : "false") << "\n";
    os << "safety = " << flow.safety << "\n";
    os << "snapshot_every = " << flow.snapshot_every << "\n\n";
    os << "[initial]\n";
    os << "kind = \""
       << (initial.kind == InitialKind::Zero
               ? "zero"
               : initial.kind == InitialKind::SingleMode ? "single_mode" : "random_band_limited")
       << "\"\n";
    os << "amplitude = " << initial.amplitude << "\n";
    os << "k = " << initial.k << "\n";
    os << "kmax = " << initial.kmax << "\n";
    os << "seed = " << initial.seed << "\n";
    os << "c11_target = " << initial.c11_target << "\n\n";
    os << "[diagnostics]\n";
    os << "delta_star = " << diagnostics.delta_star << "\n";
    os << "fit_window = [" << diagnostics.fit_window[0] << ", " << diagnostics.fit_window[1]
       << "]\n";
    os << "asymmetry = " << (diagnostics.asymmetry ? "true" : "false") << "\n";
    os << "asymmetry_stride = " << diagnostics.asymmetry_stride << "\n\n";
    os << "[output]\n";
    os << "dir = \"" << output_dir << "\"\n";
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(to_toml()); }

HeightField generate_initial(const ReferenceSurface& ref, const InitialSpec& spec) {
    switch (spec.kind) {
        case InitialKind::Zero:
            return zero_height_field(ref);
        case InitialKind::SingleMode: {
            if (!(std::abs(spec.amplitude) > 0.0)) throw FlowError("single_mode needs an amplitude");
            if (spec.amplitude > 0.2 * ref.tubular_radius)
                throw FlowError("initial amplitude exceeds 0.2 tubular_radius");
            std::vector<double> v(ref.total_nodes());
            const double two_pi = 2.0 * std::numbers::pi;
            for (int i = 0; i < ref.grid.n(0); ++i)
                for (int j = 0; j < (ref.grid.dims() == 2 ? ref.grid.n(1) : 1); ++j)
                    v[ref.grid.param().index(i, j)] =
                        spec.amplitude * std::sin(two_pi * spec.k * ref.grid.coord(0, i));
            auto u = make_height_field(ref, std::move(v));
            return project_volume(ref, u).first;
        }
        case InitialKind::RandomBandLimited: {
            double target = spec.c11_target > 0.0 ? spec.c11_target : spec.amplitude;
            if (!(target > 0.0)) throw FlowError("random field needs c11_target or amplitude");
            auto u = random_band_limited_field(ref, spec.seed, 1.0, spec.kmax);
            for (int it = 0; it < 50; ++it) {
                double c11 = field_norm(ref, u.values, NormKind::c11());
                if (!(c11 > 0.0)) throw FlowError("degenerate random field");
                double scale = target / c11;
                for (double& x : u.values) x *= scale;
                if (u.max_abs() > 0.2 * ref.tubular_radius)
                    throw FlowError("c11_target unreachable within the tubular guard");
                u = project_volume(ref, u).first;
                double after = field_norm(ref, u.values, NormKind::c11());
                double vol_err =
                    std::abs(enclosed_volume(ref, u) - ref.volume) / ref.volume;
                if (std::abs(after - target) <= 1e-12 * target && vol_err <= 1e-14) break;
                if (it == 49) throw NoConvergence("initial rescale/projection did not settle");
            }
            return u;
        }
    }
    throw FlowError("unknown initial kind");
}

void write_steps_ndjson(const std::string& path, const std::vector<StepReport>& steps) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FlowError("cannot open '" + path + "' for writing");
    for (const auto& s : steps) {
        nlohmann::ordered_json j;
        j["t"] = s.t;
        j["dt"] = s.dt_used;
        j["perimeter"] = s.perimeter_after;
        j["volume_rel_drift"] = s.volume_rel_drift_after;
        j["volume_drift_pre_projection"] = s.volume_drift_before_projection;
        j["lambda"] = s.lambda;
        j["residual"] = s.residual;
        j["halvings"] = s.halvings;
        j["projection_iters"] = s.projection_iters;
        os << j.dump() << "\n";
    }
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["code_version"] = code_version;
    j["reference"] = reference;
    j["grid"] = grid_n;
    j["flow"] = flow;
    j["steps"] = steps;
    j["wall_time_sec"] = wall_time_sec;
    j["output_dir"] = output_dir;
    if (has_rate_fit) {
        j["rate_fit"] = {{"t0", rate_fit.t0},     {"t1", rate_fit.t1},
                         {"rate", rate_fit.rate}, {"prefactor", rate_fit.prefactor},
                         {"r_squared", rate_fit.r_squared}, {"samples", rate_fit.samples}};
    }
    if (!acceptance.empty()) j["acceptance"] = acceptance;
    return j.dump(2);
}

RunManifest run_experiment(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    if (const char* env = std::getenv("TORUSFLOW_OUTPUT_DIR")) config.output_dir = env;

    const auto t_start = std::chrono::steady_clock::now();
    auto ref = make_reference(config.reference);
    auto u0 = generate_initial(ref, config.initial);
    auto run = run_flow(ref, u0, config.flow);

    DiagnosticsOptions dopts;
    dopts.delta_star = config.diagnostics.delta_star;
    dopts.asymmetry = config.diagnostics.asymmetry;
    dopts.asymmetry_stride = config.diagnostics.asymmetry_stride;
    auto diag = diagnose_trajectory(ref, run.trajectory, dopts);

    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);

    {
        std::ofstream os(dir / "config.toml", std::ios::binary);
        os << config.to_toml();
    }
    write_steps_ndjson((dir / "steps.ndjson").string(), run.steps);
    write_diagnostics_ndjson((dir / "diagnostics.ndjson").string(), diag.records);
    write_recentering_ndjson((dir / "recentering.ndjson").string(), diag.track);

    nlohmann::ordered_json index;
    index["flow"] = to_string(run.trajectory.flow_kind);
    index["times"] = run.trajectory.times;
    std::vector<std::string> files;
    for (int i = 0; i < run.trajectory.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "snap_%06d.hf", i);
        files.emplace_back(name);
        save_height_field((dir / name).string(), ref, run.trajectory.fields[i]);
    }
    index["files"] = files;
    {
        std::ofstream os(dir / "snapshots.json", std::ios::binary);
        os << index.dump(2) << "\n";
    }

    RunManifest manifest;
    manifest.config_hash = hex64(config.hash());
    manifest.code_version = kCodeVersion;
    manifest.reference = config.reference.canonical();
    manifest.grid_n = {ref.grid.n(0), ref.grid.dims() == 2 ? ref.grid.n(1) : 1};
    manifest.flow = to_string(config.flow.kind);
    manifest.steps = static_cast<long>(run.steps.size());
    manifest.output_dir = config.output_dir;

    const auto [w0, w1] = config.diagnostics.fit_window;
    if (w1 > w0) {
        std::vector<double> t, gap;
        for (const auto& r : diag.records) {
            t.push_back(r.t);
            gap.push_back(r.perimeter_gap);
        }
        try {
            manifest.rate_fit = fit_rate(t, gap, w0, w1);
            manifest.has_rate_fit = true;
        } catch (const FlowError&) {
            manifest.has_rate_fit = false; // window too sparse or gap hit zero
        }
    }

    manifest.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    {
        std::ofstream os(dir / "manifest.json", std::ios::binary);
        os << manifest.to_json() << "\n";
    }
    return manifest;
}

LoadedRun load_run(const std::string& dir) {
    const fs::path base(dir);
    auto config = ExperimentConfig::from_file((base / "config.toml").string());
    auto ref = make_reference(config.reference);

    auto index = nlohmann::json::parse(read_file((base / "snapshots.json").string()));
    Trajectory traj;
    traj.ref_hash = ref.hash;
    traj.flow_kind = flow_kind_from_string(index.at("flow").get<std::string>());
    auto times = index.at("times").get<std::vector<double>>();
    auto files = index.at("files").get<std::vector<std::string>>();
    if (times.size() != files.size()) throw FlowError("corrupt snapshot index in '" + dir + "'");
    for (std::size_t i = 0; i < times.size(); ++i)
        traj.append(times[i], load_height_field((base / files[i]).string(), ref));
    return LoadedRun{std::move(config), std::move(ref), std::move(traj)};
}

} // namespace torusflow
