#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "torusflow/acceptance.hpp"
#include "torusflow/diagnostics.hpp"
#include "torusflow/experiment.hpp"

using namespace torusflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAcceptance = 2;
constexpr int kExitNumerical = 3;

int cmd_simulate(const std::string& config_path, const std::string& output_override) {
    auto cfg = ExperimentConfig::from_file(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    auto manifest = run_experiment(cfg);
    std::cout << manifest.to_json() << "\n";
    return kExitOk;
}

std::vector<std::string> split_keys(const std::string& csv) {
    std::vector<std::string> keys;
    std::string item;
    std::istringstream is(csv);
    while (std::getline(is, item, ',')) {
        if (!item.empty()) keys.push_back(item);
    }
    return keys;
}

int cmd_diagnose(const std::string& run_dir, bool asymmetry, int stride, const std::string& csv_keys) {
    auto run = load_run(run_dir);
    DiagnosticsOptions opts;
    opts.delta_star = run.config.diagnostics.delta_star;
    opts.asymmetry = asymmetry || run.config.diagnostics.asymmetry;
    opts.asymmetry_stride = stride > 0 ? stride : run.config.diagnostics.asymmetry_stride;
    auto diag = diagnose_trajectory(run.ref, run.trajectory, opts);

    namespace fs = std::filesystem;
    write_diagnostics_ndjson((fs::path(run_dir) / "diagnostics.ndjson").string(), diag.records);
    write_recentering_ndjson((fs::path(run_dir) / "recentering.ndjson").string(), diag.track);
    if (!csv_keys.empty())
        export_diagnostics_csv((fs::path(run_dir) / "diagnostics.csv").string(), diag.records,
                               split_keys(csv_keys));

    nlohmann::ordered_json summary;
    summary["snapshots"] = diag.records.size();
    summary["final_perimeter_gap"] = diag.records.back().perimeter_gap;
    summary["final_projection_defect"] = diag.records.back().projection_defect;
    if (diag.records.back().asymmetry) summary["final_asymmetry"] = *diag.records.back().asymmetry;
    const auto [w0, w1] = run.config.diagnostics.fit_window;
    if (w1 > w0) {
        std::vector<double> t, gap;
        for (const auto& r : diag.records) {
            t.push_back(r.t);
            gap.push_back(r.perimeter_gap);
        }
        auto fit = fit_rate(t, gap, w0, w1);
        summary["gap_rate"] = fit.rate;
        summary["gap_rate_r2"] = fit.r_squared;
    }
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_norms(const std::string& run_dir, double beta) {
    auto run = load_run(run_dir);
    auto xt = norm_XT(run.ref, run.trajectory, beta);
    auto yt = norm_YT(run.ref, run.trajectory, beta);
    nlohmann::ordered_json j;
    j["beta"] = beta;
    j["T"] = xt.T;
    j["x_norm"] = xt.x_norm;
    j["y_norm"] = yt.y_norm;
    nlohmann::ordered_json terms;
    for (const auto& [k, v] : xt.per_term) terms[k] = v;
    for (const auto& [k, v] : yt.per_term) terms[k] = v;
    j["per_term"] = terms;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_stability(const std::string& config_path, int kmax) {
    auto cfg = ExperimentConfig::from_file(config_path);
    auto ref = make_reference(cfg.reference);
    auto spec = stability_spectrum(ref, kmax);
    std::printf("reference: %s\n", cfg.reference.canonical().c_str());
    std::printf("strictly stable: %s (min T-perp eigenvalue %.6g)\n",
                spec.strictly_stable ? "yes" : "no", spec.min_eigenvalue);
    auto print_grouped = [](const std::vector<SpectrumEntry>& entries, const char* tag, int limit) {
        int shown = 0;
        for (std::size_t i = 0; i < entries.size() && shown < limit;) {
            std::size_t j = i;
            while (j < entries.size() && entries[j].mode == entries[i].mode &&
                   entries[j].eigenvalue == entries[i].eigenvalue)
                ++j;
            std::printf("  %s k=(%d,%d)  eigenvalue %.6g  (x%zu)\n", tag, entries[i].mode[0],
                        entries[i].mode[1], entries[i].eigenvalue, j - i);
            ++shown;
            i = j;
        }
    };
    print_grouped(spec.translations, "translation mode", 8);
    print_grouped(spec.entries, "mode", 12);
    return spec.strictly_stable ? kExitOk : kExitAcceptance;
}

int cmd_verify_all(const std::string& output_dir) {
    auto report = run_acceptance(output_dir, std::cout);
    nlohmann::ordered_json j;
    for (const auto& r : report.results)
        j["criterion_" + std::to_string(r.id)] = {{"name", r.name},
                                                  {"passed", r.passed},
                                                  {"detail", r.detail},
                                                  {"seconds", r.seconds}};
    std::ofstream os(std::filesystem::path(output_dir) / "acceptance.json", std::ios::binary);
    os << j.dump(2) << "\n";
    return report.all_passed() ? kExitOk : kExitAcceptance;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"torusflow: volume-preserving mean curvature flow and surface diffusion flow "
                 "on flat tori, as normal graphs over stable reference sets"};
    app.require_subcommand(1);

    std::string config_path, run_dir, output_dir;
    double beta = 0.5;
    int kmax = 8, stride = 0;
    bool asymmetry = false;
    std::string csv_keys;

    auto* simulate = app.add_subcommand("simulate", "run a configured flow experiment");
    simulate->add_option("config", config_path, "TOML experiment config")->required();
    simulate->add_option("--output", output_dir, "override the output directory");

    auto* diagnose = app.add_subcommand("diagnose", "recompute diagnostics for a stored run");
    diagnose->add_option("run", run_dir, "run directory written by simulate")->required();
    diagnose->add_flag("--asymmetry", asymmetry, "force the Fraenkel asymmetry evaluation");
    diagnose->add_option("--stride", stride, "snapshot stride for the asymmetry search");
    diagnose->add_option("--csv", csv_keys, "export the named diagnostics keys to diagnostics.csv");

    auto* norms = app.add_subcommand("norms", "time-weighted X_T / Y_T norms of a stored run");
    norms->add_option("run", run_dir, "run directory")->required();
    norms->add_option("--beta", beta, "Holder exponent in (0,1)")->capture_default_str();

    auto* stability = app.add_subcommand("stability", "stability spectrum of a reference");
    stability->add_option("config", config_path, "TOML config providing [reference]")->required();
    stability->add_option("--kmax", kmax, "largest frequency per axis")->capture_default_str();

    auto* verify = app.add_subcommand("verify-all", "run the full acceptance suite");
    verify->add_option("--output", output_dir, "scratch/output directory")->default_val("acceptance_out");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(config_path, output_dir);
        if (diagnose->parsed()) return cmd_diagnose(run_dir, asymmetry, stride, csv_keys);
        if (norms->parsed()) return cmd_norms(run_dir, beta);
        if (stability->parsed()) return cmd_stability(config_path, kmax);
        if (verify->parsed()) return cmd_verify_all(output_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const FlowError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
