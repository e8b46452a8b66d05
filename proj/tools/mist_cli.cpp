// mist: command-line front end for sweeps, fan diagrams, single traces,
// dispersive calibration and the spectral oracle check.

#include "mist/export.hpp"
#include "mist/sweep.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kUnits = "frequencies GHz (linear), times ns, rates 1/ns, photon numbers dimensionless";

// Options shared by every subcommand. Typed flags are folded into the config
// after --config and --set so the most specific source wins.
struct CommonOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
    std::optional<double> e_c, k_eff, g, omega_r, kappa, epsilon, duration, dt, threshold, drive_detuning;
    std::optional<int> workers, level_count, charge_cutoff;

    void attach(CLI::App* app, bool needs_out) {
        app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        app->add_option("--set", sets, "Override a config key: key=value (value parsed as JSON)");
        auto* out_opt = app->add_option("--out", out, "Output directory");
        if (needs_out) out_opt->required();
        app->add_option("--e-c", e_c, "Charging energy [GHz]");
        app->add_option("--k-eff", k_eff, "Coupling efficiency (replaces g)");
        app->add_option("--g", g, "Coupling strength [GHz] (replaces k_eff)");
        app->add_option("--omega-r", omega_r, "Bare resonator frequency [GHz]");
        app->add_option("--kappa", kappa, "Resonator decay rate [1/ns]");
        app->add_option("--epsilon", epsilon, "Drive amplitude [GHz]");
        app->add_option("--duration", duration, "Drive duration [ns]");
        app->add_option("--dt", dt, "Propagation step [ns]");
        app->add_option("--threshold", threshold, "Survival threshold for onsets");
        app->add_option("--drive-detuning", drive_detuning, "Dressed resonator minus drive frequency [GHz]");
        app->add_option("--workers", workers, "Worker threads");
        app->add_option("--level-count", level_count, "Transmon levels kept");
        app->add_option("--charge-cutoff", charge_cutoff, "Charge basis cutoff N (|n| <= N)");
    }

    mist::SweepConfig resolve() const {
        mist::SweepConfig c = mist::SweepConfig::defaults();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            std::stringstream ss;
            ss << in.rdbuf();
            c = mist::sweep_config_from_json(ss.str());
        }
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw mist::InvalidArgument(fmt::format("--set expects key=value, got '{}'", kv));
            }
            mist::apply_override(c, kv.substr(0, eq), kv.substr(eq + 1));
        }
        auto put = [&](const char* key, const auto& v) {
            if (v) mist::apply_override(c, key, json(*v).dump());
        };
        put("e_c", e_c);
        put("k_eff", k_eff);
        put("g", g);
        put("omega_r", omega_r);
        put("kappa", kappa);
        put("epsilon", epsilon);
        put("duration", duration);
        put("dt", dt);
        put("threshold", threshold);
        put("drive_detuning", drive_detuning);
        put("workers", workers);
        put("level_count", level_count);
        put("charge_cutoff", charge_cutoff);
        if (!out.empty()) c.output_dir = out;
        c.validate();
        return c;
    }
};

json meta(const mist::SweepConfig& c) {
    return json{{"config_hash", mist::config_hash(c)}, {"tool_version", mist::kToolVersion}, {"units", kUnits}};
}

std::string header_text(const mist::SweepConfig& c, const std::string& what) {
    return fmt::format("{}\nconfig_hash={}\ntool_version={}\nunits: {}", what, mist::config_hash(c), mist::kToolVersion,
                       kUnits);
}

void write_stream(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ostringstream os;
    body(os);
    mist::write_text_file(path.string(), os.str());
}

mist::SimulationConfig point_simulation(const mist::SweepConfig& c, double delta, double n_g, int state) {
    return mist::member_simulation(c, mist::setup_detuning(c, delta), n_g, state);
}

int cmd_sweep(const CommonOptions& opts) {
    const mist::SweepConfig c = opts.resolve();
    try {
        const mist::SweepResult r = mist::run_sweep(c);
        mist::write_sweep_outputs(r, c, c.output_dir);
        json summary{{"meta", meta(c)}, {"output_dir", c.output_dir}, {"flagged_members", r.flagged_members}};
        for (const auto& s : r.states) {
            json st{{"initial_state", s.initial_state}, {"kept_onsets", s.onsets.size()}};
            if (s.boundary) {
                st["A"] = s.boundary->A;
                st["B"] = s.boundary->B;
            } else {
                st["fit_error"] = s.fit_error;
            }
            summary["states"].push_back(st);
        }
        std::cout << summary.dump(2) << '\n';
        return 0;
    } catch (const mist::SweepError& e) {
        json manifest{{"meta", meta(c)},
                      {"status", "failed"},
                      {"message", e.what()},
                      {"delta", e.delta()},
                      {"n_g", e.n_g()},
                      {"initial_state", e.initial_state()}};
        mist::write_text_file((fs::path(c.output_dir) / "failure_manifest.json").string(), manifest.dump(2) + "\n");
        throw;
    }
}

int cmd_fan(const CommonOptions& opts, double delta, double n_g, double nbar_max, double nbar_step, double min_gap,
            double max_gap) {
    const mist::SweepConfig c = opts.resolve();
    const mist::SimulationConfig sim = point_simulation(c, delta, n_g, 0);
    if (nbar_max <= 0.0) nbar_max = std::norm(mist::square_pulse_alpha(sim.drive, c.duration));
    const auto grid = mist::uniform_nbar_grid(nbar_max, nbar_step);
    mist::SpectrumResult spectrum = mist::fan_diagram(sim.strip, grid);
    spectrum.crossings = mist::find_avoided_crossings(spectrum, min_gap, max_gap);

    const fs::path out(c.output_dir);
    write_stream(out / "fan.csv", [&](std::ostream& os) {
        mist::write_fan_csv(os,
                            spectrum,
                            header_text(c, fmt::format("fan diagram at delta={} GHz, n_g={}; branch energies [GHz] "
                                                       "in the resonator frame",
                                                       delta, n_g)));
    });
    json j{{"meta", meta(c)}, {"delta", delta}, {"n_g", n_g}, {"g", sim.strip.g()}, {"crossings", json::array()}};
    for (const auto& x : spectrum.crossings) {
        json rec{{"branch_a", x.branch_a},
                 {"branch_b", x.branch_b},
                 {"nbar_cross", x.nbar_cross},
                 {"gap", x.gap},
                 {"g_eff", x.g_eff}};
        if (x.branch_a == 0 && x.branch_b >= 1) {
            try {
                rec["g_eff_perturbative"] = mist::g_eff_perturbative(sim.strip, x.branch_b, x.nbar_cross);
            } catch (const mist::Error&) {
                rec["g_eff_perturbative"] = nullptr;
            }
        }
        j["crossings"].push_back(rec);
    }
    json flags = json::array();
    for (const auto& f : spectrum.flags) {
        flags.push_back({{"nbar", spectrum.nbar_grid[f.grid_index]}, {"branch", f.branch}, {"overlap", f.overlap},
                         {"ambiguous", f.ambiguous}});
    }
    j["tracking_flags"] = flags;
    mist::write_text_file((out / "crossings.json").string(), j.dump(2) + "\n");
    std::cout << json{{"crossings", spectrum.crossings.size()}, {"output_dir", c.output_dir}}.dump() << '\n';
    return 0;
}

int cmd_trace(const CommonOptions& opts, double delta, double n_g, int state) {
    const mist::SweepConfig c = opts.resolve();
    mist::SimulationConfig sim = point_simulation(c, delta, n_g, state);
    const mist::PopulationTrace trace = mist::propagate(sim);
    const mist::SurvivalCurve survival = mist::survival_vs_nbar(trace);
    const auto field = mist::evolve_field(sim.drive, trace.times);

    const fs::path out(c.output_dir);
    const std::string where = fmt::format("delta={} GHz, n_g={}, initial_state={}", delta, n_g, state);
    write_stream(out / "trace.csv", [&](std::ostream& os) {
        mist::write_trace_csv(os, trace, header_text(c, "branch populations, " + where));
    });
    write_stream(out / "survival.csv", [&](std::ostream& os) {
        mist::write_survival_csv(os, survival, header_text(c, "survival running minimum vs nbar, " + where));
    });
    write_stream(out / "field.csv", [&](std::ostream& os) {
        mist::write_field_csv(os, field, header_text(c, "resonator field, " + where));
    });
    std::cout << json{{"final_survival", survival.survival_running_min.back()},
                      {"final_nbar", trace.nbar.back()},
                      {"flagged_samples", trace.flagged_samples.size()},
                      {"output_dir", c.output_dir}}
                     .dump()
              << '\n';
    return 0;
}

int cmd_calibrate(const CommonOptions& opts, double delta, double n_g, std::optional<double> stark_shift,
                  std::optional<int> target_level, std::optional<double> nbar) {
    const mist::SweepConfig c = opts.resolve();
    const mist::DetuningSetup setup = mist::setup_detuning(c, delta);
    const mist::SimulationConfig sim = mist::member_simulation(c, setup, n_g, 0);
    const auto& eig = sim.strip.eigen;
    const double omega_q = eig.omega_q();
    const double eta = eig.anharmonicity();
    const mist::DispersiveParams dp{setup.g, omega_q - c.omega_r, eta, c.omega_r, omega_q};
    const double chi = mist::chi(dp);
    const auto dressed = mist::dressed_frequencies(dp);
    const double ncrit = mist::n_crit(dp.delta, setup.g);

    json j{{"meta", meta(c)},
           {"delta", delta},
           {"n_g", n_g},
           {"e_j", setup.e_j},
           {"omega_q", omega_q},
           {"anharmonicity", eta},
           {"g", setup.g},
           {"chi", chi},
           {"omega_r_dressed_0", dressed.ket0},
           {"omega_r_dressed_1", dressed.ket1},
           {"n_crit", ncrit},
           {"k_bend", mist::k_bend(omega_q, c.omega_r, eta)}};
    if (target_level) {
        const double n = nbar.value_or(ncrit);
        j["g_eff"] = {{"target_level", *target_level},
                      {"nbar", n},
                      {"value", mist::g_eff_perturbative(sim.strip, *target_level, n)}};
    }
    if (stark_shift) {
        j["stark"] = {{"shift", *stark_shift}, {"nbar", mist::stark_to_photons(*stark_shift, chi)}};
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_oracle(const CommonOptions& opts, bool unmodified) {
    const mist::SweepConfig c = opts.resolve();
    const auto report =
        mist::run_oracle_check(c, unmodified ? mist::Interaction::unmodified : mist::Interaction::modified);
    const std::string text = mist::oracle_report_json(report, c);
    if (!c.output_dir.empty()) mist::write_text_file((fs::path(c.output_dir) / "oracle_report.json").string(), text);
    std::cout << json{{"pass", report.pass}, {"max_diff_ghz", report.max_diff}, {"tolerance_ghz", report.tolerance}}
                     .dump()
              << '\n';
    return report.pass ? 0 : 1;
}

void print_error(const std::string& kind, const std::string& message, const json& extra = json::object()) {
    json e{{"error", kind}, {"message", message}};
    for (const auto& [k, v] : extra.items()) e[k] = v;
    std::cerr << e.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measurement-induced state transition simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mist::kToolVersion));

    CommonOptions sweep_opts, fan_opts, trace_opts, cal_opts, oracle_opts;

    auto* sweep = app.add_subcommand("sweep", "Detuning x offset-charge sweep: heatmaps and boundaries");
    sweep_opts.attach(sweep, true);

    double fan_delta = 1.1, fan_ng = 0.0, fan_max = 0.0, fan_step = 0.25, fan_min_gap = 1e-4, fan_max_gap = 0.1;
    auto* fan = app.add_subcommand("fan", "Fan diagram and avoided crossings at one detuning");
    fan_opts.attach(fan, true);
    fan->add_option("--delta", fan_delta, "Qubit-resonator detuning [GHz]");
    fan->add_option("--n-g", fan_ng, "Offset charge");
    fan->add_option("--nbar-max", fan_max, "Largest photon number (default: n at the end of the drive)");
    fan->add_option("--nbar-step", fan_step, "Photon-number grid step");
    fan->add_option("--min-gap", fan_min_gap, "Smallest reported splitting [GHz]");
    fan->add_option("--max-gap", fan_max_gap, "Largest reported splitting [GHz]");

    double trace_delta = 1.1, trace_ng = 0.0;
    int trace_state = 0;
    auto* trace = app.add_subcommand("trace", "Single driven simulation");
    trace_opts.attach(trace, true);
    trace->add_option("--delta", trace_delta, "Qubit-resonator detuning [GHz]");
    trace->add_option("--n-g", trace_ng, "Offset charge");
    trace->add_option("--state", trace_state, "Initial transmon level");

    double cal_delta = 1.1, cal_ng = 0.0;
    std::optional<double> cal_shift, cal_nbar;
    std::optional<int> cal_level;
    auto* cal = app.add_subcommand("calibrate", "Dispersive parameters, n_crit, g_eff and Stark conversion");
    cal_opts.attach(cal, false);
    cal->add_option("--delta", cal_delta, "Qubit-resonator detuning [GHz]");
    cal->add_option("--n-g", cal_ng, "Offset charge");
    cal->add_option("--stark-shift", cal_shift, "Measured qubit frequency shift [GHz] to convert to photons");
    cal->add_option("--target-level", cal_level, "Level m for the multi-photon coupling estimate");
    cal->add_option("--nbar", cal_nbar, "Photon number for the g_eff estimate (default n_crit)");

    bool oracle_unmodified = false;
    auto* oracle = app.add_subcommand("oracle-check", "Compare the driven strip spectrum to the exact JTC ladder");
    oracle_opts.attach(oracle, false);
    oracle->add_flag("--unmodified", oracle_unmodified, "Use sqrt(nbar) on every bond (defect harness)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("usage", e.what());
        return 2;
    }

    try {
        if (*sweep) return cmd_sweep(sweep_opts);
        if (*fan) return cmd_fan(fan_opts, fan_delta, fan_ng, fan_max, fan_step, fan_min_gap, fan_max_gap);
        if (*trace) return cmd_trace(trace_opts, trace_delta, trace_ng, trace_state);
        if (*cal) return cmd_calibrate(cal_opts, cal_delta, cal_ng, cal_shift, cal_level, cal_nbar);
        if (*oracle) return cmd_oracle(oracle_opts, oracle_unmodified);
    } catch (const mist::SweepError& e) {
        print_error(e.kind(), e.what(), {{"delta", e.delta()}, {"n_g", e.n_g()}, {"initial_state", e.initial_state()}});
        return 1;
    } catch (const mist::BracketError& e) {
        print_error(e.kind(), e.what(), {{"achievable_min", e.achievable_min()}, {"achievable_max", e.achievable_max()}});
        return 1;
    } catch (const mist::Error& e) {
        print_error(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 0;
}
