#include "mist/sweep.hpp"

#include "mist/export.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace mist {

namespace {

using json = nlohmann::ordered_json;

std::vector<double> arange(double start, double stop, double step) {
    if (!(step > 0.0)) throw InvalidArgument("grid step must be > 0");
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> out;
    for (long i = 0; i <= n; ++i) {
        // Round to 12 decimals so grid values print as written.
        out.push_back(std::round((start + step * static_cast<double>(i)) * 1e12) / 1e12);
    }
    return out;
}

std::vector<double> parse_grid(const json& v, const char* key) {
    if (v.is_array()) return v.get<std::vector<double>>();
    if (v.is_object()) {
        for (const char* k : {"start", "stop", "step"}) {
            if (!v.contains(k)) throw InvalidArgument(fmt::format("config: {} range needs '{}'", key, k));
        }
        return arange(v.at("start").get<double>(), v.at("stop").get<double>(), v.at("step").get<double>());
    }
    throw InvalidArgument(fmt::format("config: {} must be an array or a {{start, stop, step}} object", key));
}

json to_json(const SweepConfig& c, bool include_runtime) {
    json j;
    j["e_c"] = c.e_c;
    if (c.k_eff) j["k_eff"] = *c.k_eff;
    if (c.g) j["g"] = *c.g;
    j["omega_r"] = c.omega_r;
    j["kappa"] = c.kappa;
    j["epsilon"] = c.epsilon;
    j["duration"] = c.duration;
    j["drive_detuning"] = c.drive_detuning;
    j["delta_grid"] = c.delta_grid;
    j["n_g_grid"] = c.n_g_grid;
    j["initial_states"] = c.initial_states;
    j["level_count"] = c.level_count;
    j["charge_cutoff"] = c.charge_cutoff;
    j["dt"] = c.dt;
    j["sample_stride"] = c.sample_stride;
    j["threshold"] = c.threshold;
    j["nbar_step"] = c.nbar_step;
    if (include_runtime) {
        j["workers"] = c.workers;
        j["output_dir"] = c.output_dir;
    }
    return j;
}

void from_json_into(const json& j, SweepConfig& c) {
    static const std::set<std::string> known = {
        "e_c", "k_eff", "g", "omega_r", "kappa", "epsilon", "duration", "drive_detuning", "delta_grid",
        "n_g_grid", "initial_states", "level_count", "charge_cutoff", "dt", "sample_stride", "threshold",
        "nbar_step", "workers", "output_dir"};
    if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw InvalidArgument(fmt::format("config: unknown key '{}'", key));
    }
    try {
        auto num = [&](const char* key, double& dst) {
            if (j.contains(key)) dst = j.at(key).get<double>();
        };
        auto integer = [&](const char* key, int& dst) {
            if (j.contains(key)) dst = j.at(key).get<int>();
        };
        num("e_c", c.e_c);
        if (j.contains("k_eff")) {
            c.k_eff = j.at("k_eff").is_null() ? std::nullopt : std::optional(j.at("k_eff").get<double>());
            if (c.k_eff && !j.contains("g")) c.g.reset();
        }
        if (j.contains("g")) {
            c.g = j.at("g").is_null() ? std::nullopt : std::optional(j.at("g").get<double>());
            if (c.g && !j.contains("k_eff")) c.k_eff.reset();
        }
        num("omega_r", c.omega_r);
        num("kappa", c.kappa);
        num("epsilon", c.epsilon);
        num("duration", c.duration);
        num("drive_detuning", c.drive_detuning);
        if (j.contains("delta_grid")) c.delta_grid = parse_grid(j.at("delta_grid"), "delta_grid");
        if (j.contains("n_g_grid")) c.n_g_grid = parse_grid(j.at("n_g_grid"), "n_g_grid");
        if (j.contains("initial_states")) c.initial_states = j.at("initial_states").get<std::vector<int>>();
        integer("level_count", c.level_count);
        integer("charge_cutoff", c.charge_cutoff);
        num("dt", c.dt);
        integer("sample_stride", c.sample_stride);
        num("threshold", c.threshold);
        num("nbar_step", c.nbar_step);
        integer("workers", c.workers);
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("config: {}", e.what()));
    }
}

json onset_json(const OnsetPoint& p) {
    return json{{"delta", p.delta}, {"nbar_onset", p.nbar_onset}, {"uncertainty", p.uncertainty}};
}

constexpr const char* kUnits = "frequencies GHz (linear), times ns, rates 1/ns, photon numbers dimensionless";

}  // namespace

int default_worker_count() {
    if (const char* env = std::getenv("MIST_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

SweepConfig SweepConfig::defaults() {
    SweepConfig c;
    c.delta_grid = arange(0.6, 1.6, 0.02);
    c.n_g_grid = arange(-0.5, 0.0, 0.05);
    c.workers = default_worker_count();
    return c;
}

void SweepConfig::validate() const {
    if (k_eff.has_value() == g.has_value()) throw InvalidArgument("config: set exactly one of k_eff and g");
    if (!(e_c > 0.0)) throw InvalidArgument("config: e_c must be > 0");
    if (!(omega_r > 0.0)) throw InvalidArgument("config: omega_r must be > 0");
    if (!(kappa > 0.0)) throw InvalidArgument("config: kappa must be > 0");
    if (!(epsilon >= 0.0)) throw InvalidArgument("config: epsilon must be >= 0");
    if (!(duration > 0.0)) throw InvalidArgument("config: duration must be > 0");
    if (delta_grid.empty() || n_g_grid.empty() || initial_states.empty()) {
        throw InvalidArgument("config: delta_grid, n_g_grid and initial_states must be non-empty");
    }
    for (std::size_t i = 1; i < delta_grid.size(); ++i) {
        if (!(delta_grid[i] > delta_grid[i - 1])) throw InvalidArgument("config: delta_grid must be ascending");
    }
    for (double d : delta_grid) {
        if (!(d > 0.0)) throw InvalidArgument("config: detunings must be > 0 (qubit above resonator)");
    }
    for (int s : initial_states) {
        if (s < 0 || s >= level_count) throw InvalidArgument(fmt::format("config: initial state {} out of range", s));
    }
    if (level_count < 2 || charge_cutoff < level_count) {
        throw InvalidArgument("config: need level_count >= 2 and charge_cutoff >= level_count");
    }
    if (!(dt > 0.0) || dt > 0.05) throw InvalidArgument("config: dt must be in (0, 0.05] ns");
    if (sample_stride < 1) throw InvalidArgument("config: sample_stride must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("config: threshold must be in (0, 1)");
    if (!(nbar_step > 0.0)) throw InvalidArgument("config: nbar_step must be > 0");
    if (workers < 1) throw InvalidArgument("config: workers must be >= 1");
}

double SweepConfig::coupling_at(double delta) const {
    if (g) return *g;
    const double omega_q = omega_r + delta;
    return 0.5 * *k_eff * std::sqrt(omega_q * omega_r);
}

SweepConfig sweep_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("config: {}", e.what()));
    }
    SweepConfig c = SweepConfig::defaults();
    from_json_into(j, c);
    return c;
}

std::string sweep_config_to_json(const SweepConfig& config, bool include_runtime) {
    return to_json(config, include_runtime).dump(2);
}

void apply_override(SweepConfig& config, const std::string& key, const std::string& value) {
    json patch;
    try {
        patch[key] = json::parse(value);
    } catch (const nlohmann::json::exception&) {
        patch[key] = value;  // bare string
    }
    from_json_into(patch, config);
}

std::string config_hash(const SweepConfig& config) { return fnv1a_hex(to_json(config, false).dump()); }

DetuningSetup setup_detuning(const SweepConfig& config, double delta) {
    DetuningSetup s;
    s.delta = delta;
    s.omega_q = config.omega_r + delta;
    s.e_j = ej_for_frequency(config.e_c, s.omega_q, 0.0, config.charge_cutoff);
    s.g = config.coupling_at(delta);
    return s;
}

SimulationConfig member_simulation(const SweepConfig& config, const DetuningSetup& setup, double n_g,
                                   int initial_state) {
    TransmonParams p;
    p.e_c = config.e_c;
    p.e_j = setup.e_j;
    p.n_g = n_g;
    p.charge_cutoff = config.charge_cutoff;
    p.level_count = config.level_count;

    SimulationConfig sim;
    sim.strip.eigen = diagonalize(p);
    sim.strip.coupling = CouplingStrength{setup.g};
    sim.strip.omega_r = config.omega_r;
    sim.strip.omega_d = config.omega_r;
    sim.drive.epsilon = config.epsilon;
    sim.drive.omega_d = config.omega_r;
    sim.drive.omega_r_dressed = config.omega_r + config.drive_detuning;
    sim.drive.kappa = config.kappa;
    sim.drive.duration = config.duration;
    sim.initial_state = initial_state;
    sim.dt = config.dt;
    sim.sample_stride = config.sample_stride;
    return sim;
}

SweepResult run_sweep(const SweepConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    const std::size_t n_delta = config.delta_grid.size();
    const std::size_t n_ng = config.n_g_grid.size();
    const std::size_t n_state = config.initial_states.size();

    std::vector<DetuningSetup> setups;
    setups.reserve(n_delta);
    for (double d : config.delta_grid) {
        try {
            setups.push_back(setup_detuning(config, d));
        } catch (const Error& e) {
            throw SweepError(fmt::format("setup at delta = {} GHz failed: {}", d, e.what()), d,
                             std::numeric_limits<double>::quiet_NaN(), -1);
        }
    }

    SweepResult result;
    result.delta_grid = config.delta_grid;
    result.config_hash = config_hash(config);
    {
        DriveConfig drive;
        drive.epsilon = config.epsilon;
        drive.kappa = config.kappa;
        drive.omega_d = config.omega_r;
        drive.omega_r_dressed = config.omega_r + config.drive_detuning;
        drive.duration = config.duration;
        result.nbar_grid = uniform_nbar_grid(std::norm(square_pulse_alpha(drive, config.duration)), config.nbar_step);
    }

    // Item index = ((state * n_delta) + delta) * n_ng + n_g; every worker writes
    // only its own slot, so the aggregate is independent of scheduling.
    const std::size_t n_items = n_state * n_delta * n_ng;
    std::vector<std::vector<double>> member_curves(n_items);
    std::vector<char> member_flagged(n_items, 0);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex failure_mutex;
    std::size_t failed_item = n_items;
    std::string failure_message;

    auto worker = [&] {
        for (;;) {
            const std::size_t item = next.fetch_add(1);
            if (item >= n_items || abort.load()) return;
            const std::size_t ig = item % n_ng;
            const std::size_t id = (item / n_ng) % n_delta;
            const std::size_t is = item / (n_ng * n_delta);
            try {
                const SimulationConfig sim =
                    member_simulation(config, setups[id], config.n_g_grid[ig], config.initial_states[is]);
                const PopulationTrace trace = propagate(sim);
                member_flagged[item] = trace.flagged() ? 1 : 0;
                member_curves[item] = resample(survival_vs_nbar(trace), result.nbar_grid).survival_running_min;
            } catch (const std::exception& e) {
                std::lock_guard lock(failure_mutex);
                if (item < failed_item) {
                    failed_item = item;
                    failure_message = e.what();
                }
                abort.store(true);
                return;
            }
        }
    };

    const int n_workers = static_cast<int>(std::min<std::size_t>(config.workers, std::max<std::size_t>(n_items, 1)));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (failed_item < n_items) {
        const std::size_t ig = failed_item % n_ng;
        const std::size_t id = (failed_item / n_ng) % n_delta;
        const std::size_t is = failed_item / (n_ng * n_delta);
        throw SweepError(fmt::format("member simulation (delta = {} GHz, n_g = {}, state = {}) failed: {}",
                                     config.delta_grid[id], config.n_g_grid[ig], config.initial_states[is],
                                     failure_message),
                         config.delta_grid[id], config.n_g_grid[ig], config.initial_states[is]);
    }

    result.flagged_members = static_cast<std::size_t>(std::count(member_flagged.begin(), member_flagged.end(), 1));
    const std::size_t n_nbar = result.nbar_grid.size();
    for (std::size_t is = 0; is < n_state; ++is) {
        StateResult sr;
        sr.initial_state = config.initial_states[is];
        sr.heatmap.assign(n_delta, std::vector<double>(n_nbar, 0.0));
        std::vector<DetuningCurve> curves;
        for (std::size_t id = 0; id < n_delta; ++id) {
            auto& row = sr.heatmap[id];
            for (std::size_t ig = 0; ig < n_ng; ++ig) {
                const auto& member = member_curves[(is * n_delta + id) * n_ng + ig];
                for (std::size_t k = 0; k < n_nbar; ++k) row[k] += member[k];
            }
            for (double& v : row) v /= static_cast<double>(n_ng);
            curves.push_back({config.delta_grid[id], SurvivalCurve{result.nbar_grid, row}});
        }
        // Raw onsets are the unfiltered per-detuning points.
        for (const auto& dc : curves) {
            const DetuningCurve one[] = {dc};
            const auto p = extract_onsets(one, config.threshold, sr.initial_state);
            sr.raw_onsets.insert(sr.raw_onsets.end(), p.begin(), p.end());
        }
        sr.onsets = monotonic_filter(sr.raw_onsets);
        try {
            sr.boundary = fit_boundary(sr.onsets);
        } catch (const FitError& e) {
            sr.fit_error = e.what();
        }
        result.states.push_back(std::move(sr));
    }

    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

std::string heatmap_csv(const SweepResult& result, std::size_t state_index) {
    const StateResult& sr = result.states.at(state_index);
    std::ostringstream os;
    write_comment_header(os, fmt::format("mist sweep heatmap: survival probability (charge-averaged running minimum)\n"
                                         "initial_state={}\nconfig_hash={}\ntool_version={}\n"
                                         "rows: delta [GHz]; columns: nbar [photons]",
                                         sr.initial_state, result.config_hash, result.tool_version));
    os << "delta\\nbar";
    for (double n : result.nbar_grid) os << ',' << format_number(n);
    os << '\n';
    for (std::size_t id = 0; id < result.delta_grid.size(); ++id) {
        os << format_number(result.delta_grid[id]);
        for (double v : sr.heatmap[id]) os << ',' << format_number(v);
        os << '\n';
    }
    return os.str();
}

std::string boundary_json(const SweepResult& result, std::size_t state_index, double threshold) {
    const StateResult& sr = result.states.at(state_index);
    json j;
    j["meta"] = {{"config_hash", result.config_hash}, {"tool_version", result.tool_version}, {"units", kUnits}};
    j["initial_state"] = sr.initial_state;
    if (sr.boundary) {
        j["A"] = sr.boundary->A;
        j["B"] = sr.boundary->B;
    } else {
        j["A"] = nullptr;
        j["B"] = nullptr;
        j["error"] = sr.fit_error;
    }
    j["threshold"] = threshold;
    j["points"] = json::array();
    for (const auto& p : sr.onsets) j["points"].push_back(onset_json(p));
    j["raw_onsets"] = json::array();
    for (const auto& p : sr.raw_onsets) j["raw_onsets"].push_back(onset_json(p));
    j["boundary_samples"] = json::array();
    if (sr.boundary) {
        for (double d : result.delta_grid) {
            j["boundary_samples"].push_back({{"delta", d}, {"nbar", sr.boundary->boundary(d)}});
        }
    }
    return j.dump(2) + "\n";
}

void write_sweep_outputs(const SweepResult& result, const SweepConfig& config, const std::string& dir) {
    const std::filesystem::path base(dir);
    for (std::size_t i = 0; i < result.states.size(); ++i) {
        const int s = result.states[i].initial_state;
        write_text_file((base / fmt::format("heatmap_state{}.csv", s)).string(), heatmap_csv(result, i));
        write_text_file((base / fmt::format("boundary_state{}.json", s)).string(),
                        boundary_json(result, i, config.threshold));
    }
    json cfg;
    cfg["meta"] = {{"config_hash", result.config_hash}, {"tool_version", result.tool_version}, {"units", kUnits}};
    cfg["config"] = to_json(config, false);
    write_text_file((base / "sweep_config.json").string(), cfg.dump(2) + "\n");

    json meta;
    meta["config_hash"] = result.config_hash;
    meta["tool_version"] = result.tool_version;
    meta["wall_time_s"] = result.wall_time_s;
    meta["workers"] = config.workers;
    meta["flagged_members"] = result.flagged_members;
    write_text_file((base / "run_metadata.json").string(), meta.dump(2) + "\n");
}

OracleReport run_oracle_check(const SweepConfig& config, Interaction interaction) {
    config.validate();
    OracleReport report;
    const int K = config.level_count;
    report.max_diff_by_n.assign(3 * K + 1, 0.0);
    for (double delta : config.delta_grid) {
        const DetuningSetup setup = setup_detuning(config, delta);
        for (double ng : config.n_g_grid) {
            StripConfig strip = member_simulation(config, setup, ng, 0).strip;
            strip.interaction = interaction;
            OracleCase c{delta, ng, 0, 0.0};
            for (int n = 0; n <= 3 * K; ++n) {
                const double d = jtc_spectrum_mismatch(strip, n);
                report.max_diff_by_n[n] = std::max(report.max_diff_by_n[n], d);
                if (d > c.max_diff) {
                    c.max_diff = d;
                    c.worst_n = n;
                }
            }
            report.max_diff = std::max(report.max_diff, c.max_diff);
            report.cases.push_back(c);
        }
    }
    report.pass = report.max_diff < report.tolerance;
    return report;
}

std::string oracle_report_json(const OracleReport& report, const SweepConfig& config) {
    json j;
    j["meta"] = {{"config_hash", config_hash(config)}, {"tool_version", kToolVersion}, {"units", kUnits}};
    j["pass"] = report.pass;
    j["tolerance_ghz"] = report.tolerance;
    j["max_diff_ghz"] = report.max_diff;
    j["max_diff_by_total_excitations"] = report.max_diff_by_n;
    j["cases"] = json::array();
    for (const auto& c : report.cases) {
        j["cases"].push_back({{"delta", c.delta}, {"n_g", c.n_g}, {"worst_n", c.worst_n}, {"max_diff_ghz", c.max_diff}});
    }
    return j.dump(2) + "\n";
}

}  // namespace mist
