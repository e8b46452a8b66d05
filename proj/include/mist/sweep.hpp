// Parameter sweeps over detuning and offset charge, plus the spectral oracle
// check.

#pragma once

#include "mist/analysis.hpp"
#include "mist/error.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mist {

inline constexpr const char* kToolVersion = "0.1.0";

struct SweepConfig {
    double e_c{0.194};
    std::optional<double> k_eff{0.048};
    std::optional<double> g;  // exactly one of k_eff / g
    double omega_r{4.750};
    double kappa{1.0 / 22.0};
    double epsilon{0.045};
    double duration{100.0};
    double drive_detuning{0.0};  // dressed resonator minus drive frequency [GHz]
    std::vector<double> delta_grid;
    std::vector<double> n_g_grid;
    std::vector<int> initial_states{0, 1};
    int level_count{20};
    int charge_cutoff{30};
    double dt{0.01};
    int sample_stride{10};
    double threshold{0.9};
    double nbar_step{0.25};
    int workers{1};
    std::string output_dir;

    // Detunings 0.6..1.6 GHz in 20 MHz steps, n_g in [-0.5, 0] step 0.05,
    // worker count from MIST_WORKERS.
    static SweepConfig defaults();

    void validate() const;
    // g at a given detuning (k_eff uses omega_q = omega_r + delta).
    double coupling_at(double delta) const;
};

SweepConfig sweep_config_from_json(const std::string& text);
// Canonical JSON; workers and output_dir are left out unless requested.
std::string sweep_config_to_json(const SweepConfig& config, bool include_runtime = false);
// Override a single key with a JSON-encoded value (bare strings accepted for output_dir).
void apply_override(SweepConfig& config, const std::string& key, const std::string& value);
// FNV-1a over the canonical JSON.
std::string config_hash(const SweepConfig& config);
int default_worker_count();

// Per-detuning inputs shared by every member simulation.
struct DetuningSetup {
    double delta;
    double omega_q;
    double e_j;
    double g;
};
DetuningSetup setup_detuning(const SweepConfig& config, double delta);

// One member simulation of the sweep.
SimulationConfig member_simulation(const SweepConfig& config, const DetuningSetup& setup, double n_g,
                                   int initial_state);

struct StateResult {
    int initial_state;
    std::vector<std::vector<double>> heatmap;  // [delta][nbar]
    std::vector<OnsetPoint> raw_onsets;        // before the monotonic filter
    std::vector<OnsetPoint> onsets;            // kept
    std::optional<TransitionBoundary> boundary;
    std::string fit_error;
};

struct SweepResult {
    std::vector<double> delta_grid;
    std::vector<double> nbar_grid;
    std::vector<StateResult> states;
    std::string config_hash;
    std::string tool_version{kToolVersion};
    double wall_time_s{0.0};
    std::size_t flagged_members{0};  // simulations with branch-tracking flags
};

// Thrown when a member simulation fails; names the failing point.
class SweepError : public Error {
public:
    SweepError(const std::string& what, double delta, double n_g, int state)
        : Error("sweep", what), delta_(delta), n_g_(n_g), state_(state) {}
    double delta() const noexcept { return delta_; }
    double n_g() const noexcept { return n_g_; }
    int initial_state() const noexcept { return state_; }

private:
    double delta_;
    double n_g_;
    int state_;
};

SweepResult run_sweep(const SweepConfig& config);

// Writes heatmap_state<s>.csv, boundary_state<s>.json, sweep_config.json and
// run_metadata.json (the only file carrying wall time).
void write_sweep_outputs(const SweepResult& result, const SweepConfig& config, const std::string& dir);

// Heatmap CSV: first row nbar axis, first column delta axis.
std::string heatmap_csv(const SweepResult& result, std::size_t state_index);
std::string boundary_json(const SweepResult& result, std::size_t state_index, double threshold);

struct OracleCase {
    double delta;
    double n_g;
    int worst_n;
    double max_diff;
};

struct OracleReport {
    std::vector<double> max_diff_by_n;  // N = 0..3K
    std::vector<OracleCase> cases;
    double max_diff{0.0};
    double tolerance{1e-12};
    bool pass{false};
};

OracleReport run_oracle_check(const SweepConfig& config, Interaction interaction = Interaction::modified);
std::string oracle_report_json(const OracleReport& report, const SweepConfig& config);

}  // namespace mist
