// dynamics.hpp: Schrödinger propagation of the transmon inside the RWA strip
// while the resonator rings up, with populations tracked in the instantaneous
// eigenbasis.

#pragma once

#include "mist/field.hpp"
#include "mist/strip.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mist {

struct SimulationConfig {
    StripConfig strip;
    DriveConfig drive;
    int initial_state{0};
    double dt{0.01};       // [ns]
    int sample_stride{10};  // record every `sample_stride` steps

    void validate() const;
    std::size_t step_count() const;
};

struct PopulationTrace {
    std::vector<double> times;
    std::vector<double> nbar;
    std::vector<std::vector<double>> populations;  // [sample][branch]
    std::vector<double> survival;                  // population of the tracked initial branch
    std::vector<double> bare_population;           // |<initial|psi>|^2 in the undressed basis
    std::vector<double> norm;
    std::vector<std::size_t> flagged_samples;      // branch overlap < 0.5 or ambiguous match
    int initial_state{0};

    bool flagged() const { return !flagged_samples.empty(); }
};

struct SurvivalCurve {
    std::vector<double> nbar_axis;
    std::vector<double> survival_running_min;
};

// Time-dependent problem on a half-step grid t_j = t0 + j dt/2: step s uses the
// Hamiltonian at j = 2s+1 (midpoint), sample after step s reads j = 2(s+1).
struct PropagationProblem {
    std::function<Eigensystem(std::size_t half_index)> eigensystem_at;
    std::function<double(std::size_t half_index)> nbar_at;
    double t0{0.0};
    double dt{0.01};
    std::size_t steps{0};
    std::size_t sample_stride{1};
    int initial_state{0};
};

PopulationTrace propagate(const PropagationProblem& problem);
PopulationTrace propagate(const SimulationConfig& config);

// Re-parameterize survival by nbar(t) and take the running minimum. nbar must
// be non-decreasing.
SurvivalCurve survival_vs_nbar(const PopulationTrace& trace);

// Linear interpolation onto `axis`; values beyond the curve are held constant.
SurvivalCurve resample(const SurvivalCurve& curve, std::span<const double> axis);

// Offset-charge grid -0.50, -0.45, ..., 0.00.
std::vector<double> default_charge_average_grid();

// One simulation per offset charge (transmon re-diagonalized, coupling and
// drive shared), averaged uniformly on the first member's nbar axis.
SurvivalCurve charge_averaged_survival(const SimulationConfig& base, std::span<const double> n_g_grid);
SurvivalCurve average_curves(std::span<const SurvivalCurve> curves);

// Columns t_ns, nbar, norm, pop_branch_0 ... pop_branch_{K-1}.
void write_trace_csv(std::ostream& os, const PopulationTrace& trace, const std::string& header = {});
// Columns nbar, survival.
void write_survival_csv(std::ostream& os, const SurvivalCurve& curve, const std::string& header = {});

}  // namespace mist
