// strip.hpp: the semi-classical RWA-strip Hamiltonian and the spectra built
// from it.
//
// In the frame rotating with the resonator, level k sits at E_k - k omega_r and
// neighbouring levels are coupled by
//
//   H[k][k+1] = (alpha/|alpha|) e^{i 2π (omega_r - omega_d) t} Re sqrt(|alpha|^2 - k) c_k g
//
// where c_k are the normalized charge couplings. All entries in GHz.

#pragma once

#include "mist/field.hpp"
#include "mist/transmon.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace mist {

struct CouplingStrength {
    double g;  // g/2π [GHz]
};
struct CouplingEfficiency {
    double k_eff;  // g = k_eff sqrt(omega_q omega_r) / 2
};
using Coupling = std::variant<CouplingStrength, CouplingEfficiency>;

enum class Interaction {
    modified,    // Re sqrt(|alpha|^2 - k): bond k is off until nbar >= k
    unmodified,  // |alpha| on every bond
};

struct StripConfig {
    TransmonEigen eigen;
    Coupling coupling{CouplingStrength{0.1}};
    double omega_r{4.750};
    double omega_d{4.750};
    int level_count{0};  // 0: every level held by `eigen`
    Interaction interaction{Interaction::modified};

    void validate() const;
    int levels() const;
    // Resolved g; k_eff uses omega_q = E_1 - E_0 of `eigen`.
    double g() const;
    // E_k - k omega_r.
    double bare_energy(int k) const;
};

// Tridiagonal Hermitian matrix with real non-negative bonds times a common
// unit phase on the upper diagonal.
struct StripHamiltonian {
    Eigen::VectorXd diagonal;
    Eigen::VectorXd bonds;
    cplx phase{1.0, 0.0};

    Eigen::MatrixXcd dense() const;
};

struct Eigensystem {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXcd vectors;  // columns
};

StripHamiltonian strip_hamiltonian(const StripConfig& config, cplx alpha, double t);
Eigen::MatrixXcd effective_hamiltonian(const StripConfig& config, cplx alpha, double t);

// Basis |k, N-k>, k = 0..min(K-1, N); constant N omega_r removed.
Eigen::MatrixXd jtc_strip_hamiltonian(const StripConfig& config, int total_excitations);

Eigensystem eigensystem(const StripHamiltonian& h);
Eigensystem eigensystem(const Eigen::MatrixXcd& h);

// Max |difference| between the sorted spectrum of the effective Hamiltonian at
// |alpha|^2 = N and that of the JTC strip with N excitations, completed by the
// bare energies of levels k > N (those have no partner state in the strip).
double jtc_spectrum_mismatch(const StripConfig& config, int total_excitations);

// ---------------------------------------------------------------------------
// Branch tracking

struct MatchResult {
    std::vector<int> column_for_branch;
    std::vector<double> overlap;  // per branch
    bool ambiguous{false};
};

// Column of `vectors` holding bare level j (largest component at row j).
std::vector<int> bare_labels(const Eigen::MatrixXcd& vectors);

// Greedy assignment by descending |<previous_b|current_c>|, ties to lower index.
MatchResult match_branches(const Eigen::MatrixXcd& previous, const Eigen::MatrixXcd& current);

struct BranchFlag {
    std::size_t grid_index;
    int branch;
    double overlap;
    bool ambiguous;
};

struct CrossingRecord {
    int branch_a;
    int branch_b;
    double nbar_cross;
    double gap;    // full splitting [GHz]
    double g_eff;  // gap / 2
};

struct SpectrumResult {
    std::vector<double> nbar_grid;
    std::vector<std::vector<double>> branches;  // [branch][grid index]
    std::vector<CrossingRecord> crossings;
    std::vector<BranchFlag> flags;

    int branch_count() const { return static_cast<int>(branches.size()); }
};

using EigenFn = std::function<Eigensystem(double)>;

// Generic branch-tracked spectrum along a parameter grid, labelled by bare
// states at grid[0].
SpectrumResult track_spectrum(std::span<const double> grid, const EigenFn& eig);

SpectrumResult fan_diagram(const StripConfig& config, std::span<const double> nbar_grid);

std::vector<double> uniform_nbar_grid(double nbar_max, double step);

// Local minima of |E_a - E_b| with gap in [min_gap, max_gap], refined by a
// parabola through the three points around the grid minimum.
std::vector<CrossingRecord> find_avoided_crossings(const SpectrumResult& spectrum, double min_gap,
                                                   double max_gap);

// Multi-photon coupling from level 0 to level m through virtual levels:
// prod_{k<m} (c_k g) / prod_{0<k<m} (E_k - k omega_r - E_0) * nbar^{m/2}.
double g_eff_perturbative(const StripConfig& config, int target_level, double nbar_cross);

void write_fan_csv(std::ostream& os, const SpectrumResult& spectrum, const std::string& header = {});

}  // namespace mist
