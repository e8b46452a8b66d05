// Charge-basis transmon diagonalization and E_J calibration.
//
// Energies are linear frequencies in GHz (E/h). Nothing in this module
// carries a factor of 2π.

#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mist {

struct TransmonParams {
    double e_c{0.0};        // charging energy E_C/h [GHz]
    double e_j{0.0};        // junction energy E_J/h [GHz]
    double n_g{0.0};        // offset charge (1-periodic)
    int charge_cutoff{30};  // basis spans n = -N..N
    int level_count{20};    // eigenstates kept

    // Throws InvalidArgument when the invariants are violated.
    void validate() const;
};

// Map an offset charge onto the canonical period [-0.5, 0.5].
double wrap_offset_charge(double n_g);

struct TransmonEigen {
    std::vector<double> energies;   // E_k - E_0 [GHz], ascending
    std::vector<double> couplings;  // <k|n|k+1> / <0|n|1>, couplings[0] == 1
    double raw_n01{0.0};            // <0|n|1>
    double ground_energy{0.0};      // absolute E_0 before the shift [GHz]
    double n_g{0.0};                // wrapped offset charge actually used
    TransmonParams params;          // provenance (n_g as passed in)
    bool degenerate{false};         // some adjacent pair within 1e-12 GHz

    int level_count() const { return static_cast<int>(energies.size()); }
    double omega_q() const { return energies.at(1); }
    double anharmonicity() const { return (energies.at(1) - energies.at(0)) - (energies.at(2) - energies.at(1)); }
};

// 4 E_C (n - n_g)^2 on the diagonal, -E_J/2 on the first off-diagonals.
Eigen::MatrixXd build_charge_hamiltonian(const TransmonParams& params);

TransmonEigen diagonalize(const TransmonParams& params);

// E_J such that E_1 - E_0 at n_g_ref equals target_omega_q (to well below 1 kHz).
double ej_for_frequency(double e_c, double target_omega_q, double n_g_ref = 0.0,
                        int charge_cutoff = 30);

std::vector<double> default_offset_charge_grid(int points = 21);

// max - min of (E_k - E_0) over the grid; params.n_g is ignored. Level 0
// has no transition to measure, so its absolute energy band is used.
double charge_dispersion(const TransmonParams& params, int level,
                         std::span<const double> n_g_grid);
double charge_dispersion(const TransmonParams& params, int level);

// Index at which the RWA strip folds over: round((omega_q - omega_r) / eta).
int k_bend(double omega_q, double omega_r, double eta);

}  // namespace mist
