// field.hpp: classical coherent amplitude of the driven, damped readout resonator.
//
//   d(alpha)/dt = -i delta alpha - (kappa/2) alpha - i eps(t)
//
// with delta = 2π (omega_r_dressed - omega_d) and eps = 2π epsilon. Inputs are
// linear frequencies [GHz] and rates [1/ns]; the 2π is applied here.

#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mist {

using cplx = std::complex<double>;

// epsilon(t) sampled at strictly increasing times, linearly interpolated,
// zero outside [times.front(), times.back()].
struct TabulatedEnvelope {
    std::vector<double> times;    // [ns]
    std::vector<double> epsilon;  // [GHz]

    double at(double t) const;
};

struct DriveConfig {
    double epsilon{0.045};          // drive amplitude eps/2π [GHz]
    double omega_d{4.750};          // drive frequency [GHz]
    double omega_r_dressed{4.750};  // dressed resonator frequency [GHz]
    double kappa{1.0 / 22.0};       // energy decay rate [1/ns]
    double duration{100.0};         // [ns]
    std::optional<TabulatedEnvelope> envelope;  // nullopt: square pulse

    void validate() const;
    bool is_square() const { return !envelope.has_value(); }
    // Angular detuning 2π(omega_r_dressed - omega_d) [rad/ns].
    double angular_detuning() const;
    double epsilon_at(double t) const;
};

struct FieldTrajectory {
    std::vector<double> times;
    std::vector<cplx> alpha;
    std::vector<double> nbar;  // |alpha|^2
};

std::vector<double> uniform_time_grid(double duration, double spacing);

// alpha(t) from vacuum under a square pulse.
cplx square_pulse_alpha(const DriveConfig& drive, double t);

// Steady state of a square pulse: (eps_ang)^2 / (delta^2 + kappa^2/4).
double steady_state_photons(const DriveConfig& drive);

FieldTrajectory evolve_field_closed_form(const DriveConfig& drive, std::span<const double> t_grid);

// Largest RK4 step accepted: min(0.01/kappa, 0.05 ns).
double max_field_step(const DriveConfig& drive);

// Fixed-step RK4 between grid points; `step` <= 0 picks max_field_step.
// t_grid must start at 0 and be non-decreasing.
FieldTrajectory evolve_field_numeric(const DriveConfig& drive, std::span<const double> t_grid,
                                     cplx alpha0 = {0.0, 0.0}, double step = 0.0);

// Square pulses use the closed form, tabulated envelopes the integrator.
FieldTrajectory evolve_field(const DriveConfig& drive, std::span<const double> t_grid);

// Columns t_ns, re_alpha, im_alpha, nbar.
void write_field_csv(std::ostream& os, const FieldTrajectory& traj, const std::string& header = {});

}  // namespace mist
