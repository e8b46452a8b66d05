// analysis.hpp: dispersive-regime formulas and transition-boundary extraction.
//
// Frequencies are linear [GHz]; every formula here is homogeneous in them.

#pragma once

#include "mist/dynamics.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mist {

struct DispersiveParams {
    double g{0.0};
    double delta{0.0};  // omega_q - omega_r
    double eta{0.0};    // anharmonicity
    double omega_r{0.0};
    double omega_q{0.0};
};

// (g^2/Δ) (η/(Δ-η)) (omega_r/omega_q)
double chi(const DispersiveParams& p);

struct DressedFrequencies {
    double ket0;  // omega_r - g^2/Δ
    double ket1;  // ket0 - 2 chi
};
DressedFrequencies dressed_frequencies(const DispersiveParams& p);

// Photon number from an ac-Stark shift omega_q(0) - omega_q(nbar) = 2 chi nbar.
double stark_to_photons(double freq_shift, double chi);

// (Δ/g)^2 / 4
double n_crit(double delta, double g);

struct OnsetPoint {
    double delta;
    double nbar_onset;
    double uncertainty;  // sqrt(nbar_onset)
    int initial_state;
};

struct DetuningCurve {
    double delta;
    SurvivalCurve curve;
};

// First grid nbar with survival below threshold, per detuning; then only points
// whose onset strictly exceeds every kept point at smaller detuning survive.
std::vector<OnsetPoint> extract_onsets(std::span<const DetuningCurve> curves, double threshold = 0.9,
                                       int initial_state = 0);

// Same filter on raw (delta, nbar) pairs already sorted by delta.
std::vector<OnsetPoint> monotonic_filter(std::span<const OnsetPoint> points);

enum class FitWeighting {
    unweighted,
    poisson,  // ln-space variance 1/nbar from the ±sqrt(nbar) error bars
};

struct TransitionBoundary {
    double A{0.0};  // photons
    double B{0.0};  // 1/GHz
    std::vector<OnsetPoint> points;

    double n_fit(double delta) const;
    // n_fit - sqrt(n_fit)
    double boundary(double delta) const;
};

// Least-squares line through (delta, ln nbar): B = slope, A = exp(intercept).
TransitionBoundary fit_boundary(std::span<const OnsetPoint> points,
                                FitWeighting weighting = FitWeighting::unweighted);

}  // namespace mist
