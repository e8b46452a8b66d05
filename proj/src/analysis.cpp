#include "mist/analysis.hpp"

#include "mist/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mist {

double chi(const DispersiveParams& p) {
    if (p.delta == 0.0) throw InvalidArgument("chi: delta must be nonzero");
    if (p.delta == p.eta) throw InvalidArgument("chi: delta == eta (straddling resonance)");
    if (!(p.omega_q > 0.0)) throw InvalidArgument("chi: omega_q must be > 0");
    return (p.g * p.g / p.delta) * (p.eta / (p.delta - p.eta)) * (p.omega_r / p.omega_q);
}

DressedFrequencies dressed_frequencies(const DispersiveParams& p) {
    const double x = chi(p);
    const double ket0 = p.omega_r - p.g * p.g / p.delta;
    return {ket0, ket0 - 2.0 * x};
}

double stark_to_photons(double freq_shift, double chi_value) {
    if (!(chi_value > 0.0)) throw InvalidArgument("stark_to_photons: chi must be > 0");
    if (freq_shift < 0.0) {
        throw InvalidArgument(fmt::format(
            "stark_to_photons: negative shift {} GHz (qubit above its zero-photon frequency)", freq_shift));
    }
    return freq_shift / (2.0 * chi_value);
}

double n_crit(double delta, double g) {
    if (!(g > 0.0)) throw InvalidArgument("n_crit: g must be > 0");
    const double r = delta / g;
    return 0.25 * r * r;
}

std::vector<OnsetPoint> monotonic_filter(std::span<const OnsetPoint> points) {
    std::vector<OnsetPoint> kept;
    for (const auto& p : points) {
        if (kept.empty() || p.nbar_onset > kept.back().nbar_onset) kept.push_back(p);
    }
    return kept;
}

std::vector<OnsetPoint> extract_onsets(std::span<const DetuningCurve> curves, double threshold,
                                       int initial_state) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw InvalidArgument(fmt::format("extract_onsets: threshold {} outside (0, 1)", threshold));
    }
    std::vector<OnsetPoint> raw;
    double previous_delta = -std::numeric_limits<double>::infinity();
    for (const auto& dc : curves) {
        if (!(dc.delta > previous_delta)) throw InvalidArgument("extract_onsets: detunings must be ascending");
        previous_delta = dc.delta;
        const auto& s = dc.curve.survival_running_min;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] < threshold) {
                const double n = dc.curve.nbar_axis[i];
                raw.push_back({dc.delta, n, std::sqrt(n), initial_state});
                break;
            }
        }
    }
    return monotonic_filter(raw);
}

double TransitionBoundary::n_fit(double delta) const { return A * std::exp(B * delta); }

double TransitionBoundary::boundary(double delta) const {
    const double n = n_fit(delta);
    return n - std::sqrt(n);
}

TransitionBoundary fit_boundary(std::span<const OnsetPoint> points, FitWeighting weighting) {
    std::set<double> distinct;
    for (const auto& p : points) {
        if (!(p.nbar_onset > 0.0)) {
            throw FitError(fmt::format("fit_boundary: onset {} at delta {} is not positive", p.nbar_onset, p.delta));
        }
        distinct.insert(p.delta);
    }
    if (distinct.size() < 2) throw FitError("insufficient points: need at least 2 distinct detunings");

    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (const auto& p : points) {
        const double w = weighting == FitWeighting::poisson ? p.nbar_onset : 1.0;
        sw += w;
        sx += w * p.delta;
        sy += w * std::log(p.nbar_onset);
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        const double w = weighting == FitWeighting::poisson ? p.nbar_onset : 1.0;
        const double dx = p.delta - mx;
        sxx += w * dx * dx;
        sxy += w * dx * (std::log(p.nbar_onset) - my);
    }
    TransitionBoundary out;
    out.B = sxy / sxx;
    out.A = std::exp(my - out.B * mx);
    out.points.assign(points.begin(), points.end());
    return out;
}

}  // namespace mist
