#include "mist/dynamics.hpp"

#include "mist/error.hpp"
#include "mist/export.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace mist {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNormTol = 1e-6;

}  // namespace

void SimulationConfig::validate() const {
    strip.validate();
    drive.validate();
    if (!(dt > 0.0) || dt > 0.05) throw InvalidArgument(fmt::format("simulation: dt must be in (0, 0.05] ns (got {})", dt));
    if (sample_stride < 1) throw InvalidArgument("simulation: sample_stride must be >= 1");
    if (initial_state < 0 || initial_state >= strip.levels()) {
        throw InvalidArgument(fmt::format("simulation: initial_state {} outside 0..{}", initial_state, strip.levels() - 1));
    }
    const double n = drive.duration / dt;
    if (std::abs(n - std::round(n)) > 1e-6) {
        throw InvalidArgument(fmt::format("simulation: dt {} does not divide duration {}", dt, drive.duration));
    }
}

std::size_t SimulationConfig::step_count() const {
    return static_cast<std::size_t>(std::llround(drive.duration / dt));
}

PopulationTrace propagate(const PropagationProblem& problem) {
    if (problem.sample_stride == 0) throw InvalidArgument("propagate: sample_stride must be >= 1");

    PopulationTrace trace;
    trace.initial_state = problem.initial_state;

    Eigensystem es = problem.eigensystem_at(0);
    const auto K = es.values.size();
    if (problem.initial_state < 0 || problem.initial_state >= K) {
        throw InvalidArgument("propagate: initial state outside the Hilbert space");
    }

    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(K);
    psi(problem.initial_state) = 1.0;

    Eigen::MatrixXcd tracked(K, K);
    {
        const auto order = bare_labels(es.vectors);
        for (Eigen::Index b = 0; b < K; ++b) tracked.col(b) = es.vectors.col(order[b]);
    }

    auto record = [&](std::size_t sample_index, std::size_t half_index) {
        const Eigen::VectorXcd amps = tracked.adjoint() * psi;
        std::vector<double> pops(K);
        for (Eigen::Index b = 0; b < K; ++b) pops[b] = std::norm(amps(b));
        const double norm = psi.squaredNorm();
        if (std::abs(norm - 1.0) > kNormTol) {
            throw SimulationError(fmt::format("propagator lost unitarity: |psi|^2 = {} at sample {}", norm, sample_index));
        }
        trace.times.push_back(problem.t0 + 0.5 * problem.dt * static_cast<double>(half_index));
        trace.nbar.push_back(problem.nbar_at(half_index));
        trace.survival.push_back(pops[problem.initial_state]);
        trace.bare_population.push_back(std::norm(psi(problem.initial_state)));
        trace.norm.push_back(norm);
        trace.populations.push_back(std::move(pops));
    };

    record(0, 0);
    Eigen::VectorXcd phases(K);
    for (std::size_t s = 0; s < problem.steps; ++s) {
        const Eigensystem mid = problem.eigensystem_at(2 * s + 1);
        for (Eigen::Index k = 0; k < K; ++k) {
            phases(k) = std::polar(1.0, -kTwoPi * mid.values(k) * problem.dt);
        }
        psi = mid.vectors * (phases.asDiagonal() * (mid.vectors.adjoint() * psi));

        if ((s + 1) % problem.sample_stride == 0 || s + 1 == problem.steps) {
            const std::size_t j = 2 * (s + 1);
            const Eigensystem now = problem.eigensystem_at(j);
            const MatchResult m = match_branches(tracked, now.vectors);
            for (Eigen::Index b = 0; b < K; ++b) tracked.col(b) = now.vectors.col(m.column_for_branch[b]);
            const std::size_t sample = trace.times.size();
            const bool low = std::any_of(m.overlap.begin(), m.overlap.end(), [](double o) { return o < 0.5; });
            if (low || m.ambiguous) trace.flagged_samples.push_back(sample);
            record(sample, j);
        }
    }
    return trace;
}

PopulationTrace propagate(const SimulationConfig& config) {
    config.validate();
    const std::size_t steps = config.step_count();
    const auto half_grid = uniform_time_grid(config.drive.duration, 0.5 * config.dt);
    const FieldTrajectory field = evolve_field(config.drive, half_grid);

    PropagationProblem problem;
    problem.t0 = 0.0;
    problem.dt = config.dt;
    problem.steps = steps;
    problem.sample_stride = static_cast<std::size_t>(config.sample_stride);
    problem.initial_state = config.initial_state;
    problem.eigensystem_at = [&](std::size_t j) {
        return eigensystem(strip_hamiltonian(config.strip, field.alpha[j], field.times[j]));
    };
    problem.nbar_at = [&](std::size_t j) { return field.nbar[j]; };
    return propagate(problem);
}

SurvivalCurve survival_vs_nbar(const PopulationTrace& trace) {
    SurvivalCurve out;
    const std::size_t n = trace.nbar.size();
    out.nbar_axis.reserve(n);
    out.survival_running_min.reserve(n);
    double running = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && trace.nbar[i] < trace.nbar[i - 1]) {
            throw InvalidArgument(fmt::format(
                "survival_vs_nbar: photon number decreases at t = {} ns; use the time axis instead", trace.times[i]));
        }
        running = std::min(running, trace.survival[i]);
        out.nbar_axis.push_back(trace.nbar[i]);
        out.survival_running_min.push_back(running);
    }
    return out;
}

SurvivalCurve resample(const SurvivalCurve& curve, std::span<const double> axis) {
    if (curve.nbar_axis.empty()) throw InvalidArgument("resample: empty curve");
    const auto& x = curve.nbar_axis;
    const auto& y = curve.survival_running_min;
    SurvivalCurve out;
    out.nbar_axis.assign(axis.begin(), axis.end());
    out.survival_running_min.reserve(axis.size());
    for (double q : axis) {
        if (q <= x.front()) {
            out.survival_running_min.push_back(y.front());
            continue;
        }
        if (q >= x.back()) {
            out.survival_running_min.push_back(y.back());
            continue;
        }
        // First sample strictly above q; duplicated x values resolve to the later one.
        const auto it = std::upper_bound(x.begin(), x.end(), q);
        const auto i = static_cast<std::size_t>(it - x.begin());
        const double w = (q - x[i - 1]) / (x[i] - x[i - 1]);
        // This form reproduces flat stretches exactly; the clamp keeps a
        // monotone input monotone after rounding.
        const double v = y[i - 1] + w * (y[i] - y[i - 1]);
        out.survival_running_min.push_back(std::clamp(v, std::min(y[i - 1], y[i]), std::max(y[i - 1], y[i])));
    }
    return out;
}

std::vector<double> default_charge_average_grid() {
    std::vector<double> grid(11);
    for (int i = 0; i <= 10; ++i) grid[i] = -0.5 + 0.05 * i;
    grid.back() = 0.0;
    return grid;
}

SurvivalCurve average_curves(std::span<const SurvivalCurve> curves) {
    if (curves.empty()) throw InvalidArgument("average_curves: no curves");
    const auto& axis = curves.front().nbar_axis;
    std::vector<double> sum(axis.size(), 0.0);
    for (const auto& c : curves) {
        const bool same_axis = c.nbar_axis == axis;
        const SurvivalCurve r = same_axis ? c : resample(c, axis);
        for (std::size_t i = 0; i < axis.size(); ++i) sum[i] += r.survival_running_min[i];
    }
    SurvivalCurve out;
    out.nbar_axis = axis;
    out.survival_running_min.resize(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i) {
        out.survival_running_min[i] = sum[i] / static_cast<double>(curves.size());
    }
    return out;
}

SurvivalCurve charge_averaged_survival(const SimulationConfig& base, std::span<const double> n_g_grid) {
    if (n_g_grid.empty()) throw InvalidArgument("charge_averaged_survival: empty offset-charge grid");
    std::vector<SurvivalCurve> curves;
    curves.reserve(n_g_grid.size());
    for (double ng : n_g_grid) {
        try {
            SimulationConfig cfg = base;
            TransmonParams p = base.strip.eigen.params;
            p.n_g = ng;
            cfg.strip.eigen = diagonalize(p);
            curves.push_back(survival_vs_nbar(propagate(cfg)));
        } catch (const Error& e) {
            throw SimulationError(fmt::format("simulation at n_g = {} failed: {}", ng, e.what()));
        }
    }
    return average_curves(curves);
}

void write_trace_csv(std::ostream& os, const PopulationTrace& trace, const std::string& header) {
    write_comment_header(os, header);
    const std::size_t K = trace.populations.empty() ? 0 : trace.populations.front().size();
    os << "t_ns,nbar,norm";
    for (std::size_t b = 0; b < K; ++b) os << ",pop_branch_" << b;
    os << '\n';
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        os << format_number(trace.times[i]) << ',' << format_number(trace.nbar[i]) << ','
           << format_number(trace.norm[i]);
        for (double p : trace.populations[i]) os << ',' << format_number(p);
        os << '\n';
    }
}

void write_survival_csv(std::ostream& os, const SurvivalCurve& curve, const std::string& header) {
    write_comment_header(os, header);
    os << "nbar,survival\n";
    for (std::size_t i = 0; i < curve.nbar_axis.size(); ++i) {
        os << format_number(curve.nbar_axis[i]) << ',' << format_number(curve.survival_running_min[i]) << '\n';
    }
}

}  // namespace mist
