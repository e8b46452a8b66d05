#include "mist/field.hpp"

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
constexpr cplx kI{0.0, 1.0};
}  // namespace

double TabulatedEnvelope::at(double t) const {
    if (times.empty() || t < times.front() || t > times.back()) return 0.0;
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.end()) return epsilon.back();
    const auto i = static_cast<std::size_t>(it - times.begin());
    const double t0 = times[i - 1];
    const double t1 = times[i];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * epsilon[i - 1] + w * epsilon[i];
}

void DriveConfig::validate() const {
    if (!(kappa > 0.0)) throw InvalidArgument(fmt::format("drive: kappa must be > 0 (got {})", kappa));
    if (!(duration > 0.0)) throw InvalidArgument(fmt::format("drive: duration must be > 0 (got {})", duration));
    if (!(epsilon >= 0.0)) throw InvalidArgument(fmt::format("drive: epsilon must be >= 0 (got {})", epsilon));
    if (envelope) {
        const auto& e = *envelope;
        if (e.times.size() < 2 || e.times.size() != e.epsilon.size()) {
            throw InvalidArgument("drive: tabulated envelope needs >= 2 matching (t, eps) samples");
        }
        for (std::size_t i = 1; i < e.times.size(); ++i) {
            if (!(e.times[i] > e.times[i - 1])) {
                throw InvalidArgument("drive: envelope times must be strictly increasing");
            }
        }
    }
}

double DriveConfig::angular_detuning() const { return kTwoPi * (omega_r_dressed - omega_d); }

double DriveConfig::epsilon_at(double t) const {
    if (envelope) return envelope->at(t);
    return t >= 0.0 ? epsilon : 0.0;
}

std::vector<double> uniform_time_grid(double duration, double spacing) {
    if (!(duration > 0.0) || !(spacing > 0.0)) {
        throw InvalidArgument("uniform_time_grid: duration and spacing must be > 0");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration / spacing));
    if (std::abs(static_cast<double>(n) * spacing - duration) > 1e-9 * duration) {
        throw InvalidArgument(fmt::format("uniform_time_grid: spacing {} does not divide duration {}",
                                          spacing, duration));
    }
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * spacing;
    return grid;
}

cplx square_pulse_alpha(const DriveConfig& drive, double t) {
    const cplx rate = kI * drive.angular_detuning() + 0.5 * drive.kappa;
    const double eps = kTwoPi * drive.epsilon;
    return (-kI * eps / rate) * (1.0 - std::exp(-rate * t));
}

double steady_state_photons(const DriveConfig& drive) {
    const double eps = kTwoPi * drive.epsilon;
    const double d = drive.angular_detuning();
    return eps * eps / (d * d + 0.25 * drive.kappa * drive.kappa);
}

FieldTrajectory evolve_field_closed_form(const DriveConfig& drive, std::span<const double> t_grid) {
    drive.validate();
    if (!drive.is_square()) throw InvalidArgument("closed-form field requires a square envelope");
    FieldTrajectory out;
    out.times.assign(t_grid.begin(), t_grid.end());
    out.alpha.reserve(t_grid.size());
    out.nbar.reserve(t_grid.size());
    for (double t : t_grid) {
        const cplx a = square_pulse_alpha(drive, t);
        out.alpha.push_back(a);
        out.nbar.push_back(std::norm(a));
    }
    return out;
}

double max_field_step(const DriveConfig& drive) { return std::min(0.01 / drive.kappa, 0.05); }

FieldTrajectory evolve_field_numeric(const DriveConfig& drive, std::span<const double> t_grid,
                                     cplx alpha0, double step) {
    drive.validate();
    const double h_max = max_field_step(drive);
    if (step <= 0.0) step = h_max;
    if (step > h_max * (1.0 + 1e-12)) {
        throw InvalidArgument(fmt::format("field integrator step {} ns exceeds limit {} ns", step, h_max));
    }
    if (t_grid.empty()) return {};
    if (t_grid.front() != 0.0) throw InvalidArgument("field integrator: t_grid must start at 0");

    const cplx decay = kI * drive.angular_detuning() + 0.5 * drive.kappa;
    auto rhs = [&](double t, cplx a) { return -decay * a - kI * (kTwoPi * drive.epsilon_at(t)); };

    FieldTrajectory out;
    out.times.assign(t_grid.begin(), t_grid.end());
    out.alpha.reserve(t_grid.size());
    out.nbar.reserve(t_grid.size());

    cplx a = alpha0;
    double t = 0.0;
    out.alpha.push_back(a);
    out.nbar.push_back(std::norm(a));
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double span = t_grid[i] - t_grid[i - 1];
        if (span < 0.0) throw InvalidArgument("field integrator: t_grid must be non-decreasing");
        const auto n = static_cast<long>(std::ceil(span / step - 1e-9));
        const double h = n > 0 ? span / static_cast<double>(n) : 0.0;
        for (long s = 0; s < n; ++s) {
            const cplx k1 = rhs(t, a);
            const cplx k2 = rhs(t + 0.5 * h, a + 0.5 * h * k1);
            const cplx k3 = rhs(t + 0.5 * h, a + 0.5 * h * k2);
            const cplx k4 = rhs(t + h, a + h * k3);
            a += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = t_grid[i - 1] + static_cast<double>(s + 1) * h;
        }
        t = t_grid[i];
        out.alpha.push_back(a);
        out.nbar.push_back(std::norm(a));
    }
    return out;
}

FieldTrajectory evolve_field(const DriveConfig& drive, std::span<const double> t_grid) {
    return drive.is_square() ? evolve_field_closed_form(drive, t_grid) : evolve_field_numeric(drive, t_grid);
}

void write_field_csv(std::ostream& os, const FieldTrajectory& traj, const std::string& header) {
    write_comment_header(os, header);
    os << "t_ns,re_alpha,im_alpha,nbar\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << fmt::format("{},{},{},{}\n", format_number(traj.times[i]), format_number(traj.alpha[i].real()),
                          format_number(traj.alpha[i].imag()), format_number(traj.nbar[i]));
    }
}

}  // namespace mist
