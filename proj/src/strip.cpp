#include "mist/strip.hpp"

#include "mist/error.hpp"
#include "mist/export.hpp"
#include "tridiagonal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace mist {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAmbiguityTol = 1e-6;
constexpr double kFlatGapTol = 1e-12;

double bond_amplitude(Interaction interaction, double nbar, int k) {
    if (interaction == Interaction::unmodified) return std::sqrt(nbar);
    const double x = nbar - static_cast<double>(k);
    return x > 0.0 ? std::sqrt(x) : 0.0;
}

}  // namespace

void StripConfig::validate() const {
    if (eigen.energies.size() < 2) throw InvalidArgument("strip: transmon spectrum has fewer than 2 levels");
    if (level_count < 0 || level_count > eigen.level_count()) {
        throw InvalidArgument(fmt::format("strip: level_count {} exceeds the {} diagonalized levels",
                                          level_count, eigen.level_count()));
    }
    if (!(g() > 0.0)) throw InvalidArgument("strip: derived coupling g must be > 0");
}

int StripConfig::levels() const { return level_count > 0 ? level_count : eigen.level_count(); }

double StripConfig::g() const {
    if (const auto* s = std::get_if<CouplingStrength>(&coupling)) return s->g;
    const double k_eff = std::get<CouplingEfficiency>(coupling).k_eff;
    return 0.5 * k_eff * std::sqrt(eigen.omega_q() * omega_r);
}

double StripConfig::bare_energy(int k) const { return eigen.energies.at(k) - k * omega_r; }

Eigen::MatrixXcd StripHamiltonian::dense() const {
    const auto K = diagonal.size();
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(K, K);
    for (Eigen::Index k = 0; k < K; ++k) H(k, k) = diagonal(k);
    for (Eigen::Index k = 0; k + 1 < K; ++k) {
        H(k, k + 1) = phase * bonds(k);
        H(k + 1, k) = std::conj(phase) * bonds(k);
    }
    return H;
}

StripHamiltonian strip_hamiltonian(const StripConfig& config, cplx alpha, double t) {
    const int K = config.levels();
    const double g = config.g();
    const double nbar = std::norm(alpha);
    StripHamiltonian h;
    h.diagonal.resize(K);
    h.bonds.resize(K - 1);
    for (int k = 0; k < K; ++k) h.diagonal(k) = config.bare_energy(k);
    if (nbar == 0.0) {
        h.bonds.setZero();
        h.phase = 0.0;
        return h;
    }
    h.phase = (alpha / std::abs(alpha)) * std::polar(1.0, kTwoPi * (config.omega_r - config.omega_d) * t);
    for (int k = 0; k + 1 < K; ++k) {
        h.bonds(k) = bond_amplitude(config.interaction, nbar, k) * config.eigen.couplings[k] * g;
    }
    return h;
}

Eigen::MatrixXcd effective_hamiltonian(const StripConfig& config, cplx alpha, double t) {
    return strip_hamiltonian(config, alpha, t).dense();
}

Eigen::MatrixXd jtc_strip_hamiltonian(const StripConfig& config, int total_excitations) {
    if (total_excitations < 0) throw InvalidArgument("jtc_strip_hamiltonian: N must be >= 0");
    const int dim = std::min(config.levels() - 1, total_excitations) + 1;
    const double g = config.g();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) H(k, k) = config.bare_energy(k);
    for (int k = 0; k + 1 < dim; ++k) {
        const double b = config.eigen.couplings[k] * g * std::sqrt(static_cast<double>(total_excitations - k));
        H(k + 1, k) = b;
        H(k, k + 1) = b;
    }
    return H;
}

Eigensystem eigensystem(const StripHamiltonian& h) {
    const auto K = h.diagonal.size();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    if (K == 1) {
        Eigensystem out;
        out.values = h.diagonal;
        out.vectors = Eigen::MatrixXcd::Identity(1, 1);
        return out;
    }
    if (!detail::solve_tridiagonal(h.diagonal, h.bonds, Eigen::ComputeEigenvectors, solver)) {
        throw DiagonalizationError("strip eigensolver did not converge");
    }
    Eigensystem out;
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors().cast<cplx>();
    // Undo the gauge transform diag(conj(phase)^k) that made the bonds real.
    if (h.phase != cplx(1.0, 0.0) && h.phase != cplx(0.0, 0.0)) {
        const cplx step = std::conj(h.phase);
        cplx p{1.0, 0.0};
        for (Eigen::Index k = 0; k < K; ++k) {
            out.vectors.row(k) *= p;
            p *= step;
        }
    }
    return out;
}

Eigensystem eigensystem(const Eigen::MatrixXcd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success) throw DiagonalizationError("Hermitian eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

double jtc_spectrum_mismatch(const StripConfig& config, int total_excitations) {
    const int K = config.levels();
    const auto eff = eigensystem(strip_hamiltonian(config, cplx(std::sqrt(total_excitations), 0.0), 0.0));

    const Eigen::MatrixXd jtc = jtc_strip_hamiltonian(config, total_excitations);
    std::vector<double> reference;
    if (jtc.rows() == 1) {
        reference.push_back(jtc(0, 0));
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        Eigen::VectorXd d = jtc.diagonal();
        Eigen::VectorXd s = jtc.diagonal(-1);
        if (!detail::solve_tridiagonal(d, s, Eigen::EigenvaluesOnly, solver)) {
            throw DiagonalizationError("JTC strip eigensolver did not converge");
        }
        reference.assign(solver.eigenvalues().begin(), solver.eigenvalues().end());
    }
    for (int k = static_cast<int>(jtc.rows()); k < K; ++k) reference.push_back(config.bare_energy(k));
    std::sort(reference.begin(), reference.end());

    double worst = 0.0;
    for (int i = 0; i < K; ++i) worst = std::max(worst, std::abs(eff.values(i) - reference[i]));
    return worst;
}

std::vector<int> bare_labels(const Eigen::MatrixXcd& vectors) {
    const auto K = vectors.cols();
    std::vector<int> column(K, -1);
    std::vector<bool> taken(K, false);
    for (Eigen::Index j = 0; j < K; ++j) {
        int best = -1;
        double best_w = -1.0;
        for (Eigen::Index c = 0; c < K; ++c) {
            if (taken[c]) continue;
            const double w = std::abs(vectors(j, c));
            if (w > best_w) {
                best_w = w;
                best = static_cast<int>(c);
            }
        }
        column[j] = best;
        taken[best] = true;
    }
    return column;
}

MatchResult match_branches(const Eigen::MatrixXcd& previous, const Eigen::MatrixXcd& current) {
    const auto K = previous.cols();
    const Eigen::MatrixXd O = (previous.adjoint() * current).cwiseAbs();
    MatchResult r;
    r.column_for_branch.assign(K, -1);
    r.overlap.assign(K, 0.0);
    std::vector<bool> row_free(K, true), col_free(K, true);
    for (Eigen::Index round = 0; round < K; ++round) {
        Eigen::Index bi = -1, bj = -1;
        double best = -1.0;
        for (Eigen::Index i = 0; i < K; ++i) {
            if (!row_free[i]) continue;
            for (Eigen::Index j = 0; j < K; ++j) {
                if (col_free[j] && O(i, j) > best) {
                    best = O(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        for (Eigen::Index x = 0; x < K; ++x) {
            if (x != bj && col_free[x] && best - O(bi, x) < kAmbiguityTol) r.ambiguous = true;
            if (x != bi && row_free[x] && best - O(x, bj) < kAmbiguityTol) r.ambiguous = true;
        }
        r.column_for_branch[bi] = static_cast<int>(bj);
        r.overlap[bi] = best;
        row_free[bi] = false;
        col_free[bj] = false;
    }
    return r;
}

SpectrumResult track_spectrum(std::span<const double> grid, const EigenFn& eig) {
    SpectrumResult out;
    out.nbar_grid.assign(grid.begin(), grid.end());
    if (grid.empty()) return out;

    Eigensystem first = eig(grid[0]);
    const auto K = first.values.size();
    out.branches.assign(K, std::vector<double>(grid.size()));

    auto order = bare_labels(first.vectors);
    Eigen::MatrixXcd labelled(K, K);
    for (Eigen::Index b = 0; b < K; ++b) {
        labelled.col(b) = first.vectors.col(order[b]);
        out.branches[b][0] = first.values(order[b]);
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        Eigensystem cur = eig(grid[i]);
        const MatchResult m = match_branches(labelled, cur.vectors);
        Eigen::MatrixXcd next(K, K);
        for (Eigen::Index b = 0; b < K; ++b) {
            const int c = m.column_for_branch[b];
            next.col(b) = cur.vectors.col(c);
            out.branches[b][i] = cur.values(c);
            if (m.overlap[b] < 0.5) out.flags.push_back({i, static_cast<int>(b), m.overlap[b], false});
        }
        if (m.ambiguous) out.flags.push_back({i, -1, 0.0, true});
        labelled = std::move(next);
    }
    return out;
}

SpectrumResult fan_diagram(const StripConfig& config, std::span<const double> nbar_grid) {
    config.validate();
    if (nbar_grid.empty() || nbar_grid.front() != 0.0) {
        throw InvalidArgument("fan_diagram: photon-number grid must start at 0");
    }
    if (!std::is_sorted(nbar_grid.begin(), nbar_grid.end())) {
        throw InvalidArgument("fan_diagram: photon-number grid must be ascending");
    }
    return track_spectrum(nbar_grid, [&](double nbar) {
        return eigensystem(strip_hamiltonian(config, cplx(std::sqrt(nbar), 0.0), 0.0));
    });
}

std::vector<double> uniform_nbar_grid(double nbar_max, double step) {
    if (!(step > 0.0) || !(nbar_max >= 0.0)) throw InvalidArgument("uniform_nbar_grid: bad range");
    const auto n = static_cast<std::size_t>(std::floor(nbar_max / step + 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * step;
    return grid;
}

std::vector<CrossingRecord> find_avoided_crossings(const SpectrumResult& spectrum, double min_gap,
                                                   double max_gap) {
    std::vector<CrossingRecord> out;
    const auto& x = spectrum.nbar_grid;
    const std::size_t n = x.size();
    if (n < 3) throw InvalidArgument("find_avoided_crossings: need at least 3 grid points");
    const int K = spectrum.branch_count();
    std::vector<double> gap(n);
    for (int a = 0; a < K; ++a) {
        for (int b = a + 1; b < K; ++b) {
            for (std::size_t i = 0; i < n; ++i) gap[i] = std::abs(spectrum.branches[a][i] - spectrum.branches[b][i]);
            for (std::size_t i = 1; i + 1 < n; ++i) {
                // A dip must clear rounding noise to count; flat gaps never qualify.
                const double noise = kFlatGapTol * std::max(1.0, gap[i]);
                if (!(gap[i] < gap[i - 1] - noise && gap[i] <= gap[i + 1])) continue;
                if (gap[i] < min_gap || gap[i] > max_gap) continue;
                // Parabola through (x[i-1], x[i], x[i+1]); non-uniform spacing allowed.
                const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
                const double y0 = gap[i - 1], y1 = gap[i], y2 = gap[i + 1];
                const double d01 = (y1 - y0) / (x1 - x0);
                const double d12 = (y2 - y1) / (x2 - x1);
                const double curv = (d12 - d01) / (x2 - x0);
                double xc = x1, yc = y1;
                if (curv > 0.0) {
                    const double slope1 = d01 + curv * (x1 - x0);  // derivative at x1
                    xc = std::clamp(x1 - slope1 / (2.0 * curv), x0, x2);
                    yc = y1 + slope1 * (xc - x1) + curv * (xc - x1) * (xc - x1);
                    if (!(yc > 0.0) || yc > y1) yc = y1;
                }
                out.push_back({a, b, xc, yc, 0.5 * yc});
            }
        }
    }
    return out;
}

double g_eff_perturbative(const StripConfig& config, int target_level, double nbar_cross) {
    if (target_level < 1 || target_level >= config.levels()) {
        throw InvalidArgument(fmt::format("g_eff_perturbative: target level {} out of range", target_level));
    }
    if (!(nbar_cross >= 0.0)) throw InvalidArgument("g_eff_perturbative: nbar must be >= 0");
    const double g = config.g();
    double value = 1.0;
    for (int k = 0; k < target_level; ++k) value *= config.eigen.couplings[k] * g;
    const double e0 = config.bare_energy(0);
    for (int k = 1; k < target_level; ++k) {
        const double detuning = config.bare_energy(k) - e0;
        if (std::abs(detuning) < 1e-12) {
            throw InvalidArgument(
                fmt::format("g_eff_perturbative: intermediate level {} is resonant with level 0", k));
        }
        value /= detuning;
    }
    return std::abs(value) * std::pow(nbar_cross, 0.5 * target_level);
}

void write_fan_csv(std::ostream& os, const SpectrumResult& spectrum, const std::string& header) {
    write_comment_header(os, header);
    os << "nbar";
    for (int b = 0; b < spectrum.branch_count(); ++b) os << ",branch_" << b;
    os << '\n';
    for (std::size_t i = 0; i < spectrum.nbar_grid.size(); ++i) {
        os << format_number(spectrum.nbar_grid[i]);
        for (int b = 0; b < spectrum.branch_count(); ++b) os << ',' << format_number(spectrum.branches[b][i]);
        os << '\n';
    }
}

}  // namespace mist
