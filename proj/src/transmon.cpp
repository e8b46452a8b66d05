#include "mist/transmon.hpp"

#include "mist/error.hpp"
#include "tridiagonal.hpp"

#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace mist {

namespace {

constexpr double kDegeneracyTol = 1e-12;

std::string describe(const TransmonParams& p) {
    return fmt::format("E_C={} GHz, E_J={} GHz, n_g={}, N={}, K={}", p.e_c, p.e_j, p.n_g,
                       p.charge_cutoff, p.level_count);
}

}  // namespace

void TransmonParams::validate() const {
    if (!(e_c > 0.0)) throw InvalidArgument(fmt::format("transmon: e_c must be > 0 (got {})", e_c));
    if (!(e_j >= 0.0)) throw InvalidArgument(fmt::format("transmon: e_j must be >= 0 (got {})", e_j));
    if (!std::isfinite(n_g)) throw InvalidArgument("transmon: n_g must be finite");
    if (level_count < 2) throw InvalidArgument("transmon: level_count must be >= 2");
    if (charge_cutoff < level_count) {
        throw InvalidArgument(fmt::format("transmon: charge_cutoff {} is smaller than level_count {}",
                                          charge_cutoff, level_count));
    }
}

double wrap_offset_charge(double n_g) {
    double w = n_g - std::round(n_g);
    // round() sends +0.5 to 1; keep the canonical interval closed on both ends.
    if (n_g - std::floor(n_g) == 0.5) w = std::copysign(0.5, n_g);
    return w;
}

Eigen::MatrixXd build_charge_hamiltonian(const TransmonParams& params) {
    params.validate();
    const int N = params.charge_cutoff;
    const int dim = 2 * N + 1;
    const double ng = wrap_offset_charge(params.n_g);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double n = i - N;
        H(i, i) = 4.0 * params.e_c * (n - ng) * (n - ng);
        if (i + 1 < dim) {
            H(i, i + 1) = -0.5 * params.e_j;
            H(i + 1, i) = -0.5 * params.e_j;
        }
    }
    return H;
}

TransmonEigen diagonalize(const TransmonParams& params) {
    const Eigen::MatrixXd H = build_charge_hamiltonian(params);
    const int N = params.charge_cutoff;
    const int K = params.level_count;

    // Tridiagonal already; skip the Householder reduction.
    Eigen::VectorXd diag = H.diagonal();
    Eigen::VectorXd sub = Eigen::VectorXd::Constant(H.rows() - 1, -0.5 * params.e_j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    if (!detail::solve_tridiagonal(diag, sub, Eigen::ComputeEigenvectors, solver)) {
        throw DiagonalizationError("transmon eigensolver did not converge: " + describe(params));
    }

    const Eigen::VectorXd& w = solver.eigenvalues();
    Eigen::MatrixXd v = solver.eigenvectors().leftCols(K);
    Eigen::VectorXd charge(H.rows());
    for (int i = 0; i < H.rows(); ++i) charge(i) = i - N;

    // Deterministic sign per eigenvector before the sequential gauge: largest
    // component positive. Only matters when <k|n|k+1> vanishes.
    for (int k = 0; k < K; ++k) {
        Eigen::Index idx;
        v.col(k).cwiseAbs().maxCoeff(&idx);
        if (v(idx, k) < 0.0) v.col(k) *= -1.0;
    }

    TransmonEigen out;
    out.params = params;
    out.n_g = wrap_offset_charge(params.n_g);
    out.energies.resize(K);
    for (int k = 0; k < K; ++k) out.energies[k] = w(k) - w(0);
    out.energies[0] = 0.0;
    out.ground_energy = w(0);
    for (int k = 0; k + 1 < K; ++k) {
        if (out.energies[k + 1] - out.energies[k] < kDegeneracyTol) out.degenerate = true;
    }

    std::vector<double> raw(K - 1);
    for (int k = 0; k + 1 < K; ++k) {
        double m = v.col(k).dot(charge.cwiseProduct(v.col(k + 1)));
        if (m < 0.0) {
            v.col(k + 1) *= -1.0;
            m = -m;
        }
        raw[k] = m;
    }
    out.raw_n01 = raw[0];
    out.couplings.assign(K - 1, 0.0);
    if (raw[0] > 0.0) {
        for (int k = 0; k + 1 < K; ++k) out.couplings[k] = raw[k] / raw[0];
    }
    // Pure charge states (E_J = 0) have no charge matrix elements at all;
    // the normalization is then undefined and only the convention survives.
    out.couplings[0] = 1.0;
    return out;
}

double ej_for_frequency(double e_c, double target_omega_q, double n_g_ref, int charge_cutoff) {
    if (!(e_c > 0.0)) throw InvalidArgument("ej_for_frequency: e_c must be > 0");
    if (!(target_omega_q > 0.0)) throw InvalidArgument("ej_for_frequency: target must be > 0");

    TransmonParams p;
    p.e_c = e_c;
    p.n_g = n_g_ref;
    p.charge_cutoff = charge_cutoff;
    p.level_count = 2;

    auto residual = [&](double ej) {
        p.e_j = ej;
        return diagonalize(p).energies[1] - target_omega_q;
    };

    const double seed = (target_omega_q + e_c) * (target_omega_q + e_c) / (8.0 * e_c);
    const double ej_max = 1.0e4 * e_c;
    double lo = 0.5 * seed;
    double hi = std::min(2.0 * seed, ej_max);
    double f_lo = residual(lo);
    double f_hi = residual(hi);
    while (f_lo > 0.0 && lo > 0.0) {
        lo = (lo < 1e-6 * e_c) ? 0.0 : 0.5 * lo;
        f_lo = residual(lo);
    }
    while (f_hi < 0.0 && hi < ej_max) {
        hi = std::min(2.0 * hi, ej_max);
        f_hi = residual(hi);
    }
    if (f_lo > 0.0 || f_hi < 0.0) {
        const double lo_freq = residual(0.0) + target_omega_q;
        const double hi_freq = residual(ej_max) + target_omega_q;
        throw BracketError(fmt::format("ej_for_frequency: target {} GHz outside achievable range "
                                       "[{}, {}] GHz for E_C={} GHz",
                                       target_omega_q, lo_freq, hi_freq, e_c),
                           lo_freq, hi_freq);
    }
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;

    std::uintmax_t max_iter = 200;
    boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 3);
    const auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, f_lo, f_hi, tol, max_iter);
    return 0.5 * (a + b);
}

std::vector<double> default_offset_charge_grid(int points) {
    if (points < 2) throw InvalidArgument("offset-charge grid needs at least 2 points");
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i) grid[i] = -0.5 + static_cast<double>(i) / (points - 1);
    return grid;
}

double charge_dispersion(const TransmonParams& params, int level, std::span<const double> n_g_grid) {
    if (level < 0 || level >= params.level_count) {
        throw InvalidArgument(fmt::format("charge_dispersion: level {} out of range", level));
    }
    if (n_g_grid.empty()) throw InvalidArgument("charge_dispersion: empty offset-charge grid");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    TransmonParams p = params;
    for (double ng : n_g_grid) {
        p.n_g = ng;
        const TransmonEigen eig = diagonalize(p);
        const double e = level == 0 ? eig.ground_energy : eig.energies[level];
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    return hi - lo;
}

double charge_dispersion(const TransmonParams& params, int level) {
    const auto grid = default_offset_charge_grid();
    return charge_dispersion(params, level, grid);
}

int k_bend(double omega_q, double omega_r, double eta) {
    if (!(omega_q > omega_r)) throw InvalidArgument("k_bend: requires omega_q > omega_r");
    if (!(eta > 0.0)) throw InvalidArgument("k_bend: requires eta > 0");
    return static_cast<int>(std::lround((omega_q - omega_r) / eta));
}

}  // namespace mist
