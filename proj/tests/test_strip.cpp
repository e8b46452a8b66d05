#include "mist/strip.hpp"

#include "mist/analysis.hpp"
#include "mist/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mist;

namespace {

TransmonEigen transmon(double e_c, double omega_q, double n_g, int levels = 20) {
    TransmonParams p;
    p.e_c = e_c;
    p.e_j = ej_for_frequency(e_c, omega_q);
    p.n_g = n_g;
    p.level_count = levels;
    return diagonalize(p);
}

// Reference point: E_C = 0.194 GHz, k_eff = 0.048, omega_r = 4.75 GHz,
// detuning 1.1 GHz, n_g = 0.2, 20 levels.
StripConfig reference_strip(double n_g = 0.2) {
    StripConfig c;
    c.eigen = transmon(0.194, 5.85, n_g);
    c.coupling = CouplingEfficiency{0.048};
    c.omega_r = 4.75;
    c.omega_d = 4.75;
    return c;
}

bool is_hermitian(const Eigen::MatrixXcd& h) { return (h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0; }

}  // namespace

TEST_CASE("coupling from efficiency") {
    const StripConfig c = reference_strip();
    CHECK(c.g() == doctest::Approx(0.5 * 0.048 * std::sqrt(c.eigen.omega_q() * 4.75)).epsilon(1e-14));
    CHECK(c.g() == doctest::Approx(0.12651).epsilon(1e-4));
    StripConfig bad = c;
    bad.coupling = CouplingStrength{0.0};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = c;
    bad.level_count = 25;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("undriven Hamiltonian is diagonal") {
    const StripConfig c = reference_strip();
    const auto h = effective_hamiltonian(c, {0.0, 0.0}, 3.0);
    for (int i = 0; i < 20; ++i) {
        CHECK(h(i, i).real() == doctest::Approx(c.eigen.energies[i] - i * 4.75).epsilon(1e-14));
        for (int j = 0; j < 20; ++j) {
            if (i != j) CHECK(h(i, j) == cplx(0.0, 0.0));
        }
    }
}

TEST_CASE("matrix entries against a direct construction") {
    const StripConfig c = reference_strip();
    const cplx alpha = std::polar(std::sqrt(7.3), 0.4);
    StripConfig off = c;
    off.omega_d = 4.70;
    const double t = 1.7;
    const auto h = effective_hamiltonian(off, alpha, t);
    CHECK(is_hermitian(h));
    const cplx phase = std::polar(1.0, 0.4 + 2.0 * std::numbers::pi * (4.75 - 4.70) * t);
    for (int k = 0; k + 1 < 20; ++k) {
        const double amp = 7.3 - k > 0 ? std::sqrt(7.3 - k) : 0.0;
        const cplx expected = phase * amp * c.eigen.couplings[k] * c.g();
        CHECK(std::abs(h(k, k + 1) - expected) < 1e-14);
        CHECK(std::abs(h(k + 1, k) - std::conj(expected)) < 1e-14);
    }
}

TEST_CASE("modified interaction switches bonds off below threshold") {
    const StripConfig c = reference_strip();
    const auto h = strip_hamiltonian(c, {std::sqrt(3.5), 0.0}, 0.0);
    for (int k = 0; k <= 3; ++k) CHECK(h.bonds(k) > 0.0);
    for (int k = 4; k < 19; ++k) CHECK(h.bonds(k) == 0.0);
}

TEST_CASE("resonant frame is time independent") {
    const StripConfig c = reference_strip();
    const cplx alpha(2.0, -3.0);
    const auto a = effective_hamiltonian(c, alpha, 0.0);
    const auto b = effective_hamiltonian(c, alpha, 37.25);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("phased eigensystem diagonalizes the dense matrix") {
    StripConfig c = reference_strip();
    c.omega_d = 4.73;
    const cplx alpha = std::polar(5.0, -1.1);
    const auto sh = strip_hamiltonian(c, alpha, 2.3);
    const auto es = eigensystem(sh);
    const Eigen::MatrixXcd h = sh.dense();
    const Eigen::MatrixXcd residual = h * es.vectors - es.vectors * es.values.asDiagonal();
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((es.vectors.adjoint() * es.vectors - Eigen::MatrixXcd::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-12);
    const auto ref = oracle::hermitian_eigenvalues(h);
    for (int i = 0; i < 20; ++i) CHECK(es.values(i) == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("spectrum is independent of the field phase") {
    const StripConfig c = reference_strip();
    const auto a = eigensystem(strip_hamiltonian(c, {6.0, 0.0}, 0.0)).values;
    for (double phi : {0.3, 1.9, -2.7}) {
        const auto b = eigensystem(strip_hamiltonian(c, std::polar(6.0, phi), 0.0)).values;
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("JTC strip matrix") {
    const StripConfig c = reference_strip();
    const auto h0 = jtc_strip_hamiltonian(c, 0);
    REQUIRE(h0.rows() == 1);
    CHECK(h0(0, 0) == c.eigen.energies[0]);
    const auto h5 = jtc_strip_hamiltonian(c, 5);
    REQUIRE(h5.rows() == 6);
    CHECK(h5(2, 3) == doctest::Approx(c.eigen.couplings[2] * c.g() * std::sqrt(3.0)).epsilon(1e-14));
    CHECK(jtc_strip_hamiltonian(c, 45).rows() == 20);
    CHECK_THROWS_AS(jtc_strip_hamiltonian(c, -1), InvalidArgument);
}

TEST_CASE("spectral identity with the JTC strip") {
    for (double ng : {-0.5, -0.25, 0.0, 0.2}) {
        CAPTURE(ng);
        const StripConfig c = reference_strip(ng);
        for (int n = 0; n <= 60; ++n) CHECK(jtc_spectrum_mismatch(c, n) < 1e-12);
    }
}

TEST_CASE("two-level toy system: exact comparison at N = 1") {
    TransmonParams p;
    p.e_c = 0.2;
    p.e_j = 20.0;
    p.level_count = 2;
    p.charge_cutoff = 10;
    StripConfig c;
    c.eigen = diagonalize(p);
    c.coupling = CouplingStrength{0.1};
    c.omega_r = 4.0;
    c.omega_d = 4.0;
    CHECK(jtc_spectrum_mismatch(c, 1) == 0.0);
}

TEST_CASE("mutation: the unmodified interaction breaks the identity for N < K") {
    StripConfig c = reference_strip();
    c.interaction = Interaction::unmodified;
    for (int n = 1; n < 20; ++n) CHECK(jtc_spectrum_mismatch(c, n) > 1e-6);
}

TEST_CASE("fan diagram anchors and parity") {
    const StripConfig c = reference_strip();
    const auto grid = uniform_nbar_grid(60.0, 0.25);
    const auto fan = fan_diagram(c, grid);
    REQUIRE(fan.branch_count() == 20);
    for (int j = 0; j < 20; ++j) CHECK(fan.branches[j][0] == doctest::Approx(c.bare_energy(j)).epsilon(1e-14));
    CHECK(fan.flags.empty());

    const auto mirrored = fan_diagram(reference_strip(-0.2), grid);
    for (int j = 0; j < 20; ++j) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(mirrored.branches[j][i] - fan.branches[j][i]) < 1e-10);
        }
    }
    CHECK_THROWS_AS(fan_diagram(c, std::vector<double>{1.0, 2.0}), InvalidArgument);
    CHECK_THROWS_AS(fan_diagram(c, std::vector<double>{0.0, 2.0, 1.0}), InvalidArgument);
}

TEST_CASE("ground-state crossing with level 9 near 40 photons") {
    const StripConfig c = reference_strip();
    auto fan = fan_diagram(c, uniform_nbar_grid(80.0, 0.25));
    const auto crossings = find_avoided_crossings(fan, 1e-3, 0.1);
    const CrossingRecord* found = nullptr;
    for (const auto& x : crossings) {
        if (x.branch_a == 0 && x.branch_b == 9) found = &x;
    }
    REQUIRE(found != nullptr);
    CHECK(found->nbar_cross == doctest::Approx(40.0).scale(0).epsilon(0.15));
    CHECK(found->gap == doctest::Approx(0.025).scale(0).epsilon(0.2));
    CHECK(found->gap == 2.0 * found->g_eff);
    CHECK(found->gap > 0.0);
}

TEST_CASE("two-level avoided crossing gives gap 2c") {
    const double c = 0.01;
    const double slope = 0.004;  // GHz per unit parameter
    const double x0 = 12.3;
    auto eig = [&](double x) {
        Eigen::MatrixXcd h(2, 2);
        h << slope * (x - x0) / 2.0, c, c, -slope * (x - x0) / 2.0;
        return eigensystem(h);
    };
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(0.125 * i);
    const auto spectrum = track_spectrum(grid, eig);
    const auto crossings = find_avoided_crossings(spectrum, 0.0, 1.0);
    REQUIRE(crossings.size() == 1);
    CHECK(crossings[0].gap == doctest::Approx(2.0 * c).scale(0).epsilon(0.01));
    CHECK(crossings[0].nbar_cross == doctest::Approx(x0).scale(0).epsilon(0.01));
}

TEST_CASE("parallel branches produce no crossings") {
    auto eig = [](double x) {
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
        h(0, 0) = 0.1 * x;
        h(1, 1) = 0.1 * x + 0.5;
        return eigensystem(h);
    };
    const std::vector<double> grid{0, 1, 2, 3, 4, 5};
    CHECK(find_avoided_crossings(track_spectrum(grid, eig), 0.0, 10.0).empty());
    const std::vector<double> tiny{0, 1};
    CHECK_THROWS_AS(find_avoided_crossings(track_spectrum(tiny, eig), 0.0, 10.0), InvalidArgument);
}

TEST_CASE("branch matching is greedy on overlaps") {
    Eigen::MatrixXcd prev = Eigen::MatrixXcd::Identity(3, 3);
    Eigen::MatrixXcd cur = Eigen::MatrixXcd::Zero(3, 3);
    cur(0, 2) = 1.0;
    cur(1, 0) = 1.0;
    cur(2, 1) = 1.0;
    const auto m = match_branches(prev, cur);
    CHECK(m.column_for_branch == std::vector<int>{2, 0, 1});
    CHECK_FALSE(m.ambiguous);

    // Equal-weight mixing is ambiguous and resolved toward the lower index.
    Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Identity(2, 2);
    const double s = std::sqrt(0.5);
    mixed << s, s, s, -s;
    const auto m2 = match_branches(Eigen::MatrixXcd::Identity(2, 2), mixed);
    CHECK(m2.ambiguous);
    CHECK(m2.column_for_branch == std::vector<int>{0, 1});
}

TEST_CASE("perturbative multi-photon coupling") {
    const StripConfig c = reference_strip();
    const double g = c.g();
    // Direct product formula evaluated independently.
    double expected = 1.0;
    for (int k = 0; k < 9; ++k) expected *= c.eigen.couplings[k] * g;
    for (int k = 1; k < 9; ++k) expected /= (c.bare_energy(k) - c.bare_energy(0));
    expected = std::abs(expected) * std::pow(40.0, 4.5);
    const double g_eff = g_eff_perturbative(c, 9, 40.0);
    CHECK(g_eff == doctest::Approx(expected).epsilon(1e-12));
    CHECK(g_eff == doctest::Approx(0.032).scale(0).epsilon(0.10));

    CHECK(g_eff_perturbative(c, 1, 9.0) == doctest::Approx(c.eigen.couplings[0] * g * 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(g_eff_perturbative(c, 0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(g_eff_perturbative(c, 20, 1.0), InvalidArgument);
}

TEST_CASE("perturbative coupling follows the n_crit power law") {
    // g_eff at level 9 scales as (nbar / n_crit)^4 g sqrt(nbar); the ratio
    // between two photon numbers must follow that law exactly.
    const StripConfig c = reference_strip();
    const double nc = n_crit(c.eigen.omega_q() - c.omega_r, c.g());
    auto law = [&](double n) { return std::pow(n / nc, 4) * c.g() * std::sqrt(n); };
    const double calib = g_eff_perturbative(c, 9, 40.0) / law(40.0);
    for (double n : {20.0, 33.0, 55.0}) {
        CHECK(g_eff_perturbative(c, 9, n) == doctest::Approx(calib * law(n)).scale(0).epsilon(0.2));
    }
}

TEST_CASE("resonant intermediate level is reported") {
    StripConfig c = reference_strip();
    // Tune the resonator so that level 2 is degenerate with level 0 in the frame.
    c.omega_r = c.eigen.energies[2] / 2.0;
    c.coupling = CouplingStrength{0.1};
    CHECK_THROWS_WITH_AS(g_eff_perturbative(c, 4, 10.0), doctest::Contains("level 2"), InvalidArgument);
}

TEST_CASE("hybridization of levels 0 and 9 at some offset charge") {
    // Detuning 1 GHz, anharmonicity near 0.2 GHz, g = 0.12 GHz, 50 photons.
    double best = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double ng = -0.5 + 0.01 * i;
        StripConfig c;
        c.eigen = transmon(0.19, 5.75, ng);
        c.coupling = CouplingStrength{0.12};
        c.omega_r = 4.75;
        c.omega_d = 4.75;
        const auto es = eigensystem(strip_hamiltonian(c, {std::sqrt(50.0), 0.0}, 0.0));
        for (int col = 0; col < 20; ++col) {
            best = std::max(best, std::min(std::norm(es.vectors(0, col)), std::norm(es.vectors(9, col))));
        }
    }
    CHECK(best > 0.05);
}

TEST_CASE("fan csv layout") {
    SpectrumResult s;
    s.nbar_grid = {0.0, 0.5};
    s.branches = {{1.0, 1.5}, {-2.0, -2.25}};
    std::ostringstream os;
    write_fan_csv(os, s);
    CHECK(os.str() == "nbar,branch_0,branch_1\n0,1,-2\n0.5,1.5,-2.25\n");
}
