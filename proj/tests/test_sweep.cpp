#include "mist/sweep.hpp"

#include "mist/error.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mist;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SweepConfig small_config() {
    SweepConfig c = SweepConfig::defaults();
    c.delta_grid = {1.0, 1.1};
    c.n_g_grid = {-0.5, -0.2, 0.0};
    c.duration = 50.0;
    c.workers = 1;
    return c;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mist_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("default configuration") {
    const SweepConfig c = SweepConfig::defaults();
    CHECK(c.e_c == 0.194);
    REQUIRE(c.k_eff.has_value());
    CHECK(*c.k_eff == 0.048);
    CHECK_FALSE(c.g.has_value());
    CHECK(c.kappa == doctest::Approx(1.0 / 22.0));
    CHECK(c.epsilon == 0.045);
    CHECK(c.omega_r == 4.75);
    CHECK(c.duration == 100.0);
    CHECK(c.level_count == 20);
    REQUIRE(c.delta_grid.size() == 51);
    CHECK(c.delta_grid.front() == 0.6);
    CHECK(c.delta_grid.back() == 1.6);
    CHECK(c.delta_grid[26] == 1.12);
    REQUIRE(c.n_g_grid.size() == 11);
    CHECK(c.n_g_grid.front() == -0.5);
    CHECK(c.n_g_grid.back() == 0.0);
    CHECK(c.initial_states == std::vector<int>{0, 1});
    CHECK(c.workers >= 1);
    CHECK_NOTHROW(c.validate());
    CHECK(c.coupling_at(1.1) == doctest::Approx(0.5 * 0.048 * std::sqrt(5.85 * 4.75)));
}

TEST_CASE("configuration validation") {
    SweepConfig c = small_config();
    c.delta_grid = {1.1, 1.0};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.n_g_grid.clear();
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.workers = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.g = 0.1;  // both k_eff and g
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.initial_states = {25};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = small_config();
    c.threshold = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("JSON round trip and range grids") {
    const SweepConfig c = small_config();
    const SweepConfig back = sweep_config_from_json(sweep_config_to_json(c, true));
    CHECK(sweep_config_to_json(back, true) == sweep_config_to_json(c, true));
    CHECK(config_hash(back) == config_hash(c));

    const auto r = sweep_config_from_json(R"({"delta_grid": {"start": 0.8, "stop": 1.4, "step": 0.05},
                                              "g": 0.12, "n_g_grid": [0.0]})");
    REQUIRE(r.delta_grid.size() == 13);
    CHECK(r.delta_grid[12] == 1.4);
    CHECK(r.delta_grid[3] == 0.95);
    CHECK(r.g.has_value());
    CHECK_FALSE(r.k_eff.has_value());
    CHECK(r.coupling_at(0.9) == 0.12);

    CHECK_THROWS_WITH_AS(sweep_config_from_json(R"({"bogus": 1})"), doctest::Contains("bogus"), InvalidArgument);
    CHECK_THROWS_AS(sweep_config_from_json("{not json"), InvalidArgument);
    CHECK_THROWS_AS(sweep_config_from_json(R"({"e_c": "big"})"), InvalidArgument);
    CHECK_THROWS_AS(sweep_config_from_json(R"({"delta_grid": {"start": 1}})"), InvalidArgument);
}

TEST_CASE("overrides and hashing") {
    SweepConfig c = small_config();
    const std::string h0 = config_hash(c);
    CHECK(h0.size() == 16);
    apply_override(c, "workers", "8");
    apply_override(c, "output_dir", "/tmp/somewhere");
    CHECK(c.workers == 8);
    CHECK(c.output_dir == "/tmp/somewhere");
    CHECK(config_hash(c) == h0);  // runtime-only keys leave the hash alone
    apply_override(c, "epsilon", "0.03");
    CHECK(c.epsilon == 0.03);
    CHECK(config_hash(c) != h0);
    apply_override(c, "delta_grid", "[0.9, 1.3]");
    CHECK(c.delta_grid == std::vector<double>{0.9, 1.3});
    CHECK_THROWS_AS(apply_override(c, "nope", "1"), InvalidArgument);
}

TEST_CASE("detuning setup and member simulation") {
    const SweepConfig c = small_config();
    const auto s = setup_detuning(c, 1.1);
    CHECK(s.omega_q == doctest::Approx(5.85));
    CHECK(s.e_j == doctest::Approx(23.5904).scale(0).epsilon(1e-5));
    CHECK(s.g == doctest::Approx(0.126513).scale(0).epsilon(1e-5));
    const auto sim = member_simulation(c, s, 0.2, 1);
    CHECK(sim.initial_state == 1);
    CHECK(sim.strip.g() == s.g);
    CHECK(sim.strip.omega_d == c.omega_r);
    CHECK(sim.drive.omega_d == c.omega_r);
    CHECK(sim.drive.omega_r_dressed == c.omega_r);
    CHECK(sim.strip.eigen.n_g == doctest::Approx(0.2));
}

TEST_CASE("single undriven point") {
    SweepConfig c = small_config();
    c.delta_grid = {1.1};
    c.n_g_grid = {0.0};
    c.initial_states = {0};
    c.epsilon = 0.0;
    const auto r = run_sweep(c);
    REQUIRE(r.states.size() == 1);
    const auto& s = r.states[0];
    REQUIRE(s.heatmap.size() == 1);
    CHECK(s.heatmap[0].size() == r.nbar_grid.size());
    for (double v : s.heatmap[0]) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.onsets.empty());
    CHECK_FALSE(s.boundary.has_value());
    CHECK(s.fit_error.find("insufficient points") != std::string::npos);

    const auto j = nlohmann::json::parse(boundary_json(r, 0, c.threshold));
    CHECK(j["A"].is_null());
    CHECK(j["points"].empty());
    CHECK(j["meta"]["config_hash"] == config_hash(c));
}

TEST_CASE("small sweep: shapes, ranges and exports") {
    const SweepConfig c = small_config();
    const auto r = run_sweep(c);
    CHECK(r.delta_grid == c.delta_grid);
    CHECK(r.config_hash == config_hash(c));
    CHECK(r.tool_version == std::string(kToolVersion));
    CHECK(r.nbar_grid.front() == 0.0);
    CHECK(r.nbar_grid[1] == 0.25);
    REQUIRE(r.states.size() == 2);
    for (const auto& s : r.states) {
        REQUIRE(s.heatmap.size() == c.delta_grid.size());
        for (const auto& row : s.heatmap) {
            REQUIRE(row.size() == r.nbar_grid.size());
            for (std::size_t k = 0; k < row.size(); ++k) {
                CHECK(row[k] >= 0.0);
                CHECK(row[k] <= 1.0 + 1e-9);
                if (k > 0) CHECK(row[k] <= row[k - 1]);
            }
        }
        for (std::size_t i = 1; i < s.onsets.size(); ++i) CHECK(s.onsets[i].nbar_onset > s.onsets[i - 1].nbar_onset);
    }

    const std::string csv = heatmap_csv(r, 0);
    CHECK(csv.rfind("# ", 0) == 0);
    CHECK(csv.find("config_hash=" + r.config_hash) != std::string::npos);
    std::istringstream lines(csv);
    std::string line;
    std::vector<std::string> body;
    while (std::getline(lines, line)) {
        if (line.rfind("# ", 0) != 0) body.push_back(line);
    }
    REQUIRE(body.size() == 3);
    CHECK(body[0].rfind("delta\\nbar,0,0.25,0.5", 0) == 0);
    CHECK(body[1].rfind("1,1,", 0) == 0);
    CHECK(body[2].rfind("1.1,1,", 0) == 0);

    const fs::path dir = scratch("outputs");
    write_sweep_outputs(r, c, dir.string());
    for (const char* f : {"heatmap_state0.csv", "heatmap_state1.csv", "boundary_state0.json", "boundary_state1.json",
                          "sweep_config.json", "run_metadata.json"}) {
        CHECK(fs::exists(dir / f));
    }
    CHECK(slurp(dir / "heatmap_state0.csv") == csv);
    const auto meta = nlohmann::json::parse(slurp(dir / "run_metadata.json"));
    CHECK(meta.contains("wall_time_s"));
    CHECK(slurp(dir / "boundary_state0.json").find("wall_time") == std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("results do not depend on the worker count") {
    SweepConfig one = small_config();
    one.workers = 1;
    SweepConfig many = one;
    many.workers = 4;
    const auto a = run_sweep(one);
    const auto b = run_sweep(many);
    const fs::path da = scratch("w1"), db = scratch("w4");
    write_sweep_outputs(a, one, da.string());
    write_sweep_outputs(b, many, db.string());
    for (const char* f : {"heatmap_state0.csv", "heatmap_state1.csv", "boundary_state0.json", "boundary_state1.json",
                          "sweep_config.json"}) {
        CAPTURE(f);
        CHECK(slurp(da / f) == slurp(db / f));
    }
    fs::remove_all(da);
    fs::remove_all(db);
}

TEST_CASE("failures identify the sweep point") {
    SweepConfig c = small_config();
    c.delta_grid = {1.0, 5000.0};
    try {
        run_sweep(c);
        FAIL("expected SweepError");
    } catch (const SweepError& e) {
        CHECK(e.delta() == 5000.0);
        CHECK(std::string(e.what()).find("5000") != std::string::npos);
    }
}

TEST_CASE("spectral oracle check") {
    SweepConfig c = SweepConfig::defaults();
    c.delta_grid = {0.8, 1.1, 1.4};
    c.n_g_grid = {-0.5, -0.25, 0.0, 0.2};
    const auto ok = run_oracle_check(c);
    CHECK(ok.pass);
    CHECK(ok.max_diff < 1e-12);
    CHECK(ok.max_diff_by_n.size() == 61);
    CHECK(ok.cases.size() == 12);

    const auto bad = run_oracle_check(c, Interaction::unmodified);
    CHECK_FALSE(bad.pass);
    for (int n = 1; n < 20; ++n) CHECK(bad.max_diff_by_n[n] > 1e-6);
    const auto report = nlohmann::json::parse(oracle_report_json(bad, c));
    CHECK(report["pass"] == false);
    CHECK(report["max_diff_ghz"].get<double>() > 1e-6);

    SweepConfig toy = c;
    toy.level_count = 2;
    toy.initial_states = {0};
    toy.charge_cutoff = 10;
    toy.delta_grid = {1.1};
    toy.n_g_grid = {0.0};
    const auto t = run_oracle_check(toy);
    CHECK(t.max_diff_by_n.size() == 7);
    CHECK(t.max_diff_by_n[1] == 0.0);
    CHECK(t.pass);
}
