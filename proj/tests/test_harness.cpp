#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <omp.h>

#include "hilbert/error.hpp"
#include "hilbert/harness.hpp"

using namespace hilbert;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig tiny(Scenario s = Scenario::standing_wave) {
    RunConfig c;
    c.scenario = s;
    c.n_x = 8;
    c.n_per_axis = 12;
    c.v_max = 6.0;
    c.epsilon_list = {0.2, 0.1, 0.05};
    c.t_final = 0.04;
    c.sample_interval = 0.02;
    return c;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("config: values, lists, comments") {
    auto c = parse_config_string(
        "# leading comment\n"
        "scenario = \"custom\"\n"
        "custom_rho_modes = [0.01, 0.0, 0.002]\n"
        "n_x = 32   # trailing\n"
        "epsilon_list = [0.1, 0.05]\n"
        "backend = \"bgk\"\n"
        "forcing = \"closure\"\n"
        "seed = 7\n");
    CHECK(c.scenario == Scenario::custom);
    CHECK(c.custom_rho_modes == std::vector<double>{0.01, 0.0, 0.002});
    CHECK(c.n_x == 32);
    CHECK(c.epsilon_list == std::vector<double>{0.1, 0.05});
    CHECK(c.forcing == ForcingMode::closure);
    CHECK(c.seed == 7u);
    CHECK(c.n_per_axis == RunConfig{}.n_per_axis);
}

TEST_CASE("config: errors carry the line and reject bad values") {
    try {
        parse_config_string("n_x = 16\nbogus = 3\n");
        FAIL("no error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_string("[grid]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("n_x\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("n_x = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("n_x = 15\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("epsilon_list = [0.05, 0.1]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("k_trunc = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("scenario = \"vortex\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("amplitude = 2.0\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/hilbert.toml"), ConfigError);
    RunConfig c;
    set_config_value(c, "v_max", "7.5");
    CHECK(c.v_max == 7.5);
    CHECK_THROWS_AS(set_config_value(c, "nope", "1"), ConfigError);
}

TEST_CASE("log-log fit: exact power laws, scale invariance, degenerate inputs") {
    std::vector<ConvergenceRow> rows;
    for (double e : {0.08, 0.04, 0.02}) rows.push_back({e, 3.0 * e * std::sqrt(e)});
    auto f = fit_loglog(rows);
    CHECK(f.slope == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f.slope_ci == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK_FALSE(f.degenerate);

    auto scaled = rows;
    for (auto& r : scaled) r.sup_t_l2_dist *= 1e-5;
    CHECK(fit_loglog(scaled).slope == doctest::Approx(f.slope).epsilon(1e-12));

    // two points: slope only
    std::vector<ConvergenceRow> two{{0.1, 0.01}, {0.05, 0.005}};
    auto f2 = fit_loglog(two);
    CHECK(f2.slope == doctest::Approx(1.0));
    CHECK(std::isnan(f2.slope_ci));

    // noisy data: the interval covers the generating slope
    std::vector<ConvergenceRow> noisy{{0.1, 0.1 * 1.05}, {0.05, 0.05 * 0.97}, {0.025, 0.025 * 1.02}, {0.0125, 0.0125}};
    auto fn = fit_loglog(noisy);
    CHECK(std::abs(fn.slope - 1.0) <= fn.slope_ci);

    CHECK(fit_loglog({}).degenerate);
    CHECK(fit_loglog({{0.1, 1e-3}}).degenerate);
    CHECK(fit_loglog({{0.1, 1e-3}, {0.05, 1e-15}}).degenerate);
}

TEST_CASE("validity horizon") {
    CHECK(validity_horizon(0.1, 6) == doctest::Approx(std::pow(10.0, 0.45)));
    CHECK(validity_horizon(0.01, 2) == doctest::Approx(std::pow(0.01, -0.25)));
    CHECK(std::isnan(validity_horizon(0.1, 1)));
}

TEST_CASE("grid Maxwellian field carries the fluid moments") {
    auto c = tiny();
    auto sc = build_scenario(c);
    auto F = grid_maxwellian_field(sc.fluid0, sc.vgrid);
    const std::size_t N = sc.vgrid.size();
    for (int ix = 0; ix < c.n_x; ++ix) {
        double m0 = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            const auto& v = sc.vgrid.nodes[k];
            const double w = sc.vgrid.weights[k] * F[ix * N + k];
            m0 += w;
            m1 += w * v[0];
            m2 += w * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
        const double r = sc.fluid0.rho[ix], u = sc.fluid0.u[ix], th = sc.fluid0.theta[ix];
        CHECK(m0 == doctest::Approx(r).epsilon(1e-12));
        CHECK(m1 == doctest::Approx(r * u).scale(1.0).epsilon(1e-12));
        CHECK(m2 == doctest::Approx(r * u * u + 3.0 * r * th).epsilon(1e-12));
    }
}

TEST_CASE("emit with no rows writes headers and the degenerate flag") {
    auto dir = scratch("hilbert_emit_empty");
    ConvergenceReport rep;
    auto f = fit_loglog(rep.rows);
    rep.slope = f.slope;
    rep.slope_ci = f.slope_ci;
    rep.degenerate = f.degenerate;
    emit_report(rep, RunConfig{}, dir.string());
    CHECK(slurp(dir / "convergence.csv") == "epsilon,sup_t_l2_dist\n");
    auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j["degenerate"].get<bool>());
    CHECK(j["slope"].is_null());
    CHECK(j["runs"].empty());
    CHECK(j["config"]["n_x"] == 64);
    fs::remove_all(dir);
}

TEST_CASE("study output is byte-identical across runs and thread counts") {
    auto c = tiny();
    auto d1 = scratch("hilbert_det_a"), d2 = scratch("hilbert_det_b");
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    auto r1 = run_convergence_study(c);
    emit_report(r1, c, d1.string());
    omp_set_num_threads(3);
    auto r2 = run_convergence_study(c);
    emit_report(r2, c, d2.string());
    omp_set_num_threads(saved);

    int files = 0;
    for (const auto& e : fs::directory_iterator(d1)) {
        ++files;
        REQUIRE(fs::exists(d2 / e.path().filename()));
        CHECK_MESSAGE(slurp(e.path()) == slurp(d2 / e.path().filename()), e.path().filename().string());
    }
    CHECK(files == 2 + static_cast<int>(c.epsilon_list.size()));

    // summary slope survives the JSON round trip exactly
    auto j = nlohmann::json::parse(slurp(d1 / "summary.json"));
    CHECK(j["slope"].get<double>() == r1.slope);
    CHECK(j["runs"].size() == 3);
    CHECK(j["runs"][0]["kinetic_steps"].get<int>() > 0);
    CHECK(std::isfinite(r1.slope));
    CHECK_FALSE(r1.degenerate);
    for (const auto& run : r1.runs) {
        CHECK(run.dissipation_nonnegative);
        CHECK(run.series.size() == 3);
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("steady scenario: distances at rounding level, flagged degenerate") {
    auto c = tiny(Scenario::steady);
    auto rep = run_convergence_study(c);
    for (const auto& r : rep.rows) CHECK(r.sup_t_l2_dist <= 1e-12);
    CHECK(rep.degenerate);
    CHECK(std::isnan(rep.slope));
}

TEST_CASE("kinetic runs need the BGK backend") {
    auto c = tiny();
    c.backend = Backend::full_hard_sphere;
    CHECK_THROWS_AS(run_single_epsilon(c, 0.1), ConfigError);
}
