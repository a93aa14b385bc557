#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "hilbert/error.hpp"
#include "hilbert/euler_poisson.hpp"

using namespace hilbert;

namespace {

constexpr double kPi = std::numbers::pi;

double omega_oracle(double rho_bar, double K, double k) {
    return std::sqrt(rho_bar + (5.0 / 3.0) * K * std::pow(rho_bar, 2.0 / 3.0) * k * k);
}

// Runs a standing wave and returns the measured angular frequency of its cos mode.
double measured_frequency(int n_x, double L, int mode, double K, double rho_bar, double periods) {
    auto g = build_spatial_grid(n_x, L);
    auto s = standing_wave(g, 1e-4 * rho_bar, mode, K, rho_bar);
    const double T = periods * 2.0 * kPi / omega_oracle(rho_bar, K, 2.0 * kPi * mode / L);
    std::vector<double> t{0.0}, a{cosine_mode(s.rho, g, mode)};
    const double dt = 0.25 * cfl_limit(s, g);
    while (s.time < T) {
        s = step_euler_poisson(s, dt, g);
        t.push_back(s.time);
        a.push_back(cosine_mode(s.rho, g, mode));
    }
    return zero_crossing_frequency(t, a);
}

} // namespace

TEST_CASE("Poisson: single mode, zero source, superposition") {
    const double L = 3.0;
    auto g = build_spatial_grid(32, L);
    const double k = 2.0 * kPi / L, A = 0.7;
    std::vector<double> s1(32), s2(32), s12(32);
    for (int i = 0; i < 32; ++i) {
        s1[i] = A * std::cos(k * g.nodes[i]);
        s2[i] = -0.2 * std::sin(3.0 * k * g.nodes[i]);
        s12[i] = s1[i] + s2[i];
    }
    auto p1 = solve_poisson(s1, g);
    for (int i = 0; i < 32; ++i) CHECK(p1[i] == doctest::Approx(-A / (k * k) * std::cos(k * g.nodes[i])).scale(1.0));

    std::vector<double> z(32, 0.0);
    for (double p : solve_poisson(z, g)) CHECK(p == 0.0);

    auto p2 = solve_poisson(s2, g), p12 = solve_poisson(s12, g);
    for (int i = 0; i < 32; ++i) CHECK(std::abs(p12[i] - p1[i] - p2[i]) < 1e-15);

    std::vector<double> bad(32, 1.0);
    CHECK_THROWS_AS(solve_poisson(bad, g), PreconditionError);
}

TEST_CASE("fluid state: isentropic temperature, neutrality, zero-mean potential") {
    auto g = build_spatial_grid(48, 2.0 * kPi);
    auto s = standing_wave(g, 0.05, 2, 0.8, 1.5);
    double mphi = 0.0;
    for (int i = 0; i < 48; ++i) {
        CHECK(s.theta[i] == doctest::Approx(0.8 * std::pow(s.rho[i], 2.0 / 3.0)).epsilon(1e-14));
        mphi += s.phi[i];
    }
    CHECK(std::abs(mphi / 48) < 1e-15);
    CHECK(std::abs(neutrality_defect(s, g)) < 1e-10);
}

TEST_CASE("rhs: constant state is steady") {
    auto g = build_spatial_grid(32, 2.0 * kPi);
    auto s = make_fluid_state(g, std::vector<double>(32, 1.3), std::vector<double>(32, 0.0), 1.0, 1.3);
    auto r = euler_poisson_rhs(s, g);
    for (int i = 0; i < 32; ++i) {
        CHECK(r.rho_t[i] == 0.0);
        CHECK(r.u_t[i] == 0.0);
    }
}

TEST_CASE("rhs: small cosine perturbation matches the linearized operator") {
    // u_t = a sin(kx) (gamma K rho_bar^(gamma-2) k + 1/k) to first order
    const double L = 2.0 * kPi, rb = 1.4, K = 0.6, a = 1e-6;
    auto g = build_spatial_grid(32, L);
    const double k = 2.0 * 2.0 * kPi / L;
    auto s = standing_wave(g, a, 2, K, rb);
    auto r = euler_poisson_rhs(s, g);
    const double amp = a * ((5.0 / 3.0) * K * std::pow(rb, 5.0 / 3.0 - 2.0) * k + 1.0 / k);
    for (int i = 0; i < 32; ++i) {
        CHECK(std::abs(r.rho_t[i]) < 1e-20);
        CHECK(r.u_t[i] == doctest::Approx(amp * std::sin(k * g.nodes[i])).scale(amp).epsilon(1e-5));
    }
}

TEST_CASE("rhs: a density bump pushes fluid outward") {
    const double L = 2.0 * kPi;
    auto g = build_spatial_grid(64, L);
    std::vector<double> rho(64), u(64, 0.0);
    double mass = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double d = g.nodes[i] - kPi;
        rho[i] = 1.0 + 0.1 * std::exp(-4.0 * d * d);
        mass += rho[i];
    }
    auto s = make_fluid_state(g, rho, u, 1e-8, mass / 64);
    auto r = euler_poisson_rhs(s, g);
    for (int i = 0; i < 64; ++i) {
        const double d = g.nodes[i] - kPi;
        if (std::abs(d) > 0.1 && std::abs(d) < 1.0) CHECK(r.u_t[i] * d > 0.0);
    }
}

TEST_CASE("step: constant state stays constant, neutrality does not drift") {
    auto g = build_spatial_grid(32, 2.0 * kPi);
    auto s = make_fluid_state(g, std::vector<double>(32, 1.0), std::vector<double>(32, 0.0), 1.0, 1.0);
    const auto s0 = s;
    const double dt = 0.5 * cfl_limit(s, g);
    for (int n = 0; n < 1000; ++n) s = step_euler_poisson(s, dt, g);
    for (int i = 0; i < 32; ++i) {
        CHECK(s.rho[i] == s0.rho[i]);
        CHECK(s.u[i] == s0.u[i]);
    }

    auto w = standing_wave(g, 0.05, 1, 1.0, 1.0);
    const double dtw = 0.5 * cfl_limit(w, g);
    double worst = 0.0;
    for (int n = 0; n < 500; ++n) {
        w = step_euler_poisson(w, dtw, g);
        worst = std::max(worst, std::abs(neutrality_defect(w, g)));
    }
    CHECK(worst < 1e-10);
    CHECK_THROWS_AS(step_euler_poisson(w, 10.0 * cfl_limit(w, g), g), NumericalError);
}

TEST_CASE("standing waves oscillate at the plasma frequency") {
    const double L = 2.0 * kPi;
    for (int mode : {1, 2}) {
        const double k = 2.0 * kPi * mode / L;
        const double om = measured_frequency(32, L, mode, 1.0, 1.0, 6.0);
        CHECK(om == doctest::Approx(omega_oracle(1.0, 1.0, k)).epsilon(0.02));
        CHECK(plasma_frequency(1.0, 1.0, k) == doctest::Approx(omega_oracle(1.0, 1.0, k)).epsilon(1e-15));
    }
    const double om = measured_frequency(32, 4.0, 1, 0.5, 2.0, 6.0);
    CHECK(om == doctest::Approx(omega_oracle(2.0, 0.5, 2.0 * kPi / 4.0)).epsilon(0.02));
}

TEST_CASE("zero crossings of a pure cosine") {
    std::vector<double> t, s;
    for (int i = 0; i <= 4000; ++i) {
        t.push_back(i * 0.005);
        s.push_back(std::cos(1.7 * t.back() + 0.3));
    }
    CHECK(zero_crossing_frequency(t, s) == doctest::Approx(1.7).epsilon(1e-6));
    std::vector<double> tt{0.0, 1.0}, ss{1.0, 1.0};
    CHECK_THROWS_AS(zero_crossing_frequency(tt, ss), NumericalError);
}

TEST_CASE("decay report: constant state, small wave, large wave") {
    const double L = 2.0 * kPi;
    auto g = build_spatial_grid(32, L);
    auto c = make_fluid_state(g, std::vector<double>(32, 1.0), std::vector<double>(32, 0.0), 1.0, 1.0);
    auto rc = measure_decay({c, c}, g);
    CHECK(rc.bounded);
    CHECK(rc.samples[1].sup_drho == 0.0);
    CHECK(rc.samples[1].sup_u == 0.0);
    CHECK(rc.samples[1].sup_dphi == 0.0);

    // 50 periods of the lowest mode
    auto s = standing_wave(g, 1e-3, 1, 1.0, 1.0);
    const double T = 50.0 * 2.0 * kPi / omega_oracle(1.0, 1.0, 1.0);
    std::vector<FluidState> hist{s};
    const double dt = 0.5 * cfl_limit(s, g);
    int n = 0;
    while (s.time < T) {
        s = step_euler_poisson(s, dt, g);
        if (++n % 20 == 0) hist.push_back(s);
    }
    auto rs = measure_decay(hist, g);
    CHECK(rs.bounded);
    CHECK(rs.growth_ratio <= 2.0);

    auto b = standing_wave(g, 0.9, 1, 0.01, 1.0);
    std::vector<FluidState> hb{b};
    try {
        while (b.time < 3.0) {
            b = step_euler_poisson(b, 0.5 * cfl_limit(b, g), g);
            hb.push_back(b);
        }
    } catch (const NumericalError&) {
    }
    auto rb = measure_decay(hb, g);
    CHECK_FALSE(rb.bounded);
    CHECK(rb.growth_ratio > 2.0);
}

TEST_CASE("snapshot CSV") {
    auto g = build_spatial_grid(8, 1.0);
    auto s = standing_wave(g, 0.01, 1, 1.0, 1.0);
    auto path = std::filesystem::temp_directory_path() / "hilbert_snapshot_test.csv";
    write_fluid_snapshot(path.string(), s, g);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,x,rho,u,theta,phi");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 8);
    std::filesystem::remove(path);
}
