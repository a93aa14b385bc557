#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hilbert/error.hpp"
#include "hilbert/expansion.hpp"

using namespace hilbert;

namespace {

constexpr double kPi = std::numbers::pi;

ExpansionContext make_ctx(int n_x, int n_v, double v_max, Backend b = Backend::bgk) {
    ExpansionContext ctx;
    ctx.sgrid = build_spatial_grid(n_x, 2.0 * kPi);
    ctx.vgrid = build_velocity_grid(n_v, v_max);
    ctx.coll.backend = b;
    return ctx;
}

FluidState flat(const ExpansionContext& ctx) {
    const int n = ctx.sgrid.n_x;
    return make_fluid_state(ctx.sgrid, std::vector<double>(n, 1.0), std::vector<double>(n, 0.0), 1.0, 1.0);
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Growth factors from closed-form geometric sums; the double sum counts
// (4k - 1 - m) index pairs with i + j = m.
std::pair<double, double> growth_oracle(double eps, double t, int k) {
    const double q = eps * (1.0 + t);
    const int top = 2 * k - 1;
    const double s = q == 1.0 ? top : (1.0 - std::pow(q, top)) / (1.0 - q);
    double I2 = 0.0;
    for (int m = 2 * k; m <= 4 * k - 2; ++m) I2 += (4 * k - 1 - m) * std::pow(eps, m - 2 * k) * std::pow(1.0 + t, m - 2);
    return {s + s * s, I2};
}

} // namespace

TEST_CASE("growth factors") {
    auto [a1, a2] = growth_factors(0.1, 0.0, 6);
    CHECK(a1 == doctest::Approx(2.3456790).epsilon(1e-7));
    CHECK(a1 == doctest::Approx(growth_oracle(0.1, 0.0, 6).first).epsilon(1e-14));
    CHECK(a2 == doctest::Approx(growth_oracle(0.1, 0.0, 6).second).epsilon(1e-14));

    auto [b1, b2] = growth_factors(1e-12, 0.0, 3);
    CHECK(b1 == doctest::Approx(2.0).epsilon(1e-10));

    auto [c1, c2] = growth_factors(0.1, 0.0, 1);
    CHECK(c1 == 2.0);
    CHECK(c2 == 1.0);

    for (int k : {1, 2, 6}) {
        double p1 = 0.0, p2 = 0.0;
        for (double t = 0.0; t <= 20.0; t += 0.5) {
            auto [i1, i2] = growth_factors(0.05, t, k);
            auto [o1, o2] = growth_oracle(0.05, t, k);
            CHECK(i1 == doctest::Approx(o1).epsilon(1e-12));
            CHECK(i2 == doctest::Approx(o2).epsilon(1e-12));
            CHECK(i1 >= p1);
            CHECK(i2 >= p2);
            p1 = i1;
            p2 = i2;
        }
    }
    CHECK_THROWS_AS(growth_factors(0.0, 0.0, 6), PreconditionError);
}

TEST_CASE("micro part vanishes over a constant state") {
    auto ctx = make_ctx(8, 12, 6.0);
    auto fl = flat(ctx);
    auto m = micro_F1(fl, euler_poisson_rhs(fl, ctx.sgrid), ctx);
    CHECK(sup_abs(m) == 0.0);
    auto s = micro_source(fl, euler_poisson_rhs(fl, ctx.sgrid), ctx);
    CHECK(sup_abs(s) == 0.0);
}

TEST_CASE("micro part is microscopic at every x, both backends") {
    for (Backend b : {Backend::bgk, Backend::full_hard_sphere}) {
        auto ctx = make_ctx(4, 12, 6.0, b);
        auto fl = standing_wave(ctx.sgrid, 0.05, 1, 1.0, 1.0);
        auto m = micro_F1(fl, euler_poisson_rhs(fl, ctx.sgrid), ctx);
        const std::size_t N = ctx.vgrid.size();
        for (int ix = 0; ix < ctx.sgrid.n_x; ++ix) {
            std::span<const double> g(m.data() + ix * N, N);
            auto basis = null_basis(fluid_params(fl, ix), ctx.vgrid);
            auto Pg = project_P(g, basis, ctx.vgrid);
            CHECK(norm_v(Pg, ctx.vgrid) <= 1e-6 * norm_v(g, ctx.vgrid));
        }
    }
}

TEST_CASE("micro part is linear in a small perturbation") {
    auto ctx = make_ctx(16, 12, 6.0);
    auto a = standing_wave(ctx.sgrid, 5e-4, 1, 1.0, 1.0);
    auto b = standing_wave(ctx.sgrid, 1e-3, 1, 1.0, 1.0);
    // give the fluid some velocity so every source term is active
    for (int i = 0; i < ctx.sgrid.n_x; ++i) {
        a.u[i] = 5e-4 * std::sin(ctx.sgrid.nodes[i]);
        b.u[i] = 1e-3 * std::sin(ctx.sgrid.nodes[i]);
    }
    auto ma = micro_F1(a, euler_poisson_rhs(a, ctx.sgrid), ctx);
    auto mb = micro_F1(b, euler_poisson_rhs(b, ctx.sgrid), ctx);
    std::vector<double> d(ma.size());
    for (std::size_t i = 0; i < ma.size(); ++i) d[i] = mb[i] - 2.0 * ma[i];
    CHECK(l2_xv(d, ctx) <= 0.05 * l2_xv(mb, ctx));
}

TEST_CASE("micro part decays like (1+|v|^3) sqrt(omega) scaled by the fluid gradients") {
    auto ctx = make_ctx(16, 12, 6.0);
    auto fit = [&](double amp) {
        auto fl = standing_wave(ctx.sgrid, amp, 1, 1.0, 1.0);
        auto rhs = euler_poisson_rhs(fl, ctx.sgrid);
        auto m = micro_F1(fl, rhs, ctx);
        Spectral1D sp(ctx.sgrid.n_x, ctx.sgrid.length);
        const double G = sup_abs(sp.derivative(fl.rho)) + sup_abs(sp.derivative(fl.u)) +
                         sup_abs(sp.derivative(fl.theta)) + sup_abs(sp.derivative(fl.phi));
        const std::size_t N = ctx.vgrid.size();
        double C = 0.0;
        for (int ix = 0; ix < ctx.sgrid.n_x; ++ix) {
            auto p = fluid_params(fl, ix);
            for (std::size_t k = 0; k < N; ++k) {
                const auto& v = ctx.vgrid.nodes[k];
                const double s = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                C = std::max(C, std::abs(m[ix * N + k]) / (G * (1.0 + s * s * s) * std::sqrt(maxwellian_at(p, v))));
            }
        }
        return C;
    };
    const double C1 = fit(1e-3), C2 = fit(1e-2);
    MESSAGE("micro envelope constant ", C1, " ", C2);
    CHECK(std::isfinite(C1));
    CHECK(C2 <= 1.5 * C1);
}

TEST_CASE("assemble_F1: zero data, macroscopic moments") {
    auto ctx = make_ctx(8, 16, 8.0);
    auto fl = standing_wave(ctx.sgrid, 0.01, 1, 1.0, 1.0);
    auto c = zero_coeff(ctx, 0.0);
    CHECK(sup_abs(assemble_F1(c, fl, ctx)) == 0.0);

    c.micro = micro_F1(fl, euler_poisson_rhs(fl, ctx.sgrid), ctx);
    for (int i = 0; i < ctx.sgrid.n_x; ++i) {
        const double x = ctx.sgrid.nodes[i];
        c.rho[i] = 0.3 * std::cos(x);
        c.u[i] = 0.2 * std::sin(x);
        c.theta[i] = -0.1 * std::cos(2.0 * x);
    }
    auto F1 = assemble_F1(c, fl, ctx);
    const std::size_t N = ctx.vgrid.size();
    for (int ix = 0; ix < ctx.sgrid.n_x; ++ix) {
        std::vector<double> f(F1.begin() + ix * N, F1.begin() + (ix + 1) * N);
        auto m = moments(f, ctx.vgrid);
        const double r0 = fl.rho[ix], u0 = fl.u[ix], th0 = fl.theta[ix];
        CHECK(m.rho == doctest::Approx(c.rho[ix]).scale(1.0).epsilon(1e-6));
        CHECK(m.momentum[0] - u0 * m.rho == doctest::Approx(r0 * c.u[ix]).scale(1.0).epsilon(1e-6));
        // int |v-u0|^2 F1 = rho0 theta1 + 3 theta0 rho1
        const double e_rel = m.energy - 2.0 * u0 * m.momentum[0] + u0 * u0 * m.rho;
        CHECK(e_rel == doctest::Approx(r0 * c.theta[ix] + 3.0 * th0 * c.rho[ix]).scale(1.0).epsilon(1e-6));
    }
}

TEST_CASE("truncated expansion: eps -> 0 limit, linearity in eps, positivity") {
    auto ctx = make_ctx(16, 12, 6.0);
    auto fl = standing_wave(ctx.sgrid, 0.01, 1, 1.0, 1.0);
    auto s = init_expansion(fl, ctx);
    std::vector<CoeffState> cs{s.c1};
    auto omega = local_maxwellian_field(fl, ctx);
    auto F0 = assemble_truncated(fl, cs, {1, 0.0}, ctx);
    for (std::size_t i = 0; i < omega.size(); ++i) CHECK(F0[i] == omega[i]);

    auto Fa = assemble_truncated(fl, cs, {1, 0.01}, ctx);
    auto Fb = assemble_truncated(fl, cs, {1, 0.1}, ctx);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double da = (Fa[i] - omega[i]) / 0.01, db = (Fb[i] - omega[i]) / 0.1;
        worst = std::max(worst, std::abs(da - db));
        scale = std::max(scale, std::abs(da));
    }
    CHECK(worst <= 1e-10 * std::max(scale, 1.0));
    for (double e : {0.02, 0.05, 0.1}) {
        auto F = assemble_truncated(fl, cs, {1, e}, ctx);
        double mn = 1.0;
        for (double x : F) mn = std::min(mn, x);
        CHECK(mn > 0.0);
    }
    CHECK_THROWS_AS(assemble_truncated(fl, cs, {2, 0.1}, ctx), PreconditionError);
}

TEST_CASE("first-order coefficients: zero stays zero over a constant background") {
    auto ctx = make_ctx(16, 12, 6.0);
    auto fl = flat(ctx);
    auto c = zero_coeff(ctx, 0.0);
    const double dt = 0.5 * cfl_limit(fl, ctx.sgrid);
    for (int n = 0; n < 100; ++n) c = step_coeff1(c, fl, 0.09, 0.72, dt, ctx);
    CHECK(sup_abs(c.rho) == 0.0);
    CHECK(sup_abs(c.u) == 0.0);
    CHECK(sup_abs(c.theta) == 0.0);
    CHECK_THROWS_AS(step_coeff1(c, fl, 0.09, 0.72, 10.0 * cfl_limit(fl, ctx.sgrid), ctx), NumericalError);
}

TEST_CASE("first-order coefficients and the F1 envelope grow at most linearly") {
    // standing-wave forcing is resonant on the periodic box, so the bound is linear in t
    auto ctx = make_ctx(16, 12, 6.0);
    auto s = init_expansion(standing_wave(ctx.sgrid, 0.01, 1, 1.0, 1.0), ctx);
    auto envelope = [&](const ExpansionState& st) {
        auto F1 = assemble_F1(st.c1, st.fluid, ctx);
        const std::size_t N = ctx.vgrid.size();
        double C = 0.0;
        for (int ix = 0; ix < ctx.sgrid.n_x; ++ix) {
            auto p = fluid_params(st.fluid, ix);
            for (std::size_t k = 0; k < N; ++k) {
                const auto& v = ctx.vgrid.nodes[k];
                const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                C = std::max(C, std::abs(F1[ix * N + k]) / ((1.0 + r * r * r) * maxwellian_at(p, v)));
            }
        }
        return C;
    };
    struct Row {
        double t, energy, env;
    };
    std::vector<Row> rows{{0.0, 0.0, envelope(s)}};
    const double dt = 0.5 * cfl_limit(s.fluid, ctx.sgrid);
    for (int n = 1; s.fluid.time < 6.0; ++n) {
        s = step_expansion(s, dt, ctx);
        if (n % 10 == 0)
            rows.push_back({s.fluid.time, std::sqrt(symmetrizer_energy(s.c1, s.fluid, ctx)), envelope(s)});
    }
    double Ce = 0.0, Cf = 0.0;
    for (const auto& r : rows)
        if (r.t <= 1.0) {
            Ce = std::max(Ce, r.energy / (1.0 + r.t));
            Cf = std::max(Cf, r.env / (1.0 + r.t));
        }
    for (const auto& r : rows) {
        CHECK(r.energy <= 2.0 * Ce * (1.0 + r.t));
        CHECK(r.env <= 2.0 * Cf * (1.0 + r.t));
    }
}

TEST_CASE("micro stress forcing is 4/3 of the closure stress forcing") {
    // the closure uses mu d_x u without the 1D compressive factor 4/3
    auto ctx = make_ctx(16, 12, 6.0);
    std::vector<double> rho(16), u(16);
    for (int i = 0; i < 16; ++i) {
        rho[i] = 1.0 + 0.01 * std::cos(ctx.sgrid.nodes[i]);
        u[i] = 0.01 * std::sin(ctx.sgrid.nodes[i]);
    }
    auto fl = make_fluid_state(ctx.sgrid, rho, u, 1.0, 1.0);
    auto m = micro_F1(fl, euler_poisson_rhs(fl, ctx.sgrid), ctx);
    auto fm = micro_forcing(fl, m, ctx);
    auto op = build_linearized(fluid_params(fl, 0), ctx.vgrid, ctx.coll);
    auto tc = transport_coefficients(op);
    auto fc = closure_forcing(fl, tc.mu, tc.kappa, ctx);
    CHECK(sup_abs(fc.f) > 0.0);
    CHECK(sup_abs(fm.f) > 0.0);
    double dot = 0.0;
    for (std::size_t i = 0; i < fm.f.size(); ++i) dot += fm.f[i] * fc.f[i];
    CHECK(dot > 0.0);
    const double ratio = sup_abs(fm.f) / sup_abs(fc.f);
    MESSAGE("stress forcing ratio micro/closure ", ratio);
    CHECK(ratio == doctest::Approx(4.0 / 3.0).epsilon(0.02));
}

TEST_CASE("source A: zero over a constant state, matches the direct defect") {
    auto ctx = make_ctx(16, 12, 6.0);
    auto flat_s = init_expansion(flat(ctx), ctx);
    CHECK(sup_abs(assemble_A(flat_s, {1, 0.05}, ctx)) == 0.0);

    auto s = init_expansion(standing_wave(ctx.sgrid, 0.01, 1, 1.0, 1.0), ctx);
    const double dt = 0.5 * cfl_limit(s.fluid, ctx.sgrid);
    for (int n = 0; n < 10; ++n) s = step_expansion(s, dt, ctx);
    const double eps = 0.05;
    auto A = assemble_A(s, {1, eps}, ctx);
    auto R = expansion_defect(s, {1, eps}, ctx);
    std::vector<double> d(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) d[i] = R[i] + eps * A[i];
    MESSAGE("defect ", l2_xv(R, ctx), " eps*A ", eps * l2_xv(A, ctx), " difference ", l2_xv(d, ctx));
    CHECK(l2_xv(d, ctx) <= 0.05 * l2_xv(R, ctx));
}

TEST_CASE("defect of the truncated expansion is first order in eps") {
    auto ctx = make_ctx(16, 12, 6.0);
    auto s = init_expansion(standing_wave(ctx.sgrid, 0.01, 1, 1.0, 1.0), ctx);
    const double dt = 0.5 * cfl_limit(s.fluid, ctx.sgrid);
    for (int n = 0; n < 10; ++n) s = step_expansion(s, dt, ctx);
    std::vector<double> le, lr;
    for (double e : {0.02, 0.04, 0.08}) {
        le.push_back(std::log(e));
        lr.push_back(std::log(l2_xv(expansion_defect(s, {1, e}, ctx), ctx)));
    }
    const double mx = (le[0] + le[1] + le[2]) / 3, my = (lr[0] + lr[1] + lr[2]) / 3;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 3; ++i) {
        sxy += (le[i] - mx) * (lr[i] - my);
        sxx += (le[i] - mx) * (le[i] - mx);
    }
    const double slope = sxy / sxx;
    MESSAGE("defect slope ", slope);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.2));

    const double eps[3] = {0.02, 0.04, 0.08};
    auto batch = expansion_defects(s, eps, ctx);
    for (int i = 0; i < 3; ++i) {
        auto one = expansion_defect(s, {1, eps[i]}, ctx);
        std::vector<double> d(one.size());
        for (std::size_t m = 0; m < d.size(); ++m) d[m] = batch[i][m] - one[m];
        CHECK(l2_xv(d, ctx) <= 1e-12 * l2_xv(one, ctx));
    }
}

TEST_CASE("derivative helpers") {
    auto ctx = make_ctx(16, 16, 8.0);
    const std::size_t N = ctx.vgrid.size();
    std::vector<double> f(16 * N), fx(16 * N), fv(16 * N);
    for (int ix = 0; ix < 16; ++ix)
        for (std::size_t k = 0; k < N; ++k) {
            const double x = ctx.sgrid.nodes[ix], v = ctx.vgrid.nodes[k][0];
            f[ix * N + k] = std::sin(x) * std::exp(-v * v / 8.0);
            fx[ix * N + k] = std::cos(x) * std::exp(-v * v / 8.0);
            fv[ix * N + k] = -0.25 * v * std::sin(x) * std::exp(-v * v / 8.0);
        }
    auto dx = dx_field(f, ctx.sgrid, N);
    auto dv = dv1(f, ctx.vgrid, 16);
    double ex = 0.0, ev = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        ex = std::max(ex, std::abs(dx[i] - fx[i]));
        ev = std::max(ev, std::abs(dv[i] - fv[i]));
    }
    CHECK(ex < 1e-12);
    CHECK(ev < 5e-3);
}
