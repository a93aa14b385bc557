#include "hilbert/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hilbert/error.hpp"
#include "hilbert/parallel.hpp"

namespace hilbert {

namespace {

double lagrange_cubic(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    const int n = static_cast<int>(xs.size());
    if (n == 0) throw PreconditionError("transport table is empty");
    if (n < 4) {
        // linear fallback
        if (n == 1) return ys[0];
        int i = std::clamp(static_cast<int>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1, 0, n - 2);
        double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + t * (ys[i + 1] - ys[i]);
    }
    int i = static_cast<int>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 2;
    i = std::clamp(i, 0, n - 4);
    double s = 0.0;
    for (int a = i; a < i + 4; ++a) {
        double l = 1.0;
        for (int b = i; b < i + 4; ++b)
            if (b != a) l *= (x - xs[b]) / (xs[a] - xs[b]);
        s += l * ys[a];
    }
    return s;
}

struct Fields {
    std::vector<double> rho0, u0, rho1, u1, theta1;
};

Fields axpy(const Fields& a, double s, const Fields& b) {
    auto f = [&](const std::vector<double>& x, const std::vector<double>& y) {
        std::vector<double> r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + s * y[i];
        return r;
    };
    return Fields{f(a.rho0, b.rho0), f(a.u0, b.u0), f(a.rho1, b.rho1), f(a.u1, b.u1), f(a.theta1, b.theta1)};
}

FluidState bare_fluid(const std::vector<double>& rho, const std::vector<double>& u, const FluidState& ref,
                      const SpatialGrid& sgrid, double time) {
    return make_fluid_state(sgrid, rho, u, ref.K_eos, ref.rho_bar, time);
}

// Right sides of the first-order system for given background and forcing.
void coeff_rhs(const FluidState& fl, const std::vector<double>& rho1, const std::vector<double>& u1,
               const std::vector<double>& theta1, const CoeffForcing& fc, const Spectral1D& sp,
               std::vector<double>& rho1_t, std::vector<double>& u1_t, std::vector<double>& theta1_t) {
    const std::size_t n = rho1.size();
    std::vector<double> flux(n), pth(n), press(n);
    for (std::size_t i = 0; i < n; ++i) {
        flux[i] = fl.rho[i] * u1[i] + rho1[i] * fl.u[i];
        pth[i] = (fl.rho[i] * theta1[i] + 3.0 * fl.theta[i] * rho1[i]) / 3.0;
        press[i] = fl.rho[i] * fl.theta[i];
    }
    auto phi1 = sp.solve_poisson(rho1);
    auto dphi1 = sp.derivative(phi1);
    auto dflux = sp.derivative(flux);
    auto dpth = sp.derivative(pth);
    auto dpress = sp.derivative(press);
    auto du0 = sp.derivative(fl.u);
    auto du1 = sp.derivative(u1);
    auto dth0 = sp.derivative(fl.theta);
    auto dth1 = sp.derivative(theta1);
    rho1_t.resize(n);
    u1_t.resize(n);
    theta1_t.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r0 = fl.rho[i];
        rho1_t[i] = -dflux[i];
        u1_t[i] = -u1[i] * du0[i] - fl.u[i] * du1[i] + dphi1[i] +
                  ((rho1[i] / r0) * dpress[i] - dpth[i] + fc.f[i]) / r0;
        theta1_t[i] = -(2.0 / 3.0) * (theta1[i] * du0[i] + 3.0 * fl.theta[i] * du1[i]) - fl.u[i] * dth1[i] -
                      3.0 * u1[i] * dth0[i] + fc.g[i] / r0;
    }
    rho1_t = sp.dealias(rho1_t);
    u1_t = sp.dealias(u1_t);
    theta1_t = sp.dealias(theta1_t);
}

CoeffForcing forcing_for(const FluidState& fl, const ExpansionContext& ctx) {
    if (ctx.forcing == ForcingMode::closure) return closure_forcing(fl, ctx);
    auto rhs = euler_poisson_rhs(fl, ctx.sgrid);
    auto micro = micro_F1(fl, rhs, ctx);
    return micro_forcing(fl, micro, ctx);
}

Fields full_rhs(const Fields& y, const FluidState& ref, const ExpansionContext& ctx, const Spectral1D& sp) {
    FluidState fl = bare_fluid(y.rho0, y.u0, ref, ctx.sgrid, ref.time);
    auto frhs = euler_poisson_rhs(fl, ctx.sgrid);
    auto fc = forcing_for(fl, ctx);
    Fields d;
    d.rho0 = frhs.rho_t;
    d.u0 = frhs.u_t;
    coeff_rhs(fl, y.rho1, y.u1, y.theta1, fc, sp, d.rho1, d.u1, d.theta1);
    return d;
}

} // namespace

double TransportTable::mu_at(double t) const { return lagrange_cubic(theta, mu, t); }
double TransportTable::kappa_at(double t) const { return lagrange_cubic(theta, kappa, t); }

TransportTable build_transport_table(double theta_min, double theta_max, int n_per_axis, double v_scale,
                                     const CollisionConfig& cfg, int count) {
    if (!(theta_min > 0.0) || theta_max < theta_min) throw PreconditionError("transport table: bad temperature range");
    if (count < 1) throw PreconditionError("transport table: need at least one node");
    if (theta_max - theta_min < 1e-3 * theta_min) {
        theta_min *= 0.99;
        theta_max *= 1.01;
    }
    TransportTable t;
    for (int i = 0; i < count; ++i) {
        double th = count == 1 ? theta_min : theta_min + (theta_max - theta_min) * i / (count - 1);
        auto grid = build_velocity_grid(n_per_axis, v_scale * std::sqrt(th));
        auto tc = transport_coefficients(MaxwellianParams{1.0, {0.0, 0.0, 0.0}, th}, grid, cfg);
        t.theta.push_back(th);
        t.mu.push_back(tc.mu);
        t.kappa.push_back(tc.kappa);
    }
    return t;
}

MaxwellianParams fluid_params(const FluidState& s, int ix) {
    return MaxwellianParams{s.rho[ix], {s.u[ix], 0.0, 0.0}, s.theta[ix]};
}

std::vector<double> local_maxwellian_field(const FluidState& fluid, const ExpansionContext& ctx) {
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    std::vector<double> out(static_cast<std::size_t>(nx) * N);
    ExceptionSlot slot;
#pragma omp parallel for
    for (int ix = 0; ix < nx; ++ix) {
        slot.run([&] {
            auto p = fluid_params(fluid, ix);
            for (std::size_t k = 0; k < N; ++k) out[ix * N + k] = maxwellian_at(p, ctx.vgrid.nodes[k]);
        });
    }
    slot.rethrow();
    return out;
}

std::vector<double> micro_source(const FluidState& fl, const FluidRhs& rhs, const ExpansionContext& ctx) {
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    Spectral1D sp(nx, ctx.sgrid.length);
    auto rho_x = sp.derivative(fl.rho);
    auto u_x = sp.derivative(fl.u);
    auto phi_x = sp.derivative(fl.phi);
    std::vector<double> S(static_cast<std::size_t>(nx) * N);
    ExceptionSlot slot;
#pragma omp parallel for
    for (int ix = 0; ix < nx; ++ix) {
        slot.run([&] {
            const double r = fl.rho[ix], u = fl.u[ix], th = fl.theta[ix];
            const double rt = rhs.rho_t[ix], ut = rhs.u_t[ix];
            const double tht = (2.0 / 3.0) * th * rt / r;
            const double thx = (2.0 / 3.0) * th * rho_x[ix] / r;
            auto p = fluid_params(fl, ix);
            for (std::size_t k = 0; k < N; ++k) {
                const Vec3& v = ctx.vgrid.nodes[k];
                const double c1 = v[0] - u;
                const double cc = c1 * c1 + v[1] * v[1] + v[2] * v[2];
                const double dlog = (rt + v[0] * rho_x[ix]) / r + c1 * (ut + v[0] * u_x[ix]) / th +
                                    (cc / (2.0 * th * th) - 1.5 / th) * (tht + v[0] * thx) - phi_x[ix] * c1 / th;
                S[ix * N + k] = -std::sqrt(maxwellian_at(p, v)) * dlog;
            }
        });
    }
    slot.rethrow();
    return S;
}

std::vector<double> micro_F1(const FluidState& fl, const FluidRhs& rhs, const ExpansionContext& ctx) {
    auto S = micro_source(fl, rhs, ctx);
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    std::vector<double> out(S.size());
    const bool nested = ctx.coll.backend == Backend::full_hard_sphere;
    ExceptionSlot slot;
#pragma omp parallel for if (!nested)
    for (int ix = 0; ix < nx; ++ix) {
        slot.run([&] {
            auto op = build_linearized(fluid_params(fl, ix), ctx.vgrid, ctx.coll);
            auto g = invert_L(op, std::span<const double>(S).subspan(ix * N, N));
            std::copy(g.begin(), g.end(), out.begin() + static_cast<std::ptrdiff_t>(ix * N));
        });
    }
    slot.rethrow();
    return out;
}

CoeffState zero_coeff(const ExpansionContext& ctx, double time) {
    CoeffState c;
    c.time = time;
    const std::size_t nx = ctx.sgrid.n_x;
    c.rho.assign(nx, 0.0);
    c.u.assign(nx, 0.0);
    c.theta.assign(nx, 0.0);
    c.phi.assign(nx, 0.0);
    c.micro.assign(nx * ctx.vgrid.size(), 0.0);
    return c;
}

CoeffForcing closure_forcing(const FluidState& fl, double mu, double kappa, const ExpansionContext& ctx) {
    Spectral1D sp(ctx.sgrid.n_x, ctx.sgrid.length);
    auto ux = sp.derivative(fl.u);
    auto thx = sp.derivative(fl.theta);
    CoeffForcing fc;
    std::vector<double> a(ux.size()), b(ux.size());
    for (std::size_t i = 0; i < ux.size(); ++i) {
        a[i] = mu * ux[i];
        b[i] = kappa * thx[i];
    }
    fc.f = sp.derivative(a);
    fc.g = sp.derivative(b);
    for (std::size_t i = 0; i < ux.size(); ++i) fc.g[i] += 2.0 * mu * ux[i] * ux[i];
    return fc;
}

CoeffForcing closure_forcing(const FluidState& fl, const ExpansionContext& ctx) {
    Spectral1D sp(ctx.sgrid.n_x, ctx.sgrid.length);
    auto ux = sp.derivative(fl.u);
    auto thx = sp.derivative(fl.theta);
    const std::size_t n = ux.size();
    std::vector<double> a(n), b(n), mu(n);
    for (std::size_t i = 0; i < n; ++i) {
        mu[i] = ctx.transport.mu_at(fl.theta[i]);
        a[i] = mu[i] * ux[i];
        b[i] = ctx.transport.kappa_at(fl.theta[i]) * thx[i];
    }
    CoeffForcing fc;
    fc.f = sp.derivative(a);
    fc.g = sp.derivative(b);
    for (std::size_t i = 0; i < n; ++i) fc.g[i] += 2.0 * mu[i] * ux[i] * ux[i];
    return fc;
}

CoeffForcing micro_forcing(const FluidState& fl, std::span<const double> micro, const ExpansionContext& ctx) {
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    std::vector<double> M2(nx), M3(nx);
    ExceptionSlot slot;
#pragma omp parallel for
    for (int ix = 0; ix < nx; ++ix) {
        slot.run([&] {
            auto p = fluid_params(fl, ix);
            std::vector<double> a(N), b(N);
            for (std::size_t k = 0; k < N; ++k) {
                const Vec3& v = ctx.vgrid.nodes[k];
                const double c1 = v[0] - p.u[0];
                const double cc = c1 * c1 + v[1] * v[1] + v[2] * v[2];
                const double w = std::sqrt(maxwellian_at(p, v)) * micro[ix * N + k];
                a[k] = (c1 * c1 - cc / 3.0) * w;
                b[k] = c1 * (cc - 5.0 * p.theta) * w;
            }
            M2[ix] = integrate_v(a, ctx.vgrid);
            M3[ix] = integrate_v(b, ctx.vgrid);
        });
    }
    slot.rethrow();
    Spectral1D sp(nx, ctx.sgrid.length);
    auto dM2 = sp.derivative(M2);
    auto dM3 = sp.derivative(M3);
    auto ux = sp.derivative(fl.u);
    CoeffForcing fc;
    fc.f.resize(nx);
    fc.g.resize(nx);
    for (int i = 0; i < nx; ++i) {
        fc.f[i] = -dM2[i];
        fc.g[i] = -dM3[i] - 2.0 * ux[i] * M2[i];
    }
    return fc;
}

CoeffState step_coeff1(const CoeffState& c, const FluidState& fl, double mu, double kappa, double dt,
                       const ExpansionContext& ctx) {
    const double lim = cfl_limit(fl, ctx.sgrid);
    if (std::abs(dt) > lim * (1.0 + 1e-12))
        throw NumericalError("step_coeff1: CFL violated (dt=" + std::to_string(dt) + ", limit=" + std::to_string(lim) +
                             ")");
    Spectral1D sp(ctx.sgrid.n_x, ctx.sgrid.length);
    auto fc = closure_forcing(fl, mu, kappa, ctx);
    using V = std::vector<double>;
    auto rhs = [&](const V& r, const V& u, const V& t, V& dr, V& du, V& dt_) {
        coeff_rhs(fl, r, u, t, fc, sp, dr, du, dt_);
    };
    auto add = [](const V& a, double s, const V& b) {
        V r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
        return r;
    };
    V r1, u1, t1, r2, u2, t2, r3, u3, t3, r4, u4, t4;
    rhs(c.rho, c.u, c.theta, r1, u1, t1);
    rhs(add(c.rho, dt / 2, r1), add(c.u, dt / 2, u1), add(c.theta, dt / 2, t1), r2, u2, t2);
    rhs(add(c.rho, dt / 2, r2), add(c.u, dt / 2, u2), add(c.theta, dt / 2, t2), r3, u3, t3);
    rhs(add(c.rho, dt, r3), add(c.u, dt, u3), add(c.theta, dt, t3), r4, u4, t4);
    CoeffState out = c;
    out.time = c.time + dt;
    for (std::size_t i = 0; i < c.rho.size(); ++i) {
        out.rho[i] += dt / 6.0 * (r1[i] + 2.0 * r2[i] + 2.0 * r3[i] + r4[i]);
        out.u[i] += dt / 6.0 * (u1[i] + 2.0 * u2[i] + 2.0 * u3[i] + u4[i]);
        out.theta[i] += dt / 6.0 * (t1[i] + 2.0 * t2[i] + 2.0 * t3[i] + t4[i]);
    }
    out.phi = sp.solve_poisson(out.rho);
    return out;
}

ExpansionState init_expansion(const FluidState& fluid, const ExpansionContext& ctx) {
    ExpansionState s;
    s.fluid = fluid;
    s.c1 = zero_coeff(ctx, fluid.time);
    s.c1.micro = micro_F1(fluid, euler_poisson_rhs(fluid, ctx.sgrid), ctx);
    return s;
}

ExpansionState step_expansion(const ExpansionState& s, double dt, const ExpansionContext& ctx) {
    const double lim = cfl_limit(s.fluid, ctx.sgrid);
    if (std::abs(dt) > lim * (1.0 + 1e-12))
        throw NumericalError("step_expansion: CFL violated (dt=" + std::to_string(dt) + ", limit=" +
                             std::to_string(lim) + ")");
    Spectral1D sp(ctx.sgrid.n_x, ctx.sgrid.length);
    Fields y{s.fluid.rho, s.fluid.u, s.c1.rho, s.c1.u, s.c1.theta};
    auto k1 = full_rhs(y, s.fluid, ctx, sp);
    auto k2 = full_rhs(axpy(y, dt / 2, k1), s.fluid, ctx, sp);
    auto k3 = full_rhs(axpy(y, dt / 2, k2), s.fluid, ctx, sp);
    auto k4 = full_rhs(axpy(y, dt, k3), s.fluid, ctx, sp);
    Fields r = y;
    auto upd = [&](std::vector<double>& x, const std::vector<double>& a, const std::vector<double>& b,
                   const std::vector<double>& c, const std::vector<double>& d) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
    };
    upd(r.rho0, k1.rho0, k2.rho0, k3.rho0, k4.rho0);
    upd(r.u0, k1.u0, k2.u0, k3.u0, k4.u0);
    upd(r.rho1, k1.rho1, k2.rho1, k3.rho1, k4.rho1);
    upd(r.u1, k1.u1, k2.u1, k3.u1, k4.u1);
    upd(r.theta1, k1.theta1, k2.theta1, k3.theta1, k4.theta1);

    ExpansionState out;
    out.fluid = make_fluid_state(ctx.sgrid, r.rho0, r.u0, s.fluid.K_eos, s.fluid.rho_bar, s.fluid.time + dt);
    out.c1.order = 1;
    out.c1.time = out.fluid.time;
    out.c1.rho = r.rho1;
    out.c1.u = r.u1;
    out.c1.theta = r.theta1;
    out.c1.phi = sp.solve_poisson(out.c1.rho);
    out.c1.micro = micro_F1(out.fluid, euler_poisson_rhs(out.fluid, ctx.sgrid), ctx);
    return out;
}

std::vector<double> assemble_F1(const CoeffState& c, const FluidState& fl, const ExpansionContext& ctx) {
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    if (c.micro.size() != static_cast<std::size_t>(nx) * N) throw PreconditionError("assemble_F1: micro size mismatch");
    std::vector<double> F(static_cast<std::size_t>(nx) * N);
    ExceptionSlot slot;
#pragma omp parallel for
    for (int ix = 0; ix < nx; ++ix) {
        slot.run([&] {
            auto p = fluid_params(fl, ix);
            const double r0 = p.rho, th = p.theta;
            for (std::size_t k = 0; k < N; ++k) {
                const Vec3& v = ctx.vgrid.nodes[k];
                const double c1 = v[0] - p.u[0];
                const double cc = c1 * c1 + v[1] * v[1] + v[2] * v[2];
                const double w = maxwellian_at(p, v);
                const double macro = c.rho[ix] / r0 + c.u[ix] * c1 / th + c.theta[ix] / (6.0 * th) * (cc / th - 3.0);
                F[ix * N + k] = w * macro + std::sqrt(w) * c.micro[ix * N + k];
            }
        });
    }
    slot.rethrow();
    return F;
}

std::vector<double> assemble_truncated(const FluidState& fluid, const std::vector<CoeffState>& coeffs,
                                       const ExpansionTruncation& tr, const ExpansionContext& ctx) {
    if (tr.k_trunc < 1) throw PreconditionError("assemble_truncated: k_trunc must be at least 1");
    if (static_cast<int>(coeffs.size()) < tr.k_trunc)
        throw PreconditionError("assemble_truncated: need " + std::to_string(tr.k_trunc) + " coefficients");
    auto F = local_maxwellian_field(fluid, ctx);
    double e = 1.0;
    for (int i = 0; i < tr.k_trunc; ++i) {
        if (coeffs[i].order != i + 1) throw PreconditionError("assemble_truncated: coefficients out of order");
        if (coeffs[i].order > 1) throw PreconditionError("assemble_truncated: only the first coefficient is available");
        e *= tr.epsilon;
        auto Fi = assemble_F1(coeffs[i], fluid, ctx);
        for (std::size_t k = 0; k < F.size(); ++k) F[k] += e * Fi[k];
    }
    return F;
}

std::pair<double, double> growth_factors(double epsilon, double t, int k) {
    if (!(epsilon > 0.0) || t < 0.0 || k < 1) throw PreconditionError("growth_factors: need eps > 0, t >= 0, k >= 1");
    const int top = 2 * k - 1;
    const double q = epsilon * (1.0 + t);
    double s = 0.0, term = 1.0;
    for (int i = 1; i <= top; ++i) {
        s += term;
        term *= q;
    }
    double I1 = s + s * s;
    double I2 = 0.0;
    for (int i = 1; i <= top; ++i)
        for (int j = 1; j <= top; ++j)
            if (i + j >= 2 * k) I2 += std::pow(epsilon, i + j - 2 * k) * std::pow(1.0 + t, i + j - 2);
    return {I1, I2};
}

std::vector<double> dv1(std::span<const double> f, const VelocityGrid& vg, int n_x) {
    const int n = vg.n_per_axis;
    const std::size_t N = vg.size();
    const std::size_t stride = static_cast<std::size_t>(n) * n;
    std::vector<double> out(f.size());
    const double inv = 1.0 / (12.0 * vg.h);
    ExceptionSlot slot;
#pragma omp parallel for
    for (int ix = 0; ix < n_x; ++ix) {
        slot.run([&] {
            const double* g = f.data() + ix * N;
            double* o = out.data() + ix * N;
            for (std::size_t jk = 0; jk < stride; ++jk) {
                auto at = [&](int i) { return (i < 0 || i >= n) ? 0.0 : g[i * stride + jk]; };
                for (int i = 0; i < n; ++i)
                    o[i * stride + jk] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) * inv;
            }
        });
    }
    slot.rethrow();
    return out;
}

std::vector<double> dx_field(std::span<const double> f, const SpatialGrid& sg, std::size_t N) {
    const int nx = sg.n_x;
    Spectral1D sp(nx, sg.length);
    std::vector<double> out(f.size());
#pragma omp parallel for
    for (std::size_t k = 0; k < N; ++k) {
        std::vector<double> col(nx);
        for (int ix = 0; ix < nx; ++ix) col[ix] = f[ix * N + k];
        auto d = sp.derivative(col);
        for (int ix = 0; ix < nx; ++ix) out[ix * N + k] = d[ix];
    }
    return out;
}

double l2_xv(std::span<const double> field, const ExpansionContext& ctx) {
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    std::vector<double> per_x(nx);
    for (int ix = 0; ix < nx; ++ix) {
        std::vector<double> sq(N);
        for (std::size_t k = 0; k < N; ++k) sq[k] = field[ix * N + k] * field[ix * N + k];
        per_x[ix] = integrate_v(sq, ctx.vgrid);
    }
    return std::sqrt(integrate_x(per_x, ctx.sgrid));
}

std::vector<double> assemble_A(const ExpansionState& s, const ExpansionTruncation& tr, const ExpansionContext& ctx,
                               double dt_fd) {
    if (tr.k_trunc != 1) throw PreconditionError("assemble_A: implemented for k_trunc = 1");
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    const double eps = tr.epsilon;
    auto sp_ = step_expansion(s, dt_fd, ctx);
    auto sm_ = step_expansion(s, -dt_fd, ctx);
    auto F1 = assemble_F1(s.c1, s.fluid, ctx);
    auto F1p = assemble_F1(sp_.c1, sp_.fluid, ctx);
    auto F1m = assemble_F1(sm_.c1, sm_.fluid, ctx);
    auto omega = local_maxwellian_field(s.fluid, ctx);
    auto dvF1 = dv1(F1, ctx.vgrid, nx);
    auto dxF1 = dx_field(F1, ctx.sgrid, N);
    Spectral1D sp(nx, ctx.sgrid.length);
    auto phi0x = sp.derivative(s.fluid.phi);
    auto phi1x = sp.derivative(s.c1.phi);
    std::vector<double> A(F1.size());
    const bool full = ctx.coll.backend == Backend::full_hard_sphere;
    ExceptionSlot slot;
#pragma omp parallel for if (!full)
    for (int ix = 0; ix < nx; ++ix) {
        slot.run([&] {
            std::span<const double> w(omega.data() + ix * N, N), f1(F1.data() + ix * N, N);
            auto Q2 = quadratic_part(w, f1, ctx.vgrid, ctx.coll);
            const double th = s.fluid.theta[ix], u = s.fluid.u[ix];
            for (std::size_t k = 0; k < N; ++k) {
                const std::size_t m = ix * N + k;
                const double v1 = ctx.vgrid.nodes[k][0];
                const double dvw = -(v1 - u) / th * omega[m];
                const double dt = (F1p[m] - F1m[m]) / (2.0 * dt_fd);
                A[m] = Q2[k] - (phi0x[ix] * dvF1[m] + phi1x[ix] * dvw) - eps * phi1x[ix] * dvF1[m] - dt -
                       v1 * dxF1[m];
            }
        });
    }
    slot.rethrow();
    return A;
}

std::vector<std::vector<double>> expansion_defects(const ExpansionState& s, std::span<const double> eps_list,
                                                  const ExpansionContext& ctx, double dt_fd) {
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    // everything but the collision term is affine in eps, so the stepping is shared
    auto sp_ = step_expansion(s, dt_fd, ctx);
    auto sm_ = step_expansion(s, -dt_fd, ctx);
    auto omega = local_maxwellian_field(s.fluid, ctx);
    auto F1 = assemble_F1(s.c1, s.fluid, ctx);
    auto wp = local_maxwellian_field(sp_.fluid, ctx), wm = local_maxwellian_field(sm_.fluid, ctx);
    auto F1p = assemble_F1(sp_.c1, sp_.fluid, ctx), F1m = assemble_F1(sm_.c1, sm_.fluid, ctx);
    auto dvF1 = dv1(F1, ctx.vgrid, nx);
    auto dxw = dx_field(omega, ctx.sgrid, N), dxF1 = dx_field(F1, ctx.sgrid, N);
    Spectral1D sp(nx, ctx.sgrid.length);
    auto phi0x = sp.derivative(s.fluid.phi);
    auto phi1x = sp.derivative(s.c1.phi);
    const bool full = ctx.coll.backend == Backend::full_hard_sphere;
    std::vector<std::vector<double>> out;
    for (double eps : eps_list) {
        if (!(eps > 0.0)) throw PreconditionError("expansion_defect: epsilon must be positive");
        std::vector<double> R(omega.size());
        ExceptionSlot slot;
#pragma omp parallel for if (!full)
        for (int ix = 0; ix < nx; ++ix) {
            slot.run([&] {
                std::vector<double> F(N);
                for (std::size_t k = 0; k < N; ++k) F[k] = omega[ix * N + k] + eps * F1[ix * N + k];
                auto Q = collision_Q(F, ctx.vgrid, ctx.coll);
                const double th = s.fluid.theta[ix], u = s.fluid.u[ix];
                const double phix = phi0x[ix] + eps * phi1x[ix];
                for (std::size_t k = 0; k < N; ++k) {
                    const std::size_t m = ix * N + k;
                    const double v1 = ctx.vgrid.nodes[k][0];
                    const double dt = (wp[m] - wm[m] + eps * (F1p[m] - F1m[m])) / (2.0 * dt_fd);
                    const double dvF = -(v1 - u) / th * omega[m] + eps * dvF1[m];
                    R[m] = dt + v1 * (dxw[m] + eps * dxF1[m]) + phix * dvF - Q[k] / eps;
                }
            });
        }
        slot.rethrow();
        out.push_back(std::move(R));
    }
    return out;
}

std::vector<double> expansion_defect(const ExpansionState& s, const ExpansionTruncation& tr,
                                     const ExpansionContext& ctx, double dt_fd) {
    if (tr.k_trunc != 1) throw PreconditionError("expansion_defect: implemented for k_trunc = 1");
    const double e[1] = {tr.epsilon};
    return std::move(expansion_defects(s, e, ctx, dt_fd).front());
}

double symmetrizer_energy(const CoeffState& c, const FluidState& fl, const ExpansionContext& ctx) {
    const int nx = ctx.sgrid.n_x;
    Spectral1D sp(nx, ctx.sgrid.length);
    auto phix = sp.derivative(c.phi);
    const double th_bar = fl.K_eos * std::pow(fl.rho_bar, 2.0 / 3.0);
    std::vector<double> e(nx);
    for (int i = 0; i < nx; ++i) {
        const double r = fl.rho[i], th = fl.theta[i];
        e[i] = th * th * c.rho[i] * c.rho[i] + r * r * th * c.u[i] * c.u[i] + r * r * c.theta[i] * c.theta[i] / 6.0 +
               fl.rho_bar * th_bar * phix[i] * phix[i];
    }
    return integrate_x(e, ctx.sgrid);
}

} // namespace hilbert
