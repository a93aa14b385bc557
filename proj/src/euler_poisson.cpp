#include "hilbert/euler_poisson.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "hilbert/error.hpp"

namespace hilbert {

namespace {

std::vector<double> axpy(const std::vector<double>& a, double s, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
}

} // namespace

std::vector<double> solve_poisson(std::span<const double> source, const SpatialGrid& grid) {
    return Spectral1D(grid.n_x, grid.length).solve_poisson(source);
}

FluidState make_fluid_state(const SpatialGrid& grid, std::vector<double> rho, std::vector<double> u, double K_eos,
                            double rho_bar, double time) {
    if (static_cast<int>(rho.size()) != grid.n_x || static_cast<int>(u.size()) != grid.n_x)
        throw PreconditionError("fluid state: field length does not match grid");
    FluidState s;
    s.time = time;
    s.K_eos = K_eos;
    s.rho_bar = rho_bar;
    s.rho = std::move(rho);
    s.u = std::move(u);
    s.theta.resize(s.rho.size());
    std::vector<double> src(s.rho.size());
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
        if (!(s.rho[i] > 0.0)) throw NumericalError("fluid density lost positivity at x index " + std::to_string(i));
        s.theta[i] = K_eos * std::pow(s.rho[i], 2.0 / 3.0);
        src[i] = s.rho[i] - rho_bar;
    }
    s.phi = solve_poisson(src, grid);
    return s;
}

FluidState standing_wave(const SpatialGrid& grid, double amplitude, int mode, double K_eos, double rho_bar) {
    std::vector<double> rho(grid.n_x), u(grid.n_x, 0.0);
    const double k = 2.0 * std::numbers::pi * mode / grid.length;
    for (int i = 0; i < grid.n_x; ++i) rho[i] = rho_bar + amplitude * std::cos(k * grid.nodes[i]);
    return make_fluid_state(grid, std::move(rho), std::move(u), K_eos, rho_bar);
}

FluidRhs euler_poisson_rhs(const FluidState& s, const SpatialGrid& grid) {
    Spectral1D sp(grid.n_x, grid.length);
    const std::size_t n = s.rho.size();
    std::vector<double> flux(n), press(n), src(n);
    for (std::size_t i = 0; i < n; ++i) {
        flux[i] = s.rho[i] * s.u[i];
        press[i] = s.K_eos * std::pow(s.rho[i], kGamma);
        src[i] = s.rho[i] - s.rho_bar;
    }
    auto phi = sp.solve_poisson(src);
    auto dphi = sp.derivative(phi);
    auto dflux = sp.derivative(flux);
    auto dpress = sp.derivative(press);
    auto du = sp.derivative(s.u);
    FluidRhs r;
    r.rho_t.resize(n);
    r.u_t.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.rho_t[i] = -dflux[i];
        r.u_t[i] = -s.u[i] * du[i] - dpress[i] / s.rho[i] + dphi[i];
    }
    r.rho_t = sp.dealias(r.rho_t);
    r.u_t = sp.dealias(r.u_t);
    return r;
}

double cfl_limit(const FluidState& s, const SpatialGrid& grid) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.rho.size(); ++i)
        m = std::max(m, std::abs(s.u[i]) + std::sqrt(kGamma * s.theta[i]) + 1.0);
    return 0.5 * grid.dx / m;
}

FluidState step_euler_poisson(const FluidState& s, double dt, const SpatialGrid& grid) {
    if (!(dt > 0.0)) throw PreconditionError("step_euler_poisson: dt must be positive");
    if (dt > cfl_limit(s, grid) * (1.0 + 1e-12))
        throw NumericalError("step_euler_poisson: CFL violated (dt=" + std::to_string(dt) +
                             ", limit=" + std::to_string(cfl_limit(s, grid)) + ")");
    auto stage = [&](const std::vector<double>& rho, const std::vector<double>& u) {
        FluidState t;
        t.rho = rho;
        t.u = u;
        t.K_eos = s.K_eos;
        t.rho_bar = s.rho_bar;
        for (std::size_t i = 0; i < rho.size(); ++i)
            if (!(rho[i] > 0.0))
                throw NumericalError("Euler-Poisson density lost positivity at t=" + std::to_string(s.time));
        return euler_poisson_rhs(t, grid);
    };
    auto k1 = stage(s.rho, s.u);
    auto k2 = stage(axpy(s.rho, dt / 2, k1.rho_t), axpy(s.u, dt / 2, k1.u_t));
    auto k3 = stage(axpy(s.rho, dt / 2, k2.rho_t), axpy(s.u, dt / 2, k2.u_t));
    auto k4 = stage(axpy(s.rho, dt, k3.rho_t), axpy(s.u, dt, k3.u_t));
    const std::size_t n = s.rho.size();
    std::vector<double> rho(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
        rho[i] = s.rho[i] + dt / 6.0 * (k1.rho_t[i] + 2.0 * k2.rho_t[i] + 2.0 * k3.rho_t[i] + k4.rho_t[i]);
        u[i] = s.u[i] + dt / 6.0 * (k1.u_t[i] + 2.0 * k2.u_t[i] + 2.0 * k3.u_t[i] + k4.u_t[i]);
    }
    return make_fluid_state(grid, std::move(rho), std::move(u), s.K_eos, s.rho_bar, s.time + dt);
}

double plasma_frequency(double rho_bar, double K_eos, double k) {
    return std::sqrt(rho_bar + kGamma * K_eos * std::pow(rho_bar, 2.0 / 3.0) * k * k);
}

double zero_crossing_frequency(std::span<const double> t, std::span<const double> y) {
    std::vector<double> cross;
    for (std::size_t i = 1; i < y.size(); ++i) {
        if ((y[i - 1] < 0.0) != (y[i] < 0.0)) {
            double f = y[i - 1] / (y[i - 1] - y[i]);
            cross.push_back(t[i - 1] + f * (t[i] - t[i - 1]));
        }
    }
    if (cross.size() < 2) throw NumericalError("zero_crossing_frequency: fewer than two crossings");
    double half_period = (cross.back() - cross.front()) / static_cast<double>(cross.size() - 1);
    return std::numbers::pi / half_period;
}

double cosine_mode(std::span<const double> f, const SpatialGrid& grid, int mode) {
    const double k = 2.0 * std::numbers::pi * mode / grid.length;
    std::vector<double> t(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) t[i] = f[i] * std::cos(k * grid.nodes[i]);
    return 2.0 * integrate_x(t, grid) / grid.length;
}

DecaySample decay_sample(const FluidState& s, const SpatialGrid& grid) {
    DecaySample d;
    d.t = s.time;
    auto dphi = Spectral1D(grid.n_x, grid.length).derivative(s.phi);
    for (std::size_t i = 0; i < s.rho.size(); ++i) {
        d.sup_drho = std::max(d.sup_drho, std::abs(s.rho[i] - s.rho_bar));
        d.sup_u = std::max(d.sup_u, std::abs(s.u[i]));
        d.sup_dphi = std::max(d.sup_dphi, std::abs(dphi[i]));
    }
    return d;
}

DecayReport measure_decay(const std::vector<FluidState>& history, const SpatialGrid& grid) {
    if (history.empty()) throw PreconditionError("measure_decay: empty history");
    DecayReport r;
    for (const auto& s : history) r.samples.push_back(decay_sample(s, grid));
    auto total = [](const DecaySample& d) { return d.sup_drho + d.sup_u + d.sup_dphi; };
    const double s0 = total(r.samples.front());
    double mx = 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (const auto& d : r.samples) {
        double v = total(d);
        mx = std::max(mx, v);
        if (v > 0.0) {
            double x = std::log1p(d.t), y = std::log(v);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++m;
        }
    }
    r.growth_ratio = s0 > 0.0 ? mx / s0 : 0.0;
    r.bounded = s0 > 0.0 ? mx <= 2.0 * s0 : mx == 0.0;
    double den = m * sxx - sx * sx;
    r.fitted_exponent = (m >= 2 && den > 0.0) ? -(m * sxy - sx * sy) / den : 0.0;
    return r;
}

double neutrality_defect(const FluidState& s, const SpatialGrid& grid) {
    std::vector<double> d(s.rho.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = s.rho[i] - s.rho_bar;
    return integrate_x(d, grid);
}

void write_fluid_snapshot(const std::string& path, const FluidState& s, const SpatialGrid& grid) {
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open " + path + " for writing");
    std::fprintf(f, "t,x,rho,u,theta,phi\n");
    for (std::size_t i = 0; i < s.rho.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.time, grid.nodes[i], s.rho[i], s.u[i], s.theta[i],
                     s.phi[i]);
    std::fclose(f);
}

} // namespace hilbert
