#include "hilbert/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "hilbert/advection.hpp"
#include "hilbert/error.hpp"
#include "hilbert/spectral.hpp"

namespace hilbert {

namespace {

void check_size(std::span<const double> F, const KineticContext& ctx, const char* what) {
    if (F.size() != static_cast<std::size_t>(ctx.sgrid.n_x) * ctx.vgrid.size())
        throw PreconditionError(std::string(what) + ": field size does not match the grids");
}

void check_positive(std::span<const double> F, const char* what) {
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (double x : F) {
        if (!std::isfinite(x)) throw NumericalError(std::string(what) + ": non-finite value in F");
        mx = std::max(mx, x);
        mn = std::min(mn, x);
    }
    if (mn < -1e-12 * mx)
        throw NumericalError(std::string(what) + ": positivity lost (min F = " + std::to_string(mn) +
                             ", max F = " + std::to_string(mx) + ")");
}

std::vector<double> field_phi(std::span<const double> F, double background, const KineticContext& ctx) {
    auto rho = kinetic_density(F, ctx);
    for (double& r : rho) r -= background;
    return Spectral1D(ctx.sgrid.n_x, ctx.sgrid.length).solve_poisson(rho);
}

void transport(std::vector<double>& F, double tau, double background, const KineticContext& ctx) {
    shift_x(F, ctx.sgrid, ctx.vgrid, tau / 2);
    auto phi = field_phi(F, background, ctx);
    auto E = Spectral1D(ctx.sgrid.n_x, ctx.sgrid.length).derivative(phi);
    shift_v1(F, E, tau, ctx.vgrid, ctx.sgrid.n_x);
    shift_x(F, ctx.sgrid, ctx.vgrid, tau / 2);
}

double sup_l2(std::span<const double> g, const KineticContext& ctx, std::span<const double> xweight = {}) {
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    std::vector<double> per_x(nx), sq(N);
    for (int ix = 0; ix < nx; ++ix) {
        for (std::size_t k = 0; k < N; ++k) sq[k] = g[ix * N + k] * g[ix * N + k];
        per_x[ix] = integrate_v(sq, ctx.vgrid) * (xweight.empty() ? 1.0 : xweight[ix]);
    }
    return std::sqrt(integrate_x(per_x, ctx.sgrid));
}

} // namespace

std::vector<double> kinetic_density(std::span<const double> F, const KineticContext& ctx) {
    check_size(F, ctx, "kinetic_density");
    const std::size_t N = ctx.vgrid.size();
    std::vector<double> rho(ctx.sgrid.n_x);
    for (int ix = 0; ix < ctx.sgrid.n_x; ++ix) rho[ix] = integrate_v(F.subspan(ix * N, N), ctx.vgrid);
    return rho;
}

KineticField make_kinetic_field(std::vector<double> F, double epsilon, const CollisionConfig& backend,
                                const KineticContext& ctx, double time) {
    check_size(F, ctx, "make_kinetic_field");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    check_positive(F, "make_kinetic_field");
    KineticField K;
    K.time = time;
    K.epsilon = epsilon;
    K.backend = backend;
    K.background = integrate_x(kinetic_density(F, ctx), ctx.sgrid) / ctx.sgrid.length;
    K.phi = field_phi(F, K.background, ctx);
    K.F = std::move(F);
    return K;
}

double total_mass(const KineticField& K, const KineticContext& ctx) {
    return integrate_x(kinetic_density(K.F, ctx), ctx.sgrid);
}

double total_energy(const KineticField& K, const KineticContext& ctx) {
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    std::vector<double> per_x(nx), tmp(N);
    for (int ix = 0; ix < nx; ++ix) {
        for (std::size_t k = 0; k < N; ++k) {
            const Vec3& v = ctx.vgrid.nodes[k];
            tmp[k] = 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * K.F[ix * N + k];
        }
        per_x[ix] = integrate_v(tmp, ctx.vgrid);
    }
    auto E = Spectral1D(nx, ctx.sgrid.length).derivative(K.phi);
    for (int ix = 0; ix < nx; ++ix) per_x[ix] += 0.5 * E[ix] * E[ix];
    return integrate_x(per_x, ctx.sgrid);
}

double max_relaxation_rate(const KineticField& K, const KineticContext& ctx) {
    const std::size_t N = ctx.vgrid.size();
    double r = 0.0;
    for (int ix = 0; ix < ctx.sgrid.n_x; ++ix) {
        auto p = params_from_moments(moments(std::span<const double>(K.F).subspan(ix * N, N), ctx.vgrid));
        r = std::max(r, bgk_rate(p, K.backend.bgk_rate_scale));
    }
    return r;
}

void relax_bgk(std::vector<double>& F, double dt, double epsilon, const CollisionConfig& cfg,
               const KineticContext& ctx) {
    if (cfg.backend != Backend::bgk)
        throw PreconditionError("time stepping supports the BGK backend only");
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    std::string err;
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < nx; ++ix) {
        try {
            std::span<double> f(F.data() + ix * N, N);
            auto m = moments(f, ctx.vgrid);
            auto p = params_from_moments(m);
            const double decay = std::exp(-bgk_rate(p, cfg.bgk_rate_scale) * dt / epsilon);
            auto M = discrete_maxwellian(m, ctx.vgrid);
            for (std::size_t k = 0; k < N; ++k) f[k] = M[k] + (f[k] - M[k]) * decay;
        } catch (const std::exception& e) {
#pragma omp critical
            err = e.what();
        }
    }
    if (!err.empty()) throw NumericalError("collision substep: " + err);
}

KineticField step_vpb(const KineticField& K, double dt, const KineticContext& ctx) {
    if (!(dt > 0.0)) throw PreconditionError("step_vpb: dt must be positive");
    if (K.backend.backend != Backend::bgk) throw PreconditionError("time stepping supports the BGK backend only");
    check_size(K.F, ctx, "step_vpb");
    KineticField out = K;
    transport(out.F, dt / 2, K.background, ctx);
    relax_bgk(out.F, dt, K.epsilon, K.backend, ctx);
    transport(out.F, dt / 2, K.background, ctx);
    check_positive(out.F, "step_vpb");
    out.phi = field_phi(out.F, K.background, ctx);
    out.time = K.time + dt;
    return out;
}

KineticField advance_vpb(const KineticField& K, double t_target, double dt_max, const KineticContext& ctx,
                         int* steps) {
    const double span = t_target - K.time;
    if (steps) *steps = 0;
    if (span <= 0.0) return K;
    if (!(dt_max > 0.0)) throw ConfigError("dt must be positive");
    double cap = dt_max;
    if (ctx.dt_guard > 0.0) cap = std::min(cap, ctx.dt_guard * K.epsilon / max_relaxation_rate(K, ctx));
    const int n = std::max(1, static_cast<int>(std::ceil(span / cap - 1e-9)));
    const double dt = span / n;
    KineticField cur = K;
    for (int i = 0; i < n; ++i) cur = step_vpb(cur, dt, ctx);
    cur.time = t_target;
    if (steps) *steps = n;
    return cur;
}

RemainderView extract_remainder(const KineticField& K, std::span<const double> F_exp, std::span<const double> phi_exp,
                                const FluidState& fluid, const ExpansionTruncation& tr, const KineticContext& ctx,
                                const GlobalMaxwellian& gm, const WeightSpec& ws) {
    check_size(F_exp, ctx, "extract_remainder");
    const std::size_t N = ctx.vgrid.size();
    const int nx = ctx.sgrid.n_x;
    if (phi_exp.size() != static_cast<std::size_t>(nx) || fluid.rho.size() != static_cast<std::size_t>(nx))
        throw PreconditionError("extract_remainder: spatial size mismatch");
    const double scale = std::pow(tr.epsilon, tr.k_trunc);
    RemainderView r;
    r.F_R.resize(K.F.size());
    r.f.resize(K.F.size());
    r.h.resize(K.F.size());
    auto omega_M = local_maxwellian(global_params(gm), ctx.vgrid);
    std::vector<double> w(N), w1(N);
    for (std::size_t k = 0; k < N; ++k) {
        const Vec3& v = ctx.vgrid.nodes[k];
        w[k] = weight_w(v, ws) / std::sqrt(omega_M[k]);
        w1[k] = w[k] * (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    }
    std::vector<double> diss(nx);
    std::vector<double> winf(nx, 0.0), linf(nx, 0.0);
    std::string err;
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < nx; ++ix) {
        try {
            auto p = fluid_params(fluid, ix);
            for (std::size_t k = 0; k < N; ++k) {
                const std::size_t m = ix * N + k;
                const double FR = (K.F[m] - F_exp[m]) / scale;
                r.F_R[m] = FR;
                r.f[m] = FR / std::sqrt(maxwellian_at(p, ctx.vgrid.nodes[k]));
                r.h[m] = w[k] * FR;
                winf[ix] = std::max(winf[ix], std::abs(w1[k] * FR));
                linf[ix] = std::max(linf[ix], std::abs(r.h[m]));
            }
            std::span<const double> fx(r.f.data() + ix * N, N);
            auto basis = null_basis(p, ctx.vgrid);
            auto Pf = project_P(fx, basis, ctx.vgrid);
            std::vector<double> tmp(N);
            for (std::size_t k = 0; k < N; ++k) {
                const double q = fx[k] - Pf[k];
                tmp[k] = collision_frequency(p, ctx.vgrid.nodes[k]) * q * q;
            }
            diss[ix] = integrate_v(tmp, ctx.vgrid);
        } catch (const std::exception& e) {
#pragma omp critical
            err = e.what();
        }
    }
    if (!err.empty()) throw NumericalError("extract_remainder: " + err);

    r.phi_R.resize(nx);
    for (int ix = 0; ix < nx; ++ix) r.phi_R[ix] = (K.phi[ix] - phi_exp[ix]) / scale;
    auto gphi = Spectral1D(nx, ctx.sgrid.length).derivative(r.phi_R);
    for (double& g : gphi) g *= g;

    RemainderNorms& n = r.norms;
    n.l2_f = sup_l2(r.f, ctx);
    n.l2_sqrt_theta_f = sup_l2(r.f, ctx, fluid.theta);
    n.l2_grad_phiR = std::sqrt(integrate_x(gphi, ctx.sgrid));
    n.winf_h = *std::max_element(winf.begin(), winf.end());
    n.linf_h = *std::max_element(linf.begin(), linf.end());
    n.dissipation = integrate_x(diss, ctx.sgrid);

    // centred differences of h in x (periodic) and v (one-sided at the edges)
    const int nv = ctx.vgrid.n_per_axis;
    const double hv = ctx.vgrid.h, dx = ctx.sgrid.dx;
    std::vector<double> gsup(nx, 0.0);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < nx; ++ix) {
        const int xp = (ix + 1) % nx, xm = (ix + nx - 1) % nx;
        for (int a = 0; a < nv; ++a)
            for (int b = 0; b < nv; ++b)
                for (int c = 0; c < nv; ++c) {
                    const std::size_t k = ctx.vgrid.index(a, b, c);
                    const double* H = r.h.data();
                    double g2 = std::pow((H[xp * N + k] - H[xm * N + k]) / (2 * dx), 2);
                    const int idx[3] = {a, b, c};
                    for (int d = 0; d < 3; ++d) {
                        int lo = idx[d] - 1, hi = idx[d] + 1;
                        lo = std::max(lo, 0);
                        hi = std::min(hi, nv - 1);
                        int il[3] = {a, b, c}, ih[3] = {a, b, c};
                        il[d] = lo;
                        ih[d] = hi;
                        const double dv = (H[ix * N + ctx.vgrid.index(ih[0], ih[1], ih[2])] -
                                           H[ix * N + ctx.vgrid.index(il[0], il[1], il[2])]) /
                                          ((hi - lo) * hv);
                        g2 += dv * dv;
                    }
                    gsup[ix] = std::max(gsup[ix], std::sqrt(g2));
                }
    }
    n.winf_grad_h = *std::max_element(gsup.begin(), gsup.end());
    return r;
}

EnergyBalanceReport energy_balance_report(const std::vector<double>& t, const std::vector<RemainderNorms>& hist,
                                          double epsilon, int k, double delta0, double theta_M, double p) {
    if (t.size() != hist.size()) throw PreconditionError("energy_balance_report: history size mismatch");
    EnergyBalanceReport r;
    r.t = t;
    const std::size_t n = t.size();
    for (const auto& h : hist) r.energy.push_back(h.l2_sqrt_theta_f * h.l2_sqrt_theta_f + h.l2_grad_phiR * h.l2_grad_phiR);
    r.lhs.assign(n, 0.0);
    r.rhs.assign(n, 0.0);
    r.dissipation.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double dEdt = 0.0;
        if (n > 1) {
            const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
            dEdt = (r.energy[b] - r.energy[a]) / (t[b] - t[a]);
        }
        const RemainderNorms& h = hist[i];
        r.dissipation[i] = delta0 / (2.0 * epsilon) * theta_M * h.dissipation;
        if (r.dissipation[i] < 0.0) r.dissipation_nonnegative = false;
        r.lhs[i] = dEdt + r.dissipation[i];
        const double f = h.l2_f, g = h.l2_grad_phiR, H = h.linf_h;
        auto [I1, I2] = growth_factors(epsilon, t[i], k);
        r.rhs[i] = epsilon * epsilon * H * f + std::pow(epsilon, k - 1) * H * f * f + std::pow(epsilon, k) * H * f * g +
                   std::pow(1.0 + t[i], -p) * (f * f + g * g) + I1 * epsilon * (f * f + g * g) +
                   I2 * std::pow(epsilon, k - 1) * f;
        if (r.lhs[i] > 0.0)
            r.C = std::max(r.C, r.rhs[i] > 0.0 ? r.lhs[i] / r.rhs[i] : std::numeric_limits<double>::infinity());
    }
    return r;
}

double bgk_delta0(const FluidState& fluid, const KineticContext& ctx, const CollisionConfig& cfg) {
    double rmin = std::numeric_limits<double>::infinity(), numax = 0.0;
    for (int ix = 0; ix < ctx.sgrid.n_x; ++ix) {
        auto p = fluid_params(fluid, ix);
        rmin = std::min(rmin, bgk_rate(p, cfg.bgk_rate_scale));
        for (const Vec3& v : ctx.vgrid.nodes) numax = std::max(numax, collision_frequency(p, v));
    }
    return rmin / numax;
}

void write_time_series(const std::string& path, const std::vector<TimeSeriesRow>& rows) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw Error("cannot open " + path + " for writing");
    std::fprintf(fp, "t,l2_f,l2_grad_phiR,eps32_winf_h,eps5_winf_grad_h,dissipation,mass,energy\n");
    for (const auto& r : rows)
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.norms.l2_f, r.norms.l2_grad_phiR,
                     std::pow(r.epsilon, 1.5) * r.norms.winf_h, std::pow(r.epsilon, 5) * r.norms.winf_grad_h,
                     r.norms.dissipation, r.mass, r.energy);
    if (std::fclose(fp) != 0) throw Error("failed writing " + path);
}

} // namespace hilbert
