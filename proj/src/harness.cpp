#include "hilbert/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "hilbert/error.hpp"
#include "hilbert/rng.hpp"

#ifndef HILBERT_GIT_DESCRIBE
#define HILBERT_GIT_DESCRIBE "unknown"
#endif

namespace hilbert {

std::string git_describe() { return HILBERT_GIT_DESCRIBE; }

namespace {

// two-sided 95% Student t quantiles, dof 1..30
constexpr double kT95[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                           2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                           2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};

double t95(int dof) { return dof <= 30 ? kT95[dof - 1] : 1.96 + 2.4 / dof; }

// the steps needed to cover [0, t_final] in sample_interval pieces
int sample_count(const RunConfig& cfg) {
    return std::max(1, static_cast<int>(std::ceil(cfg.t_final / cfg.sample_interval - 1e-9)));
}

ExpansionState advance_expansion(const ExpansionState& s, double t_target, const ExpansionContext& ctx) {
    ExpansionState cur = s;
    const double span = t_target - s.fluid.time;
    if (span <= 0.0) return cur;
    const double lim = 0.9 * cfl_limit(s.fluid, ctx.sgrid);
    const int n = std::max(1, static_cast<int>(std::ceil(span / lim - 1e-9)));
    const double h = span / n;
    for (int i = 0; i < n; ++i) cur = step_expansion(cur, h, ctx);
    cur.fluid.time = cur.c1.time = t_target;
    return cur;
}

std::vector<double> phi_expansion(const ExpansionState& s, double eps) {
    std::vector<double> phi(s.fluid.phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = s.fluid.phi[i] + eps * s.c1.phi[i];
    return phi;
}

template <class F>
auto with_epsilon(double eps, F&& f) -> decltype(f()) {
    char tag[64];
    std::snprintf(tag, sizeof tag, "epsilon=%g: ", eps);
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(tag + std::string(e.what()));
    } catch (const NumericalError& e) {
        throw NumericalError(tag + std::string(e.what()));
    } catch (const PreconditionError& e) {
        throw PreconditionError(tag + std::string(e.what()));
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

std::string eps_tag(double eps) {
    char b[64];
    std::snprintf(b, sizeof b, "%.6g", eps);
    return b;
}

} // namespace

Scenario1D build_scenario(const RunConfig& cfg) {
    validate(cfg);
    Scenario1D s;
    s.sgrid = build_spatial_grid(cfg.n_x, cfg.length);
    s.vgrid = build_velocity_grid(cfg.n_per_axis, cfg.v_max);
    s.coll.backend = cfg.backend;
    s.coll.bgk_rate_scale = cfg.bgk_rate_scale;
    const int n = cfg.n_x;
    std::vector<double> rho(n, cfg.rho_bar), u(n, 0.0);
    switch (cfg.scenario) {
    case Scenario::steady: break;
    case Scenario::standing_wave: {
        s.fluid0 = standing_wave(s.sgrid, cfg.amplitude, cfg.wavenumber_index, cfg.K_eos, cfg.rho_bar);
        return s;
    }
    case Scenario::custom: {
        for (int i = 0; i < n; ++i) {
            const double x = s.sgrid.nodes[i];
            for (std::size_t m = 0; m < cfg.custom_rho_modes.size(); ++m)
                rho[i] += cfg.custom_rho_modes[m] * std::cos(2.0 * M_PI * (m + 1) * x / cfg.length);
            for (std::size_t m = 0; m < cfg.custom_u_modes.size(); ++m)
                u[i] += cfg.custom_u_modes[m] * std::sin(2.0 * M_PI * (m + 1) * x / cfg.length);
        }
        if (*std::min_element(rho.begin(), rho.end()) <= 0.0)
            throw ConfigError("custom scenario: density is not positive");
        break;
    }
    }
    s.fluid0 = make_fluid_state(s.sgrid, rho, u, cfg.K_eos, cfg.rho_bar, 0.0);
    return s;
}

std::vector<double> grid_maxwellian_field(const FluidState& fluid, const VelocityGrid& vgrid) {
    const std::size_t N = vgrid.size();
    const int nx = static_cast<int>(fluid.rho.size());
    std::vector<double> out(static_cast<std::size_t>(nx) * N);
    std::string err;
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < nx; ++ix) {
        try {
            const double r = fluid.rho[ix], u = fluid.u[ix], th = fluid.theta[ix];
            Moments m{r, {r * u, 0.0, 0.0}, r * u * u + 3.0 * r * th};
            auto M = discrete_maxwellian(m, vgrid);
            std::copy(M.begin(), M.end(), out.begin() + static_cast<std::ptrdiff_t>(ix * N));
        } catch (const std::exception& e) {
#pragma omp critical
            err = e.what();
        }
    }
    if (!err.empty()) throw NumericalError(err);
    return out;
}

double validity_horizon(double epsilon, int k) {
    if (k < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::pow(epsilon, -0.5 * (2.0 * k - 3.0) / (2.0 * k - 2.0));
}

EpsilonRun run_single_epsilon(const RunConfig& cfg, double eps) {
    return with_epsilon(eps, [&] {
        if (cfg.backend != Backend::bgk) throw ConfigError("kinetic runs need backend = bgk");
        auto sc = build_scenario(cfg);
        ExpansionContext ectx{sc.sgrid, sc.vgrid, sc.coll, cfg.forcing, {}};
        if (cfg.forcing == ForcingMode::closure) {
            const auto [lo, hi] = std::minmax_element(sc.fluid0.theta.begin(), sc.fluid0.theta.end());
            ectx.transport = build_transport_table(*lo * 0.95, *hi * 1.05, cfg.n_per_axis, cfg.v_max, sc.coll, 4);
        }
        KineticContext kctx{sc.sgrid, sc.vgrid, cfg.dt_guard};
        const ExpansionTruncation tr{cfg.k_trunc, eps};
        const auto gm = make_global_maxwellian(cfg.rho_bar, cfg.K_eos);
        const WeightSpec ws{cfg.beta};

        auto es = init_expansion(sc.fluid0, ectx);
        auto omega = grid_maxwellian_field(es.fluid, sc.vgrid);
        auto F1 = assemble_F1(es.c1, es.fluid, ectx);
        std::vector<double> F(omega.size()), Fexp(omega.size());
        const double ek = std::pow(eps, cfg.k_trunc);
        Rng rng(cfg.seed);
        for (std::size_t m = 0; m < F.size(); ++m) {
            Fexp[m] = omega[m] + eps * F1[m];
            double FR0 = 0.0;
            if (cfg.remainder_amplitude > 0.0) FR0 = cfg.remainder_amplitude * omega[m] * rng.uniform(-1.0, 1.0);
            F[m] = Fexp[m] + ek * FR0;
        }
        auto K = make_kinetic_field(std::move(F), eps, sc.coll, kctx);

        EpsilonRun run;
        run.epsilon = eps;
        run.delta0 = bgk_delta0(sc.fluid0, kctx, sc.coll);
        std::vector<double> times;
        std::vector<RemainderNorms> norms;
        auto sample = [&](const std::vector<double>& om, const std::vector<double>& Fx) {
            std::vector<double> d(om.size());
            for (std::size_t m = 0; m < d.size(); ++m) d[m] = K.F[m] - om[m];
            const double dist = l2_xv(d, ectx);
            auto rv = extract_remainder(K, Fx, phi_expansion(es, eps), es.fluid, tr, kctx, gm, ws);
            run.dist.push_back(dist);
            run.sup_dist = std::max(run.sup_dist, dist);
            TimeSeriesRow row{K.time, eps, rv.norms, total_mass(K, kctx), total_energy(K, kctx)};
            run.series.push_back(row);
            times.push_back(K.time);
            norms.push_back(rv.norms);
        };
        sample(omega, Fexp);

        const int ns = sample_count(cfg);
        for (int i = 1; i <= ns; ++i) {
            const double t = std::min(cfg.t_final, i * cfg.sample_interval);
            int steps = 0;
            K = advance_vpb(K, t, cfg.dt, kctx, &steps);
            run.kinetic_steps += steps;
            es = advance_expansion(es, t, ectx);
            omega = grid_maxwellian_field(es.fluid, sc.vgrid);
            F1 = assemble_F1(es.c1, es.fluid, ectx);
            for (std::size_t m = 0; m < Fexp.size(); ++m) Fexp[m] = omega[m] + eps * F1[m];
            sample(omega, Fexp);
        }

        auto eb = energy_balance_report(times, norms, eps, cfg.k_trunc, run.delta0, gm.theta_M);
        run.energy_C = eb.C;
        run.dissipation_nonnegative = eb.dissipation_nonnegative;
        run.eps32_winf_h_initial = std::pow(eps, 1.5) * norms.front().winf_h;
        run.l2_energy_initial = eb.energy.front();
        run.min_dissipation = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < norms.size(); ++i) {
            run.eps32_winf_h_max = std::max(run.eps32_winf_h_max, std::pow(eps, 1.5) * norms[i].winf_h);
            run.l2_energy_max = std::max(run.l2_energy_max, eb.energy[i]);
            run.min_dissipation = std::min(run.min_dissipation, norms[i].dissipation);
        }
        return run;
    });
}

SlopeFit fit_loglog(const std::vector<ConvergenceRow>& rows, double floor) {
    SlopeFit f;
    f.slope_ci = std::numeric_limits<double>::quiet_NaN();
    const std::size_t n = rows.size();
    if (n < 2) {
        f.degenerate = true;
        f.slope = std::numeric_limits<double>::quiet_NaN();
        return f;
    }
    for (const auto& r : rows)
        if (!(r.sup_t_l2_dist > floor) || !(r.epsilon > 0.0)) {
            f.degenerate = true;
            f.slope = std::numeric_limits<double>::quiet_NaN();
            return f;
        }
    double mx = 0.0, my = 0.0;
    for (const auto& r : rows) {
        mx += std::log(r.epsilon);
        my += std::log(r.sup_t_l2_dist);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& r : rows) {
        const double dx = std::log(r.epsilon) - mx, dy = std::log(r.sup_t_l2_dist) - my;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0)) {
        f.degenerate = true;
        f.slope = std::numeric_limits<double>::quiet_NaN();
        return f;
    }
    f.slope = sxy / sxx;
    if (n > 2) {
        const double b = my - f.slope * mx;
        double sse = 0.0;
        for (const auto& r : rows) {
            const double e = std::log(r.sup_t_l2_dist) - (b + f.slope * std::log(r.epsilon));
            sse += e * e;
        }
        const int dof = static_cast<int>(n) - 2;
        f.slope_ci = t95(dof) * std::sqrt(sse / dof / sxx);
    }
    return f;
}

ConvergenceReport run_convergence_study(const RunConfig& cfg) {
    validate(cfg);
    const std::size_t n = cfg.epsilon_list.size();
    std::vector<EpsilonRun> runs(n);
    std::vector<std::exception_ptr> errs(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            runs[i] = run_single_epsilon(cfg, cfg.epsilon_list[i]);
        } catch (...) {
            errs[i] = std::current_exception();
        }
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    ConvergenceReport rep;
    for (const auto& r : runs) rep.rows.push_back({r.epsilon, r.sup_dist});
    std::sort(rep.rows.begin(), rep.rows.end(), [](auto& a, auto& b) { return a.epsilon < b.epsilon; });
    auto fit = fit_loglog(rep.rows);
    rep.slope = fit.slope;
    rep.slope_ci = fit.slope_ci;
    rep.degenerate = fit.degenerate;
    rep.runs = std::move(runs);
    return rep;
}

namespace {

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json config_json(const RunConfig& c) {
    nlohmann::json j;
    j["scenario"] = to_string(c.scenario);
    j["amplitude"] = c.amplitude;
    j["wavenumber_index"] = c.wavenumber_index;
    j["custom_rho_modes"] = c.custom_rho_modes;
    j["custom_u_modes"] = c.custom_u_modes;
    j["n_x"] = c.n_x;
    j["length"] = c.length;
    j["n_per_axis"] = c.n_per_axis;
    j["v_max"] = c.v_max;
    j["epsilon_list"] = c.epsilon_list;
    j["t_final"] = c.t_final;
    j["dt"] = c.dt;
    j["sample_interval"] = c.sample_interval;
    j["dt_guard"] = c.dt_guard;
    j["k_trunc"] = c.k_trunc;
    j["beta"] = c.beta;
    j["K_eos"] = c.K_eos;
    j["rho_bar"] = c.rho_bar;
    j["backend"] = to_string(c.backend);
    j["bgk_rate_scale"] = c.bgk_rate_scale;
    j["forcing"] = to_string(c.forcing);
    j["remainder_amplitude"] = c.remainder_amplitude;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    return j;
}

} // namespace

void emit_report(const ConvergenceReport& rep, const RunConfig& cfg, const std::string& dir) {
    ensure_dir(dir);
    const std::string csv = (std::filesystem::path(dir) / "convergence.csv").string();
    std::FILE* fp = std::fopen(csv.c_str(), "w");
    if (!fp) throw Error("cannot open " + csv + " for writing");
    std::fprintf(fp, "epsilon,sup_t_l2_dist\n");
    for (const auto& r : rep.rows) std::fprintf(fp, "%.17g,%.17g\n", r.epsilon, r.sup_t_l2_dist);
    if (std::fclose(fp) != 0) throw Error("failed writing " + csv);

    nlohmann::json j;
    j["slope"] = num(rep.slope);
    j["slope_ci"] = num(rep.slope_ci);
    j["degenerate"] = rep.degenerate;
    j["git_describe"] = git_describe();
    j["config"] = config_json(cfg);
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : rep.runs) {
        nlohmann::json o;
        o["epsilon"] = r.epsilon;
        o["sup_t_l2_dist"] = r.sup_dist;
        o["kinetic_steps"] = r.kinetic_steps;
        o["delta0"] = num(r.delta0);
        o["energy_balance_C"] = num(r.energy_C);
        o["dissipation_nonnegative"] = r.dissipation_nonnegative;
        o["eps32_winf_h_initial"] = num(r.eps32_winf_h_initial);
        o["eps32_winf_h_max"] = num(r.eps32_winf_h_max);
        o["l2_energy_initial"] = num(r.l2_energy_initial);
        o["l2_energy_max"] = num(r.l2_energy_max);
        o["validity_horizon_k6"] = num(validity_horizon(r.epsilon, 6));
        o["time_series"] = "timeseries_eps" + eps_tag(r.epsilon) + ".csv";
        runs.push_back(o);
        write_time_series((std::filesystem::path(dir) / o["time_series"].get<std::string>()).string(), r.series);
    }
    j["runs"] = runs;
    const std::string js = (std::filesystem::path(dir) / "summary.json").string();
    std::ofstream out(js);
    if (!out) throw Error("cannot open " + js + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw Error("failed writing " + js);
}

EulerSummary run_euler(const RunConfig& cfg, const std::string& dir) {
    auto sc = build_scenario(cfg);
    ensure_dir(dir);
    EulerSummary s;
    std::vector<FluidState> hist{sc.fluid0};
    FluidState cur = sc.fluid0;
    const std::string path = (std::filesystem::path(dir) / "euler_series.csv").string();
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw Error("cannot open " + path + " for writing");
    auto row = [&](const FluidState& f) {
        auto d = decay_sample(f, sc.sgrid);
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", f.time,
                     cosine_mode(f.rho, sc.sgrid, cfg.wavenumber_index), d.sup_drho, d.sup_u, d.sup_dphi,
                     neutrality_defect(f, sc.sgrid));
        s.max_neutrality_defect = std::max(s.max_neutrality_defect, std::abs(neutrality_defect(f, sc.sgrid)));
    };
    std::fprintf(fp, "t,rho_mode,sup_drho,sup_u,sup_dphi,neutrality\n");
    row(cur);
    const int ns = sample_count(cfg);
    try {
        for (int i = 1; i <= ns; ++i) {
            const double t = std::min(cfg.t_final, i * cfg.sample_interval);
            const double lim = 0.9 * cfl_limit(cur, sc.sgrid);
            const int n = std::max(1, static_cast<int>(std::ceil((t - cur.time) / lim - 1e-9)));
            const double h = (t - cur.time) / n;
            for (int k = 0; k < n; ++k) cur = step_euler_poisson(cur, h, sc.sgrid);
            cur.time = t;
            s.steps += n;
            hist.push_back(cur);
            row(cur);
        }
    } catch (...) {
        std::fclose(fp);
        throw;
    }
    if (std::fclose(fp) != 0) throw Error("failed writing " + path);
    write_fluid_snapshot((std::filesystem::path(dir) / "euler_final.csv").string(), cur, sc.sgrid);
    s.decay = measure_decay(hist, sc.sgrid);
    return s;
}

ExpandSummary run_expand(const RunConfig& cfg, const std::string& dir) {
    auto sc = build_scenario(cfg);
    ensure_dir(dir);
    ExpansionContext ectx{sc.sgrid, sc.vgrid, sc.coll, cfg.forcing, {}};
    if (cfg.forcing == ForcingMode::closure) {
        const auto [lo, hi] = std::minmax_element(sc.fluid0.theta.begin(), sc.fluid0.theta.end());
        ectx.transport = build_transport_table(*lo * 0.95, *hi * 1.05, cfg.n_per_axis, cfg.v_max, sc.coll, 4);
    }
    ExpandSummary s;
    auto es = init_expansion(sc.fluid0, ectx);
    const std::string path = (std::filesystem::path(dir) / "expand_series.csv").string();
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw Error("cannot open " + path + " for writing");
    std::fprintf(fp, "t,symmetrizer_energy,sup_rho1,sup_u1,sup_theta1,l2_F1\n");
    auto row = [&] {
        const double e = symmetrizer_energy(es.c1, es.fluid, ectx);
        auto sup = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m = std::max(m, std::abs(x));
            return m;
        };
        auto F1 = assemble_F1(es.c1, es.fluid, ectx);
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", es.fluid.time, e, sup(es.c1.rho), sup(es.c1.u),
                     sup(es.c1.theta), l2_xv(F1, ectx));
        s.symmetrizer_max = std::max(s.symmetrizer_max, e);
        return e;
    };
    s.symmetrizer_initial = row();
    const int ns = sample_count(cfg);
    try {
        for (int i = 1; i <= ns; ++i) {
            const double t = std::min(cfg.t_final, i * cfg.sample_interval);
            const double lim = 0.9 * cfl_limit(es.fluid, sc.sgrid);
            const int n = std::max(1, static_cast<int>(std::ceil((t - es.fluid.time) / lim - 1e-9)));
            es = advance_expansion(es, t, ectx);
            s.steps += n;
            row();
        }
    } catch (...) {
        std::fclose(fp);
        throw;
    }
    if (std::fclose(fp) != 0) throw Error("failed writing " + path);
    return s;
}

} // namespace hilbert
