// Command-line driver: euler, expand, kinetic, traj, converge.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hilbert/characteristics.hpp"
#include "hilbert/config.hpp"
#include "hilbert/error.hpp"
#include "hilbert/harness.hpp"
#include "hilbert/parallel.hpp"

using namespace hilbert;

namespace {

struct Common {
    std::string config;
    std::string output_dir;
    std::vector<std::string> sets;
    double t_final = -1.0, amplitude = -1.0, dt = -1.0;
    int n_x = -1, n_per_axis = -1;
    std::vector<double> eps;
};

void add_common(CLI::App* c, Common& o, bool config_required) {
    auto* opt = c->add_option("--config", o.config, "run configuration (key = value lines)");
    if (config_required) opt->required();
    c->add_option("--output-dir", o.output_dir, "overrides output_dir");
    c->add_option("--set", o.sets, "override any config key, key=value (repeatable)");
    c->add_option("--t-final", o.t_final, "overrides t_final");
    c->add_option("--amplitude", o.amplitude, "overrides amplitude");
    c->add_option("--dt", o.dt, "overrides dt");
    c->add_option("--n-x", o.n_x, "overrides n_x");
    c->add_option("--n-per-axis", o.n_per_axis, "overrides n_per_axis");
    c->add_option("--epsilon-list", o.eps, "overrides epsilon_list")->expected(1, -1);
}

RunConfig resolve(const Common& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    for (const auto& s : o.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!o.output_dir.empty()) c.output_dir = o.output_dir;
    if (o.t_final >= 0.0) c.t_final = o.t_final;
    if (o.amplitude >= 0.0) c.amplitude = o.amplitude;
    if (o.dt >= 0.0) c.dt = o.dt;
    if (o.n_x >= 0) c.n_x = o.n_x;
    if (o.n_per_axis >= 0) c.n_per_axis = o.n_per_axis;
    if (!o.eps.empty()) c.epsilon_list = o.eps;
    validate(c);
    return c;
}

int cmd_euler(const Common& o) {
    auto cfg = resolve(o);
    auto s = run_euler(cfg, cfg.output_dir);
    std::printf("euler: %d steps, decay exponent %.4g, growth ratio %.4g, bounded %s, neutrality %.3g\n", s.steps,
                s.decay.fitted_exponent, s.decay.growth_ratio, s.decay.bounded ? "yes" : "no",
                s.max_neutrality_defect);
    std::printf("wrote %s/euler_series.csv and euler_final.csv\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_expand(const Common& o) {
    auto cfg = resolve(o);
    auto s = run_expand(cfg, cfg.output_dir);
    std::printf("expand: %d steps, symmetrizer energy %.6g -> max %.6g\n", s.steps, s.symmetrizer_initial,
                s.symmetrizer_max);
    std::printf("wrote %s/expand_series.csv\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_kinetic(const Common& o, double eps) {
    auto cfg = resolve(o);
    if (eps <= 0.0) eps = cfg.epsilon_list.front();
    auto r = run_single_epsilon(cfg, eps);
    std::filesystem::create_directories(cfg.output_dir);
    const std::string path =
        (std::filesystem::path(cfg.output_dir) / ("kinetic_eps" + std::to_string(eps) + ".csv")).string();
    write_time_series(path, r.series);
    std::printf("kinetic eps=%g: %d steps, sup_t ||F - omega|| = %.6e, energy-balance C = %.4g\n", eps,
                r.kinetic_steps, r.sup_dist, r.energy_C);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

struct TrajOpts {
    std::string config, output;
    double amplitude = 0.5, k = 1.0, omega = 0.0, t = 1.0, span = 0.25, dtau = 0.005, max_step = 1e-3;
    std::vector<double> x{0.3, 0.0, 0.0}, v{0.5, 0.2, -0.1};
};

int cmd_traj(const TrajOpts& o) {
    std::unique_ptr<FieldSampler> field;
    double t = o.t;
    if (!o.config.empty()) {
        // potential history of the configured Euler-Poisson run
        auto cfg = load_config(o.config);
        auto sc = build_scenario(cfg);
        std::vector<double> times{0.0};
        std::vector<std::vector<double>> phis{sc.fluid0.phi};
        FluidState cur = sc.fluid0;
        while (cur.time < cfg.t_final - 1e-12) {
            const double h = std::min(0.9 * cfl_limit(cur, sc.sgrid), cfg.t_final - cur.time);
            cur = step_euler_poisson(cur, h, sc.sgrid);
            times.push_back(cur.time);
            phis.push_back(cur.phi);
        }
        field = std::make_unique<SnapshotField>(sc.sgrid, times, phis);
        t = cfg.t_final;
    } else {
        field = std::make_unique<CosineField>(o.amplitude, o.k, o.omega);
    }
    if (o.x.size() != 3 || o.v.size() != 3) throw ConfigError("--x and --v take three values");
    if (!(o.span > 0.0) || !(o.dtau > 0.0)) throw ConfigError("--span and --dtau must be positive");
    PhasePoint z{{o.x[0], o.x[1], o.x[2]}, {o.v[0], o.v[1], o.v[2]}};
    std::vector<double> taus;
    const int n = static_cast<int>(std::floor(o.span / o.dtau + 1e-9));
    for (int i = 0; i <= n; ++i) taus.push_back(std::max(t - i * o.dtau, field->t_min()));
    auto tr = variational_jacobian(t, z, *field, taus, TrajectoryOptions{o.max_step});
    auto rep = jacobian_window_check(tr.jacobians, t, o.span);

    std::FILE* fp = stdout;
    if (!o.output.empty()) {
        fp = std::fopen(o.output.c_str(), "w");
        if (!fp) throw Error("cannot open " + o.output + " for writing");
    }
    std::fprintf(fp, "tau,X1,X2,X3,V1,V2,V3,det_dXdv,det_dVdv,det_dXdx,ratio,verdict\n");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const auto& s = tr.samples[i];
        const auto& j = tr.jacobians[i];
        const double d = std::abs(t - s.tau);
        const double dxv = j.dX_dv().determinant(), dvv = j.dV_dv().determinant(), dxx = j.dX_dx().determinant();
        const double ratio = d > 0 ? std::abs(dxv) / (d * d * d) : 1.0;
        const bool ok = d == 0 || (ratio >= 0.5 && ratio <= 2 && j.dX_dv().jacobiSvd().singularValues()(0) <= 2 * d &&
                                   std::abs(dvv) >= 0.5 && std::abs(dvv) <= 2 && std::abs(dxx) >= 0.5 &&
                                   std::abs(dxx) <= 2);
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", s.tau, s.z.x[0],
                     s.z.x[1], s.z.x[2], s.z.v[0], s.z.v[1], s.z.v[2], dxv, dvv, dxx, ratio, ok ? "pass" : "fail");
    }
    if (fp != stdout) std::fclose(fp);
    std::fprintf(stderr, "window %.4g: bounds %s, empirical T0 %.4g, ratio [%.6f, %.6f], volume defect %.3g\n", o.span,
                 rep.all() ? "hold" : "fail", rep.T0, rep.ratio_min, rep.ratio_max, rep.volume_defect);
    return 0;
}

int cmd_converge(const Common& o, bool assert_mode, double lo, double hi) {
    auto cfg = resolve(o);
    auto rep = run_convergence_study(cfg);
    emit_report(rep, cfg, cfg.output_dir);
    for (const auto& r : rep.rows) std::printf("eps %-10g sup_t ||F - omega|| = %.6e\n", r.epsilon, r.sup_t_l2_dist);
    if (rep.degenerate)
        std::printf("slope: degenerate\n");
    else
        std::printf("slope %.4f (95%% half-width %.3g)\n", rep.slope, rep.slope_ci);
    std::printf("wrote %s/convergence.csv and summary.json\n", cfg.output_dir.c_str());
    if (assert_mode && (rep.degenerate || !(rep.slope >= lo && rep.slope <= hi))) {
        std::fprintf(stderr, "converge --assert: slope outside [%g, %g]\n", lo, hi);
        return 4;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    thread_count(); // applies HILBERT_THREADS
    CLI::App app{"Hilbert expansion lab for the Vlasov-Poisson-Boltzmann system"};
    app.require_subcommand(1);

    Common ce, cx, ck, cc;
    auto* euler = app.add_subcommand("euler", "Euler-Poisson fluid run");
    add_common(euler, ce, true);
    auto* expand = app.add_subcommand("expand", "zeroth and first expansion coefficients");
    add_common(expand, cx, true);
    auto* kinetic = app.add_subcommand("kinetic", "single-epsilon kinetic run with remainder monitors");
    add_common(kinetic, ck, true);
    double kin_eps = -1.0;
    kinetic->add_option("--epsilon", kin_eps, "Knudsen number (default: first of epsilon_list)");

    TrajOpts to;
    auto* traj = app.add_subcommand("traj", "characteristics and Jacobian window lab");
    traj->add_option("--config", to.config, "take the potential from this configuration's fluid run");
    traj->add_option("--amplitude", to.amplitude, "phi = a cos(k x) cos(w t)");
    traj->add_option("--k", to.k);
    traj->add_option("--omega", to.omega);
    traj->add_option("--t", to.t, "anchor time");
    traj->add_option("--x", to.x)->expected(3);
    traj->add_option("--v", to.v)->expected(3);
    traj->add_option("--span", to.span, "tau window length");
    traj->add_option("--dtau", to.dtau, "sample spacing");
    traj->add_option("--max-step", to.max_step);
    traj->add_option("--output", to.output, "CSV path (default stdout)");

    auto* conv = app.add_subcommand("converge", "epsilon sweep and O(eps) fit");
    add_common(conv, cc, true);
    bool assert_mode = false;
    double lo = 0.7, hi = 1.3;
    conv->add_flag("--assert", assert_mode, "exit 4 unless the slope lies in [lo, hi]");
    conv->add_option("--slope-min", lo);
    conv->add_option("--slope-max", hi);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*euler) return cmd_euler(ce);
        if (*expand) return cmd_expand(cx);
        if (*kinetic) return cmd_kinetic(ck, kin_eps);
        if (*traj) return cmd_traj(to);
        if (*conv) return cmd_converge(cc, assert_mode, lo, hi);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const PreconditionError& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
