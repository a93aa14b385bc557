// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Optional argv[1]: path of the hilbert CLI, used for the determinism check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hilbert/characteristics.hpp"
#include "hilbert/collision.hpp"
#include "hilbert/euler_poisson.hpp"
#include "hilbert/expansion.hpp"
#include "hilbert/harness.hpp"

using namespace hilbert;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... a) {
    char b[512];
    std::snprintf(b, sizeof b, f, a...);
    return b;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= y.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += std::pow(std::log(x[i]) - mx, 2);
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    }
    return sxy / sxx;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const VelocityGrid& g16() {
    static const VelocityGrid g = build_velocity_grid(16, 6.0);
    return g;
}

double nu_weighted_norm(std::span<const double> F, const VelocityGrid& g) {
    auto nu = loss_frequency(F, g);
    std::vector<double> nuF(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) nuF[i] = nu[i] * F[i];
    return norm_v(nuF, g);
}

Outcome conservation() {
    const auto& g = g16();
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < 5; ++s) {
        std::vector<double> F(g.size());
        for (auto& x : F) x = U(gen);
        auto Q = collide(F, F, g, CollisionConfig{});
        auto m = moments(Q, g);
        const double ref = nu_weighted_norm(F, g);
        for (double q : {m.rho, m.momentum[0], m.momentum[1], m.momentum[2], m.energy}) worst = std::max(worst, std::abs(q) / ref);
    }
    return {worst <= 1e-5, fmt("max |moment| / ||nu F|| = %.3e over 5 samples", worst)};
}

Outcome annihilation() {
    const auto& g = g16();
    double worst = 0.0;
    for (const MaxwellianParams& p : {MaxwellianParams{1.0, {0, 0, 0}, 1.0}, MaxwellianParams{2.0, {0.3, 0, 0}, 0.5}}) {
        auto w = local_maxwellian(p, g);
        auto Q = collide(w, w, g, CollisionConfig{});
        worst = std::max(worst, norm_v(Q, g) / nu_weighted_norm(w, g));
    }
    return {worst <= 1e-5, fmt("max ||Q(w,w)|| / ||nu w|| = %.3e", worst)};
}

Outcome null_space_gap() {
    auto op = build_linearized({1.0, {0, 0, 0}, 1.0}, g16(), CollisionConfig{});
    double worst = 0.0;
    for (const auto& chi : op.basis.chi) worst = std::max(worst, norm_nu(op, op.apply(chi)));
    // L is symmetric nonnegative, so its sixth singular value is its sixth eigenvalue
    auto gap = spectral_gap(op, 200, 1);
    return {worst <= 1e-4 && gap.lambda6 > 1e-2,
            fmt("max ||L chi_i||_nu = %.3e, sixth singular value %.4f, delta0 %.4f (reported)", worst, gap.lambda6,
                gap.delta0)};
}

Outcome transport() {
    std::vector<double> mus, ks;
    for (double th : {0.5, 1.0, 2.0}) {
        // grid scaled with the thermal speed so every temperature sees the same discretization
        auto g = build_velocity_grid(16, 6.0 * std::sqrt(th));
        auto tc = transport_coefficients({1.0, {0, 0, 0}, th}, g, CollisionConfig{});
        mus.push_back(tc.mu);
        ks.push_back(tc.kappa);
    }
    double dmu = 0.0, dk = 0.0;
    const double r0 = mus[0] / std::sqrt(0.5), q0 = ks[0] / mus[0];
    const double th[3] = {0.5, 1.0, 2.0};
    for (int i = 1; i < 3; ++i) {
        dmu = std::max(dmu, std::abs(mus[i] / std::sqrt(th[i]) / r0 - 1.0));
        dk = std::max(dk, std::abs(ks[i] / mus[i] / q0 - 1.0));
    }
    return {mus[1] > 0 && ks[1] > 0 && dmu <= 0.03 && dk <= 0.03,
            fmt("mu(1) = %.5f, kappa(1) = %.5f, spread of mu/sqrt(theta) %.2f%%, of kappa/mu %.2f%%", mus[1], ks[1],
                100 * dmu, 100 * dk)};
}

Outcome jacobian_window() {
    // free streaming
    ConstantField zero(0.0);
    const PhasePoint a0{{0.3, 0.1, -0.2}, {0.9, -0.4, 0.6}};
    std::vector<double> taus;
    for (int i = 0; i <= 20; ++i) taus.push_back(2.0 - 0.1 * i);
    auto fs_tr = variational_jacobian(2.0, a0, zero, taus);
    double fs_err = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double s = std::abs(2.0 - taus[i]);
        fs_err = std::max(fs_err, std::abs(std::abs(fs_tr.jacobians[i].dX_dv().determinant()) - s * s * s) /
                                      std::max(1.0, s * s * s));
    }

    // standing waves with |phi_xx| <= 1: analytic ones and a sampled fluid run
    std::vector<std::unique_ptr<FieldSampler>> fields;
    for (double w : {0.0, 0.7, 1.4})
        for (double k : {1.0, 2.0}) fields.push_back(std::make_unique<CosineField>(1.0 / (k * k), k, w));
    auto sg = build_spatial_grid(64, 2.0 * kPi);
    auto fl = standing_wave(sg, 0.5, 1, 1.0, 1.0);  // phi_xx = rho - rho_bar
    std::vector<double> times{0.0};
    std::vector<std::vector<double>> phis{fl.phi};
    double curv = 0.0;
    for (double r : fl.rho) curv = std::max(curv, std::abs(r - 1.0));
    while (fl.time < 3.0) {
        fl = step_euler_poisson(fl, 0.25 * cfl_limit(fl, sg), sg);
        times.push_back(fl.time);
        phis.push_back(fl.phi);
        for (double r : fl.rho) curv = std::max(curv, std::abs(r - 1.0));
    }
    fields.push_back(std::make_unique<SnapshotField>(sg, times, phis));

    int windows = 0, held = 0;
    double vol = 0.0;
    for (const auto& f : fields)
        for (double t : {0.5, 1.5, 2.5})
            for (double x : {0.0, 1.0, 2.5, 4.0})
                for (double v : {-1.5, 0.0, 0.8}) {
                    const PhasePoint a{{x, 0.2, -0.1}, {v, 0.3, -0.2}};
                    std::vector<double> tw;
                    for (int i = 0; i <= 25; ++i) tw.push_back(t - 0.01 * i);
                    auto tr = variational_jacobian(t, a, *f, tw);
                    auto r = jacobian_window_check(tr.jacobians, t, 0.25);
                    ++windows;
                    held += r.all();
                    vol = std::max(vol, r.volume_defect);
                }
    // machine precision for an RK4 run accumulates one rounding per step
    const double steps = 2.0 / TrajectoryOptions{}.max_step;
    const double fs_tol = 4.0 * steps * std::numeric_limits<double>::epsilon();
    return {fs_err <= fs_tol && held == windows && vol <= 1e-6 && curv <= 1.0,
            fmt("free-streaming det error %.1e (tol %.1e); bounds held on %d/%d windows of 0.25; volume defect %.1e; fluid "
                "|phi_xx| <= %.2f",
                fs_err, fs_tol, held, windows, vol, curv)};
}

double measured_frequency(int mode) {
    const double L = 2.0 * kPi;
    auto g = build_spatial_grid(32, L);
    auto s = standing_wave(g, 1e-4, mode, 1.0, 1.0);
    const double T = 6.0 * 2.0 * kPi / plasma_frequency(1.0, 1.0, mode);
    std::vector<double> t{0.0}, a{cosine_mode(s.rho, g, mode)};
    const double dt = 0.25 * cfl_limit(s, g);
    while (s.time < T) {
        s = step_euler_poisson(s, dt, g);
        t.push_back(s.time);
        a.push_back(cosine_mode(s.rho, g, mode));
    }
    return zero_crossing_frequency(t, a);
}

Outcome dispersion() {
    double worst = 0.0;
    std::string d;
    for (int m : {1, 2}) {
        const double k = m;
        const double om = std::sqrt(1.0 + 5.0 / 3.0 * k * k);
        const double meas = measured_frequency(m);
        worst = std::max(worst, std::abs(meas / om - 1.0));
        d += fmt("mode %d: %.5f vs %.5f; ", m, meas, om);
    }
    return {worst <= 0.02, d + fmt("max deviation %.3f%%", 100 * worst)};
}

Outcome residual() {
    // hard-sphere collisions; every RK stage rebuilds L at each x, so the box is small
    ExpansionContext ctx{build_spatial_grid(8, 2.0 * kPi), build_velocity_grid(12, 6.0), CollisionConfig{},
                         ForcingMode::micro_moments, {}};
    auto s = init_expansion(standing_wave(ctx.sgrid, 0.01, 1, 1.0, 1.0), ctx);
    const double dt = 0.5 * cfl_limit(s.fluid, ctx.sgrid);
    for (int n = 0; n < 2; ++n) s = step_expansion(s, dt, ctx);
    std::vector<double> e{0.02, 0.04, 0.08}, r;
    for (const auto& d : expansion_defects(s, e, ctx)) r.push_back(l2_xv(d, ctx));
    const double slope = loglog_slope(e, r);
    return {std::abs(slope - 1.0) <= 0.2,
            fmt("defect %.3e %.3e %.3e at t = %.3f, slope %.3f", r[0], r[1], r[2], s.fluid.time, slope)};
}

ConvergenceReport& study() {
    static ConvergenceReport rep = [] {
        RunConfig c;  // standing wave, amplitude 1e-2, t_final 1, n_x 64, n_per_axis 16, v_max 8, BGK
        return run_convergence_study(c);
    }();
    return rep;
}

Outcome convergence() {
    const auto& rep = study();
    std::string d;
    for (const auto& r : rep.rows) d += fmt("eps %.3g: %.4e; ", r.epsilon, r.sup_t_l2_dist);
    const bool ok = !rep.degenerate && rep.slope >= 0.7 && rep.slope <= 1.3;
    return {ok, d + fmt("slope %.3f +- %.3f", rep.slope, rep.slope_ci)};
}

Outcome monitors() {
    const auto& rep = study();
    bool ok = true;
    std::string d;
    for (const auto& r : rep.runs) {
        const bool h_ok = r.eps32_winf_h_max <= 10.0 * (r.eps32_winf_h_initial + 1.0);
        const bool e_ok = r.l2_energy_max <= 10.0 * (r.l2_energy_initial + 1.0);
        const bool d_ok = r.dissipation_nonnegative && r.min_dissipation >= 0.0;
        ok = ok && h_ok && e_ok && d_ok;
        d += fmt("eps %.3g: h %.2e (init %.2e), energy %.2e (init %.2e), min dissipation %.2e; ", r.epsilon,
                 r.eps32_winf_h_max, r.eps32_winf_h_initial, r.l2_energy_max, r.l2_energy_initial, r.min_dissipation);
    }
    return {ok, d};
}

Outcome determinism(const std::string& cli) {
    const fs::path base = fs::temp_directory_path() / "hilbert_acceptance_det";
    fs::remove_all(base);
    fs::create_directories(base);
    const fs::path cfg = base / "det.toml";
    std::ofstream(cfg) << "scenario = \"standing_wave\"\namplitude = 1e-2\nn_x = 16\nn_per_axis = 12\nv_max = 6.0\n"
                          "epsilon_list = [0.2, 0.1, 0.05]\nt_final = 0.06\nsample_interval = 0.02\n"
                          "remainder_amplitude = 0.1\nseed = 11\n";
    const fs::path a = base / "a", b = base / "b";
    if (!cli.empty()) {
        for (const auto& out : {a, b}) {
            const std::string cmd =
                "\"" + cli + "\" converge --config \"" + cfg.string() + "\" --output-dir \"" + out.string() + "\" > /dev/null";
            if (std::system(cmd.c_str()) != 0) return {false, "converge run failed: " + cmd};
        }
    } else {
        auto c = load_config(cfg.string());
        emit_report(run_convergence_study(c), c, a.string());
        emit_report(run_convergence_study(c), c, b.string());
    }
    int files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().extension() != ".csv") continue;
        ++files;
        same += fs::exists(b / e.path().filename()) && slurp(e.path()) == slurp(b / e.path().filename());
    }
    fs::remove_all(base);
    return {files > 0 && same == files,
            fmt("%d/%d CSV files byte-identical (%s)", same, files, cli.empty() ? "library" : "CLI")};
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"collision conservation", conservation},
        {"Maxwellian annihilation", annihilation},
        {"null space and gap", null_space_gap},
        {"transport coefficients", transport},
        {"Jacobian window", jacobian_window},
        {"plasma dispersion", dispersion},
        {"expansion residual", residual},
        {"hydrodynamic convergence", convergence},
        {"remainder monitors", monitors},
        {"determinism", [&] { return determinism(cli); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s %zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), sec);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
