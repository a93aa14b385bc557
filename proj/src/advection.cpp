#include "hilbert/advection.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "hilbert/error.hpp"
#include "hilbert/spectral.hpp"

namespace hilbert {

void shift_x(std::vector<double>& F, const SpatialGrid& sgrid, const VelocityGrid& vgrid, double tau) {
    const int nx = sgrid.n_x;
    const std::size_t N = vgrid.size();
    if (F.size() != static_cast<std::size_t>(nx) * N) throw PreconditionError("shift_x: field size mismatch");
    if (tau == 0.0) return;
    Spectral1D sp(nx, sgrid.length);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(N); ++k) {
        std::vector<double> col(nx);
        for (int ix = 0; ix < nx; ++ix) col[ix] = F[ix * N + k];
        auto c = sp.forward(col);
        const double s = vgrid.nodes[k][0] * tau;
        for (int m = 1; m < static_cast<int>(c.size()); ++m) {
            const double ph = -sp.wavenumber(m) * s;
            if (2 * m == nx)
                c[m] *= std::cos(ph);
            else
                c[m] *= std::complex<double>(std::cos(ph), std::sin(ph));
        }
        auto out = sp.inverse(c);
        // a column that is not smooth enough for the Fourier shift goes through the positive scheme
        if (std::any_of(out.begin(), out.end(), [](double x) { return x < 0.0; })) {
            pfc_periodic(col, s / sgrid.dx);
            out = col;
        }
        for (int ix = 0; ix < nx; ++ix) F[ix * N + k] = out[ix];
    }
}

namespace {

std::vector<double> pfc_flux(std::span<const double> f, double a, bool limit) {
    const int n = static_cast<int>(f.size());
    std::vector<double> flux(n + 1, 0.0); // flux[j+1] sits between cells j and j+1
    for (int j = 0; j + 1 < n; ++j) {
        const double fj = f[j], fp = f[j + 1], fm = j > 0 ? f[j - 1] : 0.0;
        double ep = 1.0, em = 1.0;
        if (limit) {
            if (fp > fj) ep = std::min(1.0, 2.0 * fj / (fp - fj));
            if (fj < fm) em = std::min(1.0, 2.0 * fj / (fm - fj));
        }
        flux[j + 1] = a * (fj + ep / 6.0 * (1.0 - a) * (2.0 - a) * (fp - fj) +
                           em / 6.0 * (1.0 - a) * (1.0 + a) * (fj - fm));
    }
    return flux;
}

void apply_flux(std::span<const double> f, const std::vector<double>& flux, std::vector<double>& out) {
    out.resize(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j] + flux[j] - flux[j + 1];
}

} // namespace

bool pfc_periodic(std::span<double> f, double shift) {
    const int n = static_cast<int>(f.size());
    if (shift == 0.0 || n == 0) return false;
    const bool rev = shift < 0.0;
    std::vector<double> g(f.begin(), f.end());
    if (rev) std::reverse(g.begin(), g.end());
    const double s = std::abs(shift);
    const long m = static_cast<long>(std::floor(s));
    const double a = s - static_cast<double>(m);
    auto at = [&](long i) { return g[static_cast<std::size_t>(((i % n) + n) % n)]; };
    // flux[j] between cells j and j+1 (periodic)
    std::vector<double> flux(n);
    for (int j = 0; j < n; ++j) {
        const double fj = at(j), fp = at(j + 1), fm = at(j - 1);
        flux[j] = a * (fj + (1.0 - a) * (2.0 - a) / 6.0 * (fp - fj) + (1.0 - a) * (1.0 + a) / 6.0 * (fj - fm));
    }
    std::vector<double> out(n);
    auto update = [&] {
        for (int j = 0; j < n; ++j) out[j] = g[j] + flux[(j + n - 1) % n] - flux[j];
    };
    update();
    bool fallback = false;
    for (int pass = 0; pass <= n; ++pass) {
        bool bad = false;
        for (int j = 0; j < n; ++j) {
            if (out[j] >= 0.0) continue;
            bad = true;
            flux[(j + n - 1) % n] = a * g[(j + n - 1) % n];
            flux[j] = a * g[j];
        }
        if (!bad) break;
        fallback = true;
        update();
    }
    for (int i = 0; i < n; ++i) g[i] = out[static_cast<std::size_t>((((i - m) % n) + n) % n)];
    if (rev) std::reverse(g.begin(), g.end());
    std::copy(g.begin(), g.end(), f.begin());
    return fallback;
}

bool pfc_line(std::span<double> f, double shift, bool force_limiter) {
    if (!(std::abs(shift) < 1.0)) throw NumericalError("pfc_line: shift of " + std::to_string(shift) + " cells");
    if (shift == 0.0) return false;
    const bool rev = shift < 0.0;
    std::vector<double> g(f.begin(), f.end()), out;
    if (rev) std::reverse(g.begin(), g.end());
    const double a = std::abs(shift);
    auto flux = pfc_flux(g, a, force_limiter);
    apply_flux(g, flux, out);
    // donor-cell flux on both faces of any cell that would go negative
    bool fallback = false;
    const int n = static_cast<int>(g.size());
    for (int pass = 0; pass <= n; ++pass) {
        bool bad = false;
        for (int j = 0; j < n; ++j) {
            if (out[j] >= 0.0) continue;
            bad = true;
            if (j > 0) flux[j] = a * g[j - 1];
            if (j + 1 < n) flux[j + 1] = a * g[j];
        }
        if (!bad) break;
        fallback = true;
        apply_flux(g, flux, out);
    }
    if (rev) std::reverse(out.begin(), out.end());
    std::copy(out.begin(), out.end(), f.begin());
    return force_limiter || fallback;
}

bool sl_log_line(std::span<double> f, double shift) {
    const int n = static_cast<int>(f.size());
    if (!(std::abs(shift) < 1.0)) throw NumericalError("sl_log_line: shift of " + std::to_string(shift) + " cells");
    if (shift == 0.0) return true;
    if (n < 4) return false;
    std::vector<double> L(n), out(n);
    double m0 = 0.0;
    for (int j = 0; j < n; ++j) {
        if (!(f[j] > 0.0) || !std::isfinite(f[j])) return false;
        L[j] = std::log(f[j]);
        m0 += f[j];
    }
    // foot of node i sits in [i-1, i] for shift > 0, [i, i+1] otherwise; stencil c-1..c+2 around it
    const int off = shift > 0.0 ? -2 : -1;
    double m1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const int c = std::clamp(i + off, 0, n - 4);
        const double y = i - shift - c;
        const double l = -L[c] * (y - 1) * (y - 2) * (y - 3) / 6.0 + L[c + 1] * y * (y - 2) * (y - 3) / 2.0 -
                         L[c + 2] * y * (y - 1) * (y - 3) / 2.0 + L[c + 3] * y * (y - 1) * (y - 2) / 6.0;
        out[i] = std::exp(l);
        m1 += out[i];
    }
    if (!(m1 > 0.0) || !std::isfinite(m1)) return false;
    const double r = m0 / m1;
    for (int i = 0; i < n; ++i) f[i] = out[i] * r;
    return true;
}

int shift_v1(std::vector<double>& F, std::span<const double> E, double tau, const VelocityGrid& vgrid, int n_x) {
    const int n = vgrid.n_per_axis;
    const std::size_t N = vgrid.size();
    const std::size_t stride = static_cast<std::size_t>(n) * n;
    if (F.size() != static_cast<std::size_t>(n_x) * N || E.size() != static_cast<std::size_t>(n_x))
        throw PreconditionError("shift_v1: size mismatch");
    for (int ix = 0; ix < n_x; ++ix)
        if (!(std::abs(E[ix] * tau) < vgrid.h))
            throw NumericalError("velocity CFL violated: |E tau| = " + std::to_string(std::abs(E[ix] * tau)) +
                                 " >= h = " + std::to_string(vgrid.h));
    int limited = 0;
#pragma omp parallel for schedule(static) reduction(+ : limited)
    for (int ix = 0; ix < n_x; ++ix) {
        const double s = E[ix] * tau / vgrid.h;
        std::vector<double> line(n);
        for (std::size_t jk = 0; jk < stride; ++jk) {
            double* base = F.data() + ix * N + jk;
            for (int i = 0; i < n; ++i) line[i] = base[i * stride];
            if (!sl_log_line(line, s)) {
                pfc_line(line, s);
                ++limited;
            }
            for (int i = 0; i < n; ++i) base[i * stride] = line[i];
        }
    }
    return limited;
}

} // namespace hilbert
