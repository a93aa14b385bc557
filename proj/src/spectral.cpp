#include "hilbert/spectral.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "hilbert/error.hpp"
#include "hilbert/grids.hpp"

namespace hilbert {

namespace {

struct Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

// Planner calls are not thread-safe; execution with new arrays is.
const Plans& plans_for(int n) {
    static std::mutex mtx;
    static std::map<int, Plans> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    Plans p;
    p.r2c = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_1d(n, out, in, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    return cache.emplace(n, p).first->second;
}

} // namespace

Spectral1D::Spectral1D(int n, double length) : n_(n), length_(length) {
    if (n < 2) throw ConfigError("spectral grid needs at least 2 points");
    if (!(length > 0.0)) throw ConfigError("spectral period must be positive");
    plans_for(n);
}

double Spectral1D::wavenumber(int m) const { return 2.0 * std::numbers::pi * m / length_; }

std::vector<std::complex<double>> Spectral1D::forward(std::span<const double> f) const {
    if (static_cast<int>(f.size()) != n_) throw PreconditionError("spectral forward: length mismatch");
    std::vector<double> in(f.begin(), f.end());
    std::vector<std::complex<double>> out(n_ / 2 + 1);
    fftw_execute_dft_r2c(plans_for(n_).r2c, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<double> Spectral1D::inverse(std::span<const std::complex<double>> c) const {
    if (static_cast<int>(c.size()) != n_ / 2 + 1) throw PreconditionError("spectral inverse: length mismatch");
    std::vector<std::complex<double>> in(c.begin(), c.end());
    std::vector<double> out(n_);
    fftw_execute_dft_c2r(plans_for(n_).c2r, reinterpret_cast<fftw_complex*>(in.data()), out.data());
    for (double& x : out) x /= n_;
    return out;
}

std::vector<double> Spectral1D::derivative(std::span<const double> f, int order, bool dealias_modes) const {
    // shifting by f[0] keeps constants exactly stationary
    std::vector<double> g(f.begin(), f.end());
    const double shift = g.empty() ? 0.0 : g[0];
    for (double& x : g) x -= shift;
    auto c = forward(g);
    const int kmax = n_ / 3;
    for (int m = 0; m <= n_ / 2; ++m) {
        std::complex<double> ik(0.0, wavenumber(m));
        std::complex<double> fac = std::pow(ik, order);
        if (m == 0 || (order % 2 == 1 && 2 * m == n_) || (dealias_modes && m > kmax)) fac = 0.0;
        c[m] *= fac;
    }
    return inverse(c);
}

std::vector<double> Spectral1D::dealias(std::span<const double> f) const {
    auto c = forward(f);
    const int kmax = n_ / 3;
    for (int m = kmax + 1; m <= n_ / 2; ++m) c[m] = 0.0;
    return inverse(c);
}

std::vector<double> Spectral1D::solve_poisson(std::span<const double> source) const {
    if (static_cast<int>(source.size()) != n_) throw PreconditionError("solve_poisson: length mismatch");
    double total = 0.0, scale = 0.0;
    for (double s : source) scale += std::abs(s);
    total = pairwise_sum(source) * (length_ / n_);
    scale *= length_ / n_;
    if (std::abs(total) > 1e-8 * std::max(1.0, scale))
        throw PreconditionError("solve_poisson: source has nonzero mean (integral " + std::to_string(total) +
                                "); neutrality violated");
    auto c = forward(source);
    c[0] = 0.0;
    for (int m = 1; m <= n_ / 2; ++m) {
        double k = wavenumber(m);
        c[m] /= -(k * k);
    }
    return inverse(c);
}

void Spectral1D::evaluate(std::span<const std::complex<double>> c, double x, double* val, double* d1, double* d2,
                          double* d3) const {
    double s0 = c[0].real() / n_, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (int m = 1; m <= n_ / 2; ++m) {
        double k = wavenumber(m);
        double w = (2 * m == n_) ? 1.0 : 2.0;
        std::complex<double> e(std::cos(k * x), std::sin(k * x));
        std::complex<double> t = c[m] * e * (w / n_);
        s0 += t.real();
        // Nyquist mode has no odd derivative
        if (2 * m != n_) {
            s1 += (t * std::complex<double>(0.0, k)).real();
            s3 += (t * std::complex<double>(0.0, -k * k * k)).real();
        }
        s2 += -k * k * t.real();
    }
    if (val) *val = s0;
    if (d1) *d1 = s1;
    if (d2) *d2 = s2;
    if (d3) *d3 = s3;
}

} // namespace hilbert
