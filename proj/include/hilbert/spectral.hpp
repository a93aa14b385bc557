#pragma once

#include <complex>
#include <span>
#include <vector>

namespace hilbert {

// Periodic Fourier tools on n equispaced points of [0, L).
class Spectral1D {
public:
    Spectral1D(int n, double length);

    int size() const { return n_; }
    double length() const { return length_; }
    double wavenumber(int m) const;  // 2 pi m / L

    std::vector<std::complex<double>> forward(std::span<const double> f) const;
    std::vector<double> inverse(std::span<const std::complex<double>> c) const;

    // order-th derivative; the optional 2/3 filter removes the top third of modes
    std::vector<double> derivative(std::span<const double> f, int order = 1, bool dealias = false) const;
    std::vector<double> dealias(std::span<const double> f) const;

    // Zero-mean phi with phi'' = source; source must have zero mean.
    std::vector<double> solve_poisson(std::span<const double> source) const;

    // Trigonometric interpolant of f and its first derivatives at x.
    void evaluate(std::span<const std::complex<double>> coeffs, double x, double* val, double* d1, double* d2,
                  double* d3) const;

private:
    int n_;
    double length_;
};

} // namespace hilbert
