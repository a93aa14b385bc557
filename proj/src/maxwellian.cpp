#include "hilbert/maxwellian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hilbert/error.hpp"

namespace hilbert {

GlobalMaxwellian make_global_maxwellian(double rho_bar, double K_eos) {
    if (!(rho_bar > 0.0) || !(K_eos > 0.0))
        throw ConfigError("global Maxwellian needs positive rho_bar and K");
    GlobalMaxwellian gm;
    gm.rho_bar = rho_bar;
    gm.K_eos = K_eos;
    gm.theta_M = K_eos * std::pow(rho_bar, 2.0 / 3.0);
    return gm;
}

MaxwellianParams global_params(const GlobalMaxwellian& gm) {
    return MaxwellianParams{1.0, {0.0, 0.0, 0.0}, gm.theta_M};
}

double maxwellian_at(const MaxwellianParams& p, const Vec3& v) {
    double c2 = 0.0;
    for (int d = 0; d < 3; ++d) c2 += (v[d] - p.u[d]) * (v[d] - p.u[d]);
    return p.rho / std::pow(2.0 * std::numbers::pi * p.theta, 1.5) * std::exp(-c2 / (2.0 * p.theta));
}

std::vector<double> local_maxwellian(const MaxwellianParams& p, const VelocityGrid& grid) {
    if (!(p.rho > 0.0) || !(p.theta > 0.0))
        throw PreconditionError("local_maxwellian: rho and theta must be positive");
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = maxwellian_at(p, grid.nodes[i]);
    return out;
}

Moments moments(std::span<const double> F, const VelocityGrid& grid) {
    const std::size_t N = grid.size();
    std::vector<double> tmp(N);
    Moments m;
    m.rho = integrate_v(F, grid);
    for (int d = 0; d < 3; ++d) {
        for (std::size_t i = 0; i < N; ++i) tmp[i] = grid.nodes[i][d] * F[i];
        m.momentum[d] = integrate_v(tmp, grid);
    }
    for (std::size_t i = 0; i < N; ++i) {
        const Vec3& v = grid.nodes[i];
        tmp[i] = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * F[i];
    }
    m.energy = integrate_v(tmp, grid);
    return m;
}

MaxwellianParams params_from_moments(const Moments& m) {
    if (!(m.rho > 0.0)) throw NumericalError("non-positive density in moments");
    MaxwellianParams p;
    p.rho = m.rho;
    double u2 = 0.0;
    for (int d = 0; d < 3; ++d) {
        p.u[d] = m.momentum[d] / m.rho;
        u2 += p.u[d] * p.u[d];
    }
    p.theta = (m.energy / m.rho - u2) / 3.0;
    if (!(p.theta > 0.0)) throw NumericalError("non-positive temperature in moments");
    return p;
}

double inner_v(std::span<const double> a, std::span<const double> b, const VelocityGrid& grid) {
    if (a.size() != b.size()) throw PreconditionError("inner_v: length mismatch");
    std::vector<double> tmp(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) tmp[i] = a[i] * b[i];
    return integrate_v(tmp, grid);
}

double norm_v(std::span<const double> a, const VelocityGrid& grid) {
    return std::sqrt(inner_v(a, a, grid));
}

NullBasis null_basis(const MaxwellianParams& p, const VelocityGrid& grid) {
    if (!(p.rho > 0.0) || !(p.theta > 0.0))
        throw PreconditionError("null_basis: rho and theta must be positive");
    const std::size_t N = grid.size();
    NullBasis b;
    b.params = p;
    for (auto& c : b.chi) c.resize(N);
    const double sr = std::sqrt(p.rho);
    const double srt = std::sqrt(p.rho * p.theta);
    const double s6 = std::sqrt(6.0 * p.rho);
    for (std::size_t i = 0; i < N; ++i) {
        const Vec3& v = grid.nodes[i];
        double sw = std::sqrt(maxwellian_at(p, v));
        double c2 = 0.0;
        for (int d = 0; d < 3; ++d) {
            double c = v[d] - p.u[d];
            c2 += c * c;
            b.chi[d + 1][i] = c * sw / srt;
        }
        b.chi[0][i] = sw / sr;
        b.chi[4][i] = (c2 / p.theta - 3.0) * sw / s6;
    }
    for (int a = 0; a < 5; ++a)
        for (int c = a; c < 5; ++c) b.gram(a, c) = b.gram(c, a) = inner_v(b.chi[a], b.chi[c], grid);
    b.gram_defect = (b.gram - Eigen::Matrix<double, 5, 5>::Identity()).cwiseAbs().maxCoeff();
    b.gram_inv = b.gram.inverse();
    return b;
}

Eigen::Matrix<double, 5, 1> project_coeffs(std::span<const double> g, const NullBasis& basis,
                                           const VelocityGrid& grid) {
    Eigen::Matrix<double, 5, 1> r;
    for (int a = 0; a < 5; ++a) r(a) = inner_v(g, basis.chi[a], grid);
    return basis.gram_inv * r;
}

std::vector<double> project_P(std::span<const double> g, const NullBasis& basis,
                              const VelocityGrid& grid, double tol) {
    if (g.size() != grid.size()) throw PreconditionError("project_P: length mismatch");
    if (basis.gram_defect > tol)
        throw NumericalError("project_P: null basis is not orthonormal on this grid (Gram defect " +
                             std::to_string(basis.gram_defect) + ")");
    Eigen::Matrix<double, 5, 1> c = project_coeffs(g, basis, grid);
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 0.0;
        for (int a = 0; a < 5; ++a) s += c(a) * basis.chi[a][i];
        out[i] = s;
    }
    return out;
}

double weight_w(const Vec3& v, const WeightSpec& spec) {
    return std::pow(1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2], spec.beta);
}

} // namespace hilbert
