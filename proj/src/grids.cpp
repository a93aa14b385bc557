#include "hilbert/grids.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hilbert/error.hpp"

namespace hilbert {

VelocityGrid build_velocity_grid(int n, double v_max) {
    if (n < 4) throw ConfigError("velocity grid needs at least 4 nodes per axis, got " + std::to_string(n));
    if (n % 2 != 0) throw ConfigError("velocity grid needs an even node count per axis, got " + std::to_string(n));
    if (!(v_max > 0.0)) throw ConfigError("velocity grid half-width must be positive");

    VelocityGrid g;
    g.n_per_axis = n;
    g.v_max = v_max;
    g.h = 2.0 * v_max / n;
    g.axis.resize(n);
    for (int i = 0; i < n / 2; ++i) {
        double a = -v_max + (i + 0.5) * g.h;
        g.axis[i] = a;
        g.axis[n - 1 - i] = -a;
    }
    std::size_t total = static_cast<std::size_t>(n) * n * n;
    g.nodes.resize(total);
    g.weights.assign(total, g.h * g.h * g.h);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                g.nodes[g.index(i, j, k)] = {g.axis[i], g.axis[j], g.axis[k]};
    return g;
}

SpatialGrid build_spatial_grid(int n_x, double length) {
    if (n_x < 2) throw ConfigError("spatial grid needs at least 2 nodes");
    if (!(length > 0.0)) throw ConfigError("spatial period must be positive");
    SpatialGrid g;
    g.n_x = n_x;
    g.length = length;
    g.dx = length / n_x;
    g.nodes.resize(n_x);
    for (int i = 0; i < n_x; ++i) g.nodes[i] = i * g.dx;
    return g;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

SphereQuadrature build_sphere_quadrature(int n_polar, int n_azimuth) {
    if (n_polar < 1 || n_azimuth < 1 || n_polar * n_azimuth < 8)
        throw ConfigError("sphere quadrature needs at least 8 directions");
    std::vector<double> mu, wmu;
    gauss_legendre(n_polar, mu, wmu);
    SphereQuadrature q;
    const double dphi = 2.0 * std::numbers::pi / n_azimuth;
    for (int a = 0; a < n_polar; ++a) {
        double s = std::sqrt(std::max(0.0, 1.0 - mu[a] * mu[a]));
        for (int b = 0; b < n_azimuth; ++b) {
            double phi = (b + 0.5) * dphi;
            Vec3 d{s * std::cos(phi), s * std::sin(phi), mu[a]};
            double nrm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            for (double& c : d) c /= nrm;
            q.directions.push_back(d);
            q.weights.push_back(wmu[a] * dphi);
        }
    }
    return q;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

double integrate_v(std::span<const double> values, const VelocityGrid& grid) {
    if (values.size() != grid.size())
        throw PreconditionError("integrate_v: length " + std::to_string(values.size()) +
                                " does not match grid size " + std::to_string(grid.size()));
    const int n = grid.n_per_axis;
    const int m = n / 2;
    // fold axis 0, then 1, then 2
    std::vector<double> a(static_cast<std::size_t>(m) * n * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                a[(static_cast<std::size_t>(i) * n + j) * n + k] =
                    values[grid.index(i, j, k)] + values[grid.index(n - 1 - i, j, k)];
    std::vector<double> b(static_cast<std::size_t>(m) * m * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < n; ++k)
                b[(static_cast<std::size_t>(i) * m + j) * n + k] =
                    a[(static_cast<std::size_t>(i) * n + j) * n + k] +
                    a[(static_cast<std::size_t>(i) * n + (n - 1 - j)) * n + k];
    std::vector<double> c(static_cast<std::size_t>(m) * m * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                c[(static_cast<std::size_t>(i) * m + j) * m + k] =
                    b[(static_cast<std::size_t>(i) * m + j) * n + k] +
                    b[(static_cast<std::size_t>(i) * m + j) * n + (n - 1 - k)];
    return pairwise_sum(c) * grid.cell_volume();
}

double integrate_x(std::span<const double> values, const SpatialGrid& grid) {
    if (static_cast<int>(values.size()) != grid.n_x)
        throw PreconditionError("integrate_x: length mismatch");
    return pairwise_sum(values) * grid.dx;
}

} // namespace hilbert
