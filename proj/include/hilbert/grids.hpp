#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace hilbert {

using Vec3 = std::array<double, 3>;

// Uniform midpoint tensor grid on [-v_max, v_max]^3.
struct VelocityGrid {
    int n_per_axis = 0;
    double v_max = 0.0;
    double h = 0.0;
    std::vector<double> axis;  // axis[n-1-i] == -axis[i] exactly
    std::vector<Vec3> nodes;   // index (i*n + j)*n + k
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n_per_axis + j) * n_per_axis + k;
    }
    double cell_volume() const { return h * h * h; }
};

// Periodic interval [0, length) with n_x nodes.
struct SpatialGrid {
    int n_x = 0;
    double length = 0.0;
    double dx = 0.0;
    std::vector<double> nodes;
};

// Product rule: Gauss-Legendre in cos(theta), uniform in azimuth.
struct SphereQuadrature {
    std::vector<Vec3> directions;
    std::vector<double> weights;
};

VelocityGrid build_velocity_grid(int n_per_axis, double v_max);
SpatialGrid build_spatial_grid(int n_x, double length);
SphereQuadrature build_sphere_quadrature(int n_polar = 4, int n_azimuth = 8);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Fixed-order pairwise sum; the result does not depend on thread count.
double pairwise_sum(std::span<const double> v);

// Sum of weights*values. Folds mirror pairs along each axis first, so any
// integrand odd in one velocity component gives exactly zero.
double integrate_v(std::span<const double> values, const VelocityGrid& grid);

// Sum over x of values times dx.
double integrate_x(std::span<const double> values, const SpatialGrid& grid);

} // namespace hilbert
