#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hilbert/grids.hpp"

namespace hilbert {

struct MaxwellianParams {
    double rho = 1.0;
    Vec3 u{0.0, 0.0, 0.0};
    double theta = 1.0;
};

// Unit-density Maxwellian at rest with theta_M = K * rho_bar^(2/3).
struct GlobalMaxwellian {
    double theta_M = 1.0;
    double rho_bar = 1.0;
    double K_eos = 1.0;
};

struct WeightSpec {
    double beta = 3.5;
};

struct Moments {
    double rho = 0.0;
    Vec3 momentum{0.0, 0.0, 0.0};
    double energy = 0.0;
};

// chi_0..chi_4 sampled on the grid together with their grid Gram matrix.
struct NullBasis {
    MaxwellianParams params;
    std::array<std::vector<double>, 5> chi;
    Eigen::Matrix<double, 5, 5> gram;
    Eigen::Matrix<double, 5, 5> gram_inv;
    double gram_defect = 0.0;  // max |gram - I|
};

GlobalMaxwellian make_global_maxwellian(double rho_bar, double K_eos);
MaxwellianParams global_params(const GlobalMaxwellian& gm);

double maxwellian_at(const MaxwellianParams& p, const Vec3& v);
std::vector<double> local_maxwellian(const MaxwellianParams& p, const VelocityGrid& grid);

Moments moments(std::span<const double> F, const VelocityGrid& grid);

// rho, u, theta recovered from (mass, momentum, energy); throws if rho or theta <= 0.
MaxwellianParams params_from_moments(const Moments& m);

double inner_v(std::span<const double> a, std::span<const double> b, const VelocityGrid& grid);
double norm_v(std::span<const double> a, const VelocityGrid& grid);

NullBasis null_basis(const MaxwellianParams& p, const VelocityGrid& grid);

// Orthogonal projection onto span{chi}. Throws when the basis Gram matrix
// deviates from the identity by more than tol.
std::vector<double> project_P(std::span<const double> g, const NullBasis& basis,
                              const VelocityGrid& grid, double tol = 1e-4);

// Coefficients <g, chi_i> mapped through the inverse Gram matrix.
Eigen::Matrix<double, 5, 1> project_coeffs(std::span<const double> g, const NullBasis& basis,
                                           const VelocityGrid& grid);

double weight_w(const Vec3& v, const WeightSpec& spec);

} // namespace hilbert
