#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hilbert/grids.hpp"
#include "hilbert/maxwellian.hpp"

namespace hilbert {

enum class Backend { full_hard_sphere, bgk };

// lattice: post-collision pairs restricted to grid nodes (exact invariants).
// interpolated: continuous post-collision velocities, trilinear gain.
enum class GainRule { lattice, interpolated };

struct CollisionConfig {
    SphereQuadrature sphere_quad = build_sphere_quadrature();
    Backend backend = Backend::full_hard_sphere;
    double bgk_rate_scale = 1.0;
    GainRule gain_rule = GainRule::lattice;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LinearizedOperator {
    MaxwellianParams params;
    VelocityGrid grid;
    Backend backend = Backend::full_hard_sphere;
    std::vector<double> nu_diag;   // multiplication part
    RowMatrix k_matrix;            // empty for bgk
    double nu0 = 0.0;              // nu_diag >= 2 nu0
    double bgk_rate = 0.0;
    std::vector<double> nu_weight; // collision frequency used in the nu-norm
    std::vector<double> sqrt_omega;
    NullBasis basis;
    double symmetry_defect = 0.0;

    std::vector<double> apply(std::span<const double> g) const;
};

// Hard-sphere Q(G1, G2) on the grid.
std::vector<double> collide(std::span<const double> G1, std::span<const double> G2, const VelocityGrid& grid,
                            const CollisionConfig& cfg);

// Integral of |v - v*| omega(v*) dv* in closed form.
double collision_frequency(const MaxwellianParams& p, const Vec3& v);

// Loss-term frequency of the discrete operator at each node for density G.
std::vector<double> loss_frequency(std::span<const double> G, const VelocityGrid& grid);

LinearizedOperator build_linearized(const MaxwellianParams& p, const VelocityGrid& grid, const CollisionConfig& cfg);

// Loads k_matrix from cache_dir when a matching dump exists, otherwise builds and stores it.
LinearizedOperator build_linearized_cached(const MaxwellianParams& p, const VelocityGrid& grid,
                                           const CollisionConfig& cfg, const std::filesystem::path& cache_dir);

// Selected rows of the integral part, without forming the full matrix.
std::vector<std::vector<double>> kernel_rows(const MaxwellianParams& p, const VelocityGrid& grid,
                                             std::span<const std::size_t> rows);

struct SolveInfo {
    int iterations = 0;
    double residual = 0.0;
};

// Solves L g = (I - P) r on the microscopic subspace.
std::vector<double> invert_L(const LinearizedOperator& op, std::span<const double> r, SolveInfo* info = nullptr,
                             double tol = 1e-8);

// (1/sqrt(omega)) Q(sqrt(omega) g1, sqrt(omega) g2)
std::vector<double> gamma(const LinearizedOperator& op, std::span<const double> g1, std::span<const double> g2,
                          const CollisionConfig& cfg);

struct TransportCoefficients {
    double mu = 0.0;
    double kappa = 0.0;
};

TransportCoefficients transport_coefficients(const MaxwellianParams& p, const VelocityGrid& grid,
                                             const CollisionConfig& cfg);
TransportCoefficients transport_coefficients(const LinearizedOperator& op);

// Relaxation rate of the BGK surrogate at local parameters.
double bgk_rate(const MaxwellianParams& p, double scale);

// Discrete Maxwellian whose grid moments equal m exactly (Newton on the exponent).
std::vector<double> discrete_maxwellian(const Moments& m, const VelocityGrid& grid);

std::vector<double> bgk_surrogate(std::span<const double> F, const MaxwellianParams& p_of_F, double rate,
                                  const VelocityGrid& grid);

struct GapEstimate {
    double lambda6 = 0.0;        // smallest eigenvalue of L on the microscopic subspace
    double delta0 = 0.0;         // min <Lg,g>/||g||_nu^2 on the microscopic subspace
    double rayleigh_random = 0.0; // min over random microscopic samples
    int iterations = 0;
};

GapEstimate spectral_gap(const LinearizedOperator& op, int random_samples = 200, unsigned long long seed = 1);

double norm_nu(const LinearizedOperator& op, std::span<const double> g);

} // namespace hilbert

namespace hilbert {

// Q(F, F) for either backend; bgk uses the local rate and discrete Maxwellian.
std::vector<double> collision_Q(std::span<const double> F, const VelocityGrid& grid, const CollisionConfig& cfg);

// Quadratic part of Q around omega in the direction F1.
std::vector<double> quadratic_part(std::span<const double> omega, std::span<const double> F1,
                                   const VelocityGrid& grid, const CollisionConfig& cfg);

} // namespace hilbert
