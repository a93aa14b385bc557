#pragma once

#include <span>
#include <utility>
#include <vector>

#include "hilbert/collision.hpp"
#include "hilbert/euler_poisson.hpp"
#include "hilbert/grids.hpp"
#include "hilbert/maxwellian.hpp"
#include "hilbert/spectral.hpp"

namespace hilbert {

// micro_moments: stress and heat flux taken from the microscopic part of F1.
// closure: the viscosity/conductivity right sides with mu(theta), kappa(theta).
enum class ForcingMode { micro_moments, closure };

// mu and kappa at a few temperatures, cubic interpolation in between.
struct TransportTable {
    std::vector<double> theta;
    std::vector<double> mu;
    std::vector<double> kappa;

    double mu_at(double t) const;
    double kappa_at(double t) const;
};

// Each temperature gets its own grid with v_max = v_scale * sqrt(theta).
TransportTable build_transport_table(double theta_min, double theta_max, int n_per_axis, double v_scale,
                                     const CollisionConfig& cfg, int count = 8);

struct ExpansionContext {
    SpatialGrid sgrid;
    VelocityGrid vgrid;
    CollisionConfig coll;
    ForcingMode forcing = ForcingMode::micro_moments;
    TransportTable transport;  // closure mode only
};

// Per-x, per-v fields are stored row-major: index x * vgrid.size() + node.
struct CoeffState {
    int order = 1;
    double time = 0.0;
    std::vector<double> rho;
    std::vector<double> u;
    std::vector<double> theta;
    std::vector<double> phi;
    std::vector<double> micro;  // {I-P}(F_1 / sqrt(omega))
};

struct ExpansionTruncation {
    int k_trunc = 1;
    double epsilon = 0.05;
};

struct ExpansionState {
    FluidState fluid;
    CoeffState c1;
};

MaxwellianParams fluid_params(const FluidState& s, int ix);

// -{d_t + v.grad_x + grad_x phi0 . grad_v} omega / sqrt(omega) at every x.
std::vector<double> micro_source(const FluidState& fluid, const FluidRhs& rhs, const ExpansionContext& ctx);

// L^{-1} of micro_source, x by x.
std::vector<double> micro_F1(const FluidState& fluid, const FluidRhs& rhs, const ExpansionContext& ctx);

CoeffState zero_coeff(const ExpansionContext& ctx, double time);

struct CoeffForcing {
    std::vector<double> f;  // momentum
    std::vector<double> g;  // temperature
};

CoeffForcing closure_forcing(const FluidState& fluid, double mu, double kappa, const ExpansionContext& ctx);
CoeffForcing closure_forcing(const FluidState& fluid, const ExpansionContext& ctx);
CoeffForcing micro_forcing(const FluidState& fluid, std::span<const double> micro, const ExpansionContext& ctx);

// Advances (rho1, u1, theta1) over a frozen background with constant mu, kappa.
CoeffState step_coeff1(const CoeffState& c, const FluidState& fluid, double mu, double kappa, double dt,
                       const ExpansionContext& ctx);

ExpansionState init_expansion(const FluidState& fluid, const ExpansionContext& ctx);

// Coupled RK4 for (rho0, u0, rho1, u1, theta1); dt may be negative.
ExpansionState step_expansion(const ExpansionState& s, double dt, const ExpansionContext& ctx);

std::vector<double> assemble_F1(const CoeffState& c, const FluidState& fluid, const ExpansionContext& ctx);

// omega + sum eps^i F_i over the supplied coefficients.
std::vector<double> assemble_truncated(const FluidState& fluid, const std::vector<CoeffState>& coeffs,
                                       const ExpansionTruncation& tr, const ExpansionContext& ctx);

std::vector<double> local_maxwellian_field(const FluidState& fluid, const ExpansionContext& ctx);

std::pair<double, double> growth_factors(double epsilon, double t, int k);

// Source A of the remainder equation for k_trunc = 1.
std::vector<double> assemble_A(const ExpansionState& s, const ExpansionTruncation& tr, const ExpansionContext& ctx,
                               double dt_fd = 1e-3);

// d_t F + v d_x F + phi_x d_v F - Q(F,F)/eps for F = omega + eps F1, phi = phi0 + eps phi1.
std::vector<double> expansion_defect(const ExpansionState& s, const ExpansionTruncation& tr,
                                     const ExpansionContext& ctx, double dt_fd = 1e-3);
// Same defect for several eps at once; the fluid and coefficient stepping is done once.
std::vector<std::vector<double>> expansion_defects(const ExpansionState& s, std::span<const double> eps_list,
                                                  const ExpansionContext& ctx, double dt_fd = 1e-3);

double l2_xv(std::span<const double> field, const ExpansionContext& ctx);

// Energy of the symmetric hyperbolic form of the first-order system.
double symmetrizer_energy(const CoeffState& c, const FluidState& fluid, const ExpansionContext& ctx);

// d/dv1 of a per-x per-v field, fourth-order differences with zero extension.
std::vector<double> dv1(std::span<const double> field, const VelocityGrid& vgrid, int n_x);

// d/dx of a per-x per-v field, spectral.
std::vector<double> dx_field(std::span<const double> field, const SpatialGrid& sgrid, std::size_t n_v);

} // namespace hilbert
