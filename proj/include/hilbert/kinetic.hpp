#pragma once

#include <span>
#include <string>
#include <vector>

#include "hilbert/collision.hpp"
#include "hilbert/euler_poisson.hpp"
#include "hilbert/expansion.hpp"
#include "hilbert/grids.hpp"
#include "hilbert/maxwellian.hpp"

namespace hilbert {

struct KineticContext {
    SpatialGrid sgrid;
    VelocityGrid vgrid;
    // Collision substeps are capped at dt_guard * eps / max rate; 0 switches the cap off.
    double dt_guard = 0.5;
};

// Layout of F: x * vgrid.size() + node.
struct KineticField {
    double time = 0.0;
    double epsilon = 0.05;
    std::vector<double> F;
    std::vector<double> phi;
    CollisionConfig backend;
    double background = 1.0; // ion density in the Poisson solve, equal to the discrete mass / L
};

// Checks positivity, sets background from the discrete mass and solves for phi.
KineticField make_kinetic_field(std::vector<double> F, double epsilon, const CollisionConfig& backend,
                                const KineticContext& ctx, double time = 0.0);

std::vector<double> kinetic_density(std::span<const double> F, const KineticContext& ctx);
double total_mass(const KineticField& K, const KineticContext& ctx);
// Kinetic plus field energy.
double total_energy(const KineticField& K, const KineticContext& ctx);
double max_relaxation_rate(const KineticField& K, const KineticContext& ctx);

// BGK relaxation over dt, exact in time at frozen moments.
void relax_bgk(std::vector<double>& F, double dt, double epsilon, const CollisionConfig& cfg,
               const KineticContext& ctx);

// One Strang step: half transport, collision, half transport.
KineticField step_vpb(const KineticField& K, double dt, const KineticContext& ctx);

// Steps to t_target with dt <= dt_max and the relaxation cap.
KineticField advance_vpb(const KineticField& K, double t_target, double dt_max, const KineticContext& ctx,
                         int* steps = nullptr);

struct RemainderNorms {
    double l2_f = 0.0;
    double l2_sqrt_theta_f = 0.0;
    double l2_grad_phiR = 0.0;
    double winf_h = 0.0;      // sup (1+|v|^2)^(beta+1) |F_R| / sqrt(omega_M)
    double linf_h = 0.0;      // sup |h|
    double winf_grad_h = 0.0; // sup |grad_{x,v} h|, centred differences
    double dissipation = 0.0; // ||(I-P) f||_nu^2
};

struct RemainderView {
    std::vector<double> F_R;
    std::vector<double> f;
    std::vector<double> h;
    std::vector<double> phi_R;
    RemainderNorms norms;
};

// F_R = (F - F_exp) / eps^k, f = F_R / sqrt(omega), h = w F_R / sqrt(omega_M).
RemainderView extract_remainder(const KineticField& K, std::span<const double> F_exp, std::span<const double> phi_exp,
                                const FluidState& fluid, const ExpansionTruncation& tr, const KineticContext& ctx,
                                const GlobalMaxwellian& gm, const WeightSpec& ws);

struct EnergyBalanceReport {
    std::vector<double> t;
    std::vector<double> energy;
    std::vector<double> lhs;         // dE/dt + dissipation term
    std::vector<double> dissipation; // (delta0 / 2 eps) theta_M ||(I-P) f||_nu^2
    std::vector<double> rhs;         // right side with C = 1
    double C = 0.0;                  // smallest constant making lhs <= C rhs at every sample
    bool dissipation_nonnegative = true;
};

EnergyBalanceReport energy_balance_report(const std::vector<double>& t, const std::vector<RemainderNorms>& history,
                                          double epsilon, int k_trunc, double delta0, double theta_M,
                                          double p = 1.25);

// delta0 of the BGK surrogate against the nu-norm: min rate / max nu over the field.
double bgk_delta0(const FluidState& fluid, const KineticContext& ctx, const CollisionConfig& cfg);

struct TimeSeriesRow {
    double t = 0.0;
    double epsilon = 0.0;
    RemainderNorms norms;
    double mass = 0.0;
    double energy = 0.0;
};

void write_time_series(const std::string& path, const std::vector<TimeSeriesRow>& rows);

} // namespace hilbert
