#pragma once

#include <span>
#include <string>
#include <vector>

#include "hilbert/grids.hpp"
#include "hilbert/spectral.hpp"

namespace hilbert {

constexpr double kGamma = 5.0 / 3.0;

struct FluidState {
    double time = 0.0;
    std::vector<double> rho;
    std::vector<double> u;
    std::vector<double> theta;
    std::vector<double> phi;
    double K_eos = 1.0;
    double rho_bar = 1.0;
};

struct FluidRhs {
    std::vector<double> rho_t;
    std::vector<double> u_t;
};

// Fills theta = K rho^(2/3) and phi from the Poisson equation.
FluidState make_fluid_state(const SpatialGrid& grid, std::vector<double> rho, std::vector<double> u, double K_eos,
                            double rho_bar, double time = 0.0);

// rho = rho_bar + amplitude cos(k x), u = 0, k = 2 pi m / L.
FluidState standing_wave(const SpatialGrid& grid, double amplitude, int mode, double K_eos, double rho_bar);

std::vector<double> solve_poisson(std::span<const double> source, const SpatialGrid& grid);

FluidRhs euler_poisson_rhs(const FluidState& s, const SpatialGrid& grid);

// Largest stable step from dt * max(|u| + sqrt(gamma theta) + 1) / dx <= 0.5.
double cfl_limit(const FluidState& s, const SpatialGrid& grid);

FluidState step_euler_poisson(const FluidState& s, double dt, const SpatialGrid& grid);

// Linear frequency sqrt(rho_bar + gamma K rho_bar^(2/3) k^2).
double plasma_frequency(double rho_bar, double K_eos, double k);

// Angular frequency from interpolated zero crossings of a sampled signal.
double zero_crossing_frequency(std::span<const double> t, std::span<const double> signal);

// cos(k x) coefficient of (f - mean f).
double cosine_mode(std::span<const double> f, const SpatialGrid& grid, int mode);

struct DecaySample {
    double t = 0.0;
    double sup_drho = 0.0;
    double sup_u = 0.0;
    double sup_dphi = 0.0;
};

struct DecayReport {
    std::vector<DecaySample> samples;
    double fitted_exponent = 0.0;  // slope of log(sum) against log(1+t)
    double growth_ratio = 0.0;     // max sum / initial sum
    bool bounded = true;           // never exceeded twice the initial sum
};

DecaySample decay_sample(const FluidState& s, const SpatialGrid& grid);
DecayReport measure_decay(const std::vector<FluidState>& history, const SpatialGrid& grid);

double neutrality_defect(const FluidState& s, const SpatialGrid& grid);

void write_fluid_snapshot(const std::string& path, const FluidState& s, const SpatialGrid& grid);

} // namespace hilbert
