#pragma once

#include <string>
#include <vector>

#include "hilbert/config.hpp"
#include "hilbert/euler_poisson.hpp"
#include "hilbert/expansion.hpp"
#include "hilbert/kinetic.hpp"

namespace hilbert {

std::string git_describe();

struct Scenario1D {
    SpatialGrid sgrid;
    VelocityGrid vgrid;
    CollisionConfig coll;
    FluidState fluid0;
};

Scenario1D build_scenario(const RunConfig& cfg);

// Grid Maxwellian whose discrete moments equal (rho, rho u, rho |u|^2 + 3 rho theta) at every x.
std::vector<double> grid_maxwellian_field(const FluidState& fluid, const VelocityGrid& vgrid);

struct EpsilonRun {
    double epsilon = 0.0;
    double sup_dist = 0.0;
    int kinetic_steps = 0;
    std::vector<double> dist;
    std::vector<TimeSeriesRow> series;
    double delta0 = 0.0;
    double energy_C = 0.0;
    bool dissipation_nonnegative = true;
    double eps32_winf_h_initial = 0.0;
    double eps32_winf_h_max = 0.0;
    double l2_energy_initial = 0.0; // ||sqrt(theta0) f||^2 + ||grad phi_R||^2
    double l2_energy_max = 0.0;
    double min_dissipation = 0.0;
};

// Euler-Poisson, first coefficient and kinetic run at one epsilon, sampled every sample_interval.
EpsilonRun run_single_epsilon(const RunConfig& cfg, double epsilon);

struct ConvergenceRow {
    double epsilon = 0.0;
    double sup_t_l2_dist = 0.0;
};

struct SlopeFit {
    double slope = 0.0;
    double slope_ci = 0.0; // half-width of the 95% interval; NaN with fewer than three rows
    bool degenerate = false;
};

// Least squares on (log eps, log dist). Degenerate when a distance is at rounding level.
SlopeFit fit_loglog(const std::vector<ConvergenceRow>& rows, double floor = 1e-12);

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;
    double slope_ci = 0.0;
    bool degenerate = false;
    std::vector<EpsilonRun> runs;
};

ConvergenceReport run_convergence_study(const RunConfig& cfg);

// convergence.csv, summary.json and one time-series CSV per epsilon.
void emit_report(const ConvergenceReport& report, const RunConfig& cfg, const std::string& dir);

// t at which the expansion stops being controlled, eps^{-(2k-3)/(2(2k-2))}; k >= 2.
double validity_horizon(double epsilon, int k);

// euler subcommand: fluid run with snapshots and the decay diagnostic.
struct EulerSummary {
    int steps = 0;
    DecayReport decay;
    double max_neutrality_defect = 0.0;
};
EulerSummary run_euler(const RunConfig& cfg, const std::string& dir);

// expand subcommand: coupled fluid / first-coefficient run.
struct ExpandSummary {
    int steps = 0;
    double symmetrizer_initial = 0.0;
    double symmetrizer_max = 0.0;
};
ExpandSummary run_expand(const RunConfig& cfg, const std::string& dir);

} // namespace hilbert
