#pragma once

#include <span>
#include <vector>

#include "hilbert/grids.hpp"

namespace hilbert {

// F(x, v) <- F(x - v1 tau, v) for every velocity column, by Fourier phase shift.
// Layout x * vgrid.size() + node. The mean mode is untouched, so mass is exact.
// Columns the Fourier shift would make negative are moved with pfc_periodic instead.
void shift_x(std::vector<double>& F, const SpatialGrid& sgrid, const VelocityGrid& vgrid, double tau);

// One conservative step of f_t + a f_y = 0 on a line of cells with zero flux at both ends.
// shift = a tau / h in cells, |shift| < 1. Third-order fluxes; faces of a cell that would go
// negative fall back to donor-cell fluxes. force_limiter switches to the slope-limited form
// everywhere instead. Returns whether either safeguard was used.
bool pfc_line(std::span<double> f, double shift, bool force_limiter = false);

// Periodic conservative shift by any number of cells, same fluxes and fallback as pfc_line.
bool pfc_periodic(std::span<double> f, double shift);

// Semi-Lagrangian f(y) <- f(y - shift) on point samples, |shift| < 1 cell. Cubic Lagrange
// interpolation of log f at the feet (exact on Gaussian lines), then the line is rescaled to
// its old sum. Returns false and leaves f alone if some entry is not strictly positive.
bool sl_log_line(std::span<double> f, double shift);

// F(x, v) <- F(x, v - E(x) tau e1) along every v1 line with sl_log_line; lines with zero or
// negative entries go through pfc_line. Throws NumericalError when |E tau| >= h.
// Returns the number of lines that were not handled by sl_log_line.
int shift_v1(std::vector<double>& F, std::span<const double> E, double tau, const VelocityGrid& vgrid, int n_x);

} // namespace hilbert
