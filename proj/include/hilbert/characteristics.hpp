#pragma once

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <memory>
#include <vector>

#include "hilbert/grids.hpp"
#include "hilbert/spectral.hpp"

namespace hilbert {

// Potential depending on (tau, x1) only. The force on a particle is +d_x phi.
class FieldSampler {
public:
    virtual ~FieldSampler() = default;
    virtual double t_min() const { return -std::numeric_limits<double>::infinity(); }
    virtual double t_max() const { return std::numeric_limits<double>::infinity(); }
    // d_x phi, d_xx phi, d_xxx phi at (tau, x). Null pointers are skipped.
    virtual void eval(double tau, double x, double* d1, double* d2, double* d3) const = 0;
};

class ConstantField : public FieldSampler {
public:
    explicit ConstantField(double g) : g_(g) {}
    void eval(double, double, double* d1, double* d2, double* d3) const override;

private:
    double g_;
};

// phi = a cos(k x) cos(w tau); w = 0 gives a static wave.
class CosineField : public FieldSampler {
public:
    CosineField(double amplitude, double k, double w = 0.0) : a_(amplitude), k_(k), w_(w) {}
    void eval(double tau, double x, double* d1, double* d2, double* d3) const override;
    double second_derivative_bound() const { return std::abs(a_) * k_ * k_; }

private:
    double a_, k_, w_;
};

// Spectral snapshots of phi on a periodic grid, linear in time between snapshots.
class SnapshotField : public FieldSampler {
public:
    SnapshotField(const SpatialGrid& grid, std::vector<double> times, const std::vector<std::vector<double>>& phi);
    double t_min() const override { return times_.front(); }
    double t_max() const override { return times_.back(); }
    void eval(double tau, double x, double* d1, double* d2, double* d3) const override;

private:
    Spectral1D sp_;
    std::vector<double> times_;
    std::vector<std::vector<std::complex<double>>> coeffs_;
};

using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct PhasePoint {
    Vec3 x{};
    Vec3 v{};
};

struct TrajectorySample {
    double tau = 0.0;
    PhasePoint z;
};

// d(X, V)(tau) / d(x, v) with rows (X, V) and columns (x, v).
struct JacobianSample {
    double tau = 0.0;
    Matrix6d J = Matrix6d::Identity();

    Eigen::Matrix3d dX_dx() const { return J.block<3, 3>(0, 0); }
    Eigen::Matrix3d dX_dv() const { return J.block<3, 3>(0, 3); }
    Eigen::Matrix3d dV_dx() const { return J.block<3, 3>(3, 0); }
    Eigen::Matrix3d dV_dv() const { return J.block<3, 3>(3, 3); }
};

struct Trajectory {
    double t_anchor = 0.0;
    PhasePoint anchor;
    std::vector<TrajectorySample> samples;
    std::vector<JacobianSample> jacobians;
};

struct TrajectoryOptions {
    double max_step = 1e-3;
};

// X, V at every tau in tau_list (any order, each within [field.t_min, t]).
Trajectory integrate_trajectory(double t, const PhasePoint& anchor, const FieldSampler& field,
                                const std::vector<double>& tau_list, const TrajectoryOptions& opt = {});

// As above, with the 6x6 variational system carried alongside.
Trajectory variational_jacobian(double t, const PhasePoint& anchor, const FieldSampler& field,
                                const std::vector<double>& tau_list, const TrajectoryOptions& opt = {});

// Plain flow map from (t0, z0) to t1; either direction.
PhasePoint flow(double t0, const PhasePoint& z0, double t1, const FieldSampler& field,
                const TrajectoryOptions& opt = {});

std::vector<Trajectory> batch_variational(double t, const std::vector<PhasePoint>& anchors,
                                          const FieldSampler& field, const std::vector<double>& tau_list,
                                          const TrajectoryOptions& opt = {});

struct WindowReport {
    bool det_dX_dv = true;  // 1/2 |t-tau|^3 <= |det dX/dv| <= 2 |t-tau|^3
    bool norm_dX_dv = true; // |dX/dv| <= 2 |t-tau|
    bool det_dV_dv = true;  // 1/2 <= |det dV/dv| <= 2
    bool det_dX_dx = true;  // 1/2 <= |det dX/dx| <= 2
    double T0 = 0.0;        // largest sampled |t - tau| up to which all four hold
    double ratio_min = 1.0; // det dX/dv / (tau - t)^3 over the samples
    double ratio_max = 1.0;
    double volume_defect = 0.0; // max |det J - 1|

    bool all() const { return det_dX_dv && norm_dX_dv && det_dV_dv && det_dX_dx; }
};

// Samples at tau == t only enter the volume check.
WindowReport jacobian_window_check(const std::vector<JacobianSample>& jacobians, double t, double T0_candidate);

// Largest window from a uniform tau grid of spacing d_tau reaching back span.
double empirical_T0(double t, const PhasePoint& anchor, const FieldSampler& field, double span, double d_tau,
                    const TrajectoryOptions& opt = {});

// Local L2 norm over x1 in [x0 - half_width, x0 + half_width] of |d_x1 d_v X|^2 + |d_v d_v X|^2 at tau,
// by central differences of the variational Jacobian.
double w2_monitor(double t, double tau, const PhasePoint& anchor, double half_width, int n_x,
                  const FieldSampler& field, double delta = 1e-4, const TrajectoryOptions& opt = {});

} // namespace hilbert
