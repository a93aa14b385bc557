#include "hilbert/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hilbert/error.hpp"
#include "hilbert/parallel.hpp"

namespace hilbert {

void ConstantField::eval(double, double, double* d1, double* d2, double* d3) const {
    if (d1) *d1 = g_;
    if (d2) *d2 = 0.0;
    if (d3) *d3 = 0.0;
}

void CosineField::eval(double tau, double x, double* d1, double* d2, double* d3) const {
    const double tt = w_ == 0.0 ? 1.0 : std::cos(w_ * tau);
    const double s = std::sin(k_ * x), c = std::cos(k_ * x);
    if (d1) *d1 = -a_ * k_ * s * tt;
    if (d2) *d2 = -a_ * k_ * k_ * c * tt;
    if (d3) *d3 = a_ * k_ * k_ * k_ * s * tt;
}

SnapshotField::SnapshotField(const SpatialGrid& grid, std::vector<double> times,
                             const std::vector<std::vector<double>>& phi)
    : sp_(grid.n_x, grid.length), times_(std::move(times)) {
    if (times_.empty() || times_.size() != phi.size()) throw PreconditionError("SnapshotField: times/phi mismatch");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1])) throw PreconditionError("SnapshotField: times must increase");
    for (const auto& p : phi) coeffs_.push_back(sp_.forward(p));
}

void SnapshotField::eval(double tau, double x, double* d1, double* d2, double* d3) const {
    if (tau < times_.front() - 1e-12 || tau > times_.back() + 1e-12)
        throw PreconditionError("SnapshotField: tau outside the recorded range");
    if (times_.size() == 1) {
        sp_.evaluate(coeffs_[0], x, nullptr, d1, d2, d3);
        return;
    }
    auto it = std::upper_bound(times_.begin(), times_.end(), tau);
    std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - times_.begin()), 1, times_.size() - 1) - 1;
    const double w = std::clamp((tau - times_[i]) / (times_[i + 1] - times_[i]), 0.0, 1.0);
    double a[3], b[3];
    sp_.evaluate(coeffs_[i], x, nullptr, &a[0], &a[1], &a[2]);
    sp_.evaluate(coeffs_[i + 1], x, nullptr, &b[0], &b[1], &b[2]);
    if (d1) *d1 = (1 - w) * a[0] + w * b[0];
    if (d2) *d2 = (1 - w) * a[1] + w * b[1];
    if (d3) *d3 = (1 - w) * a[2] + w * b[2];
}

namespace {

using State = Eigen::Matrix<double, 6, 1>;

struct Aug {
    State y;
    Matrix6d J;
};

void check_range(const FieldSampler& f, double a, double b) {
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (lo < f.t_min() - 1e-12 || hi > f.t_max() + 1e-12)
        throw PreconditionError("trajectory: time " + std::to_string(lo < f.t_min() ? lo : hi) +
                                " outside the field's range");
}

State rhs(const FieldSampler& f, double tau, const State& y) {
    double g;
    f.eval(tau, y[0], &g, nullptr, nullptr);
    State d;
    d << y[3], y[4], y[5], g, 0.0, 0.0;
    return d;
}

Aug rhs_aug(const FieldSampler& f, double tau, const Aug& s) {
    double g, h;
    f.eval(tau, s.y[0], &g, &h, nullptr);
    Aug d;
    d.y << s.y[3], s.y[4], s.y[5], g, 0.0, 0.0;
    d.J.setZero();
    d.J.topRows<3>() = s.J.bottomRows<3>();
    d.J.row(3) = h * s.J.row(0);
    return d;
}

State rk4(const FieldSampler& f, double tau, const State& y, double h) {
    State k1 = rhs(f, tau, y);
    State k2 = rhs(f, tau + h / 2, y + h / 2 * k1);
    State k3 = rhs(f, tau + h / 2, y + h / 2 * k2);
    State k4 = rhs(f, tau + h, y + h * k3);
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

Aug rk4(const FieldSampler& f, double tau, const Aug& s, double h) {
    auto add = [](const Aug& a, double c, const Aug& b) { return Aug{a.y + c * b.y, a.J + c * b.J}; };
    Aug k1 = rhs_aug(f, tau, s);
    Aug k2 = rhs_aug(f, tau + h / 2, add(s, h / 2, k1));
    Aug k3 = rhs_aug(f, tau + h / 2, add(s, h / 2, k2));
    Aug k4 = rhs_aug(f, tau + h, add(s, h, k3));
    return Aug{s.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y), s.J + h / 6 * (k1.J + 2 * k2.J + 2 * k3.J + k4.J)};
}

template <class S>
S advance(const FieldSampler& f, double t0, const S& s0, double t1, double max_step) {
    if (t0 == t1) return s0;
    const double span = t1 - t0;
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(span) / max_step - 1e-9)));
    const double h = span / n;
    S s = s0;
    for (int i = 0; i < n; ++i) s = rk4(f, t0 + i * h, s, h);
    return s;
}

State pack(const PhasePoint& z) {
    State y;
    y << z.x[0], z.x[1], z.x[2], z.v[0], z.v[1], z.v[2];
    return y;
}

PhasePoint unpack(const State& y) { return PhasePoint{{y[0], y[1], y[2]}, {y[3], y[4], y[5]}}; }

// Walks from t through tau_list in order of increasing distance from t, on both sides.
template <class S, class Emit>
void sweep(const FieldSampler& f, double t, const S& s0, const std::vector<double>& taus, double max_step, Emit emit) {
    if (!(max_step > 0.0)) throw PreconditionError("trajectory: max_step must be positive");
    std::vector<std::size_t> order(taus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (double tau : taus) {
        if (tau > t + 1e-12) throw PreconditionError("trajectory: tau must not exceed the anchor time");
        check_range(f, tau, t);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return taus[a] > taus[b]; });
    double cur_t = t;
    S cur = s0;
    for (std::size_t i : order) {
        cur = advance(f, cur_t, cur, taus[i], max_step);
        cur_t = taus[i];
        emit(i, cur);
    }
}

} // namespace

Trajectory integrate_trajectory(double t, const PhasePoint& anchor, const FieldSampler& field,
                                const std::vector<double>& tau_list, const TrajectoryOptions& opt) {
    Trajectory tr;
    tr.t_anchor = t;
    tr.anchor = anchor;
    tr.samples.resize(tau_list.size());
    sweep(field, t, pack(anchor), tau_list, opt.max_step, [&](std::size_t i, const State& y) {
        tr.samples[i] = TrajectorySample{tau_list[i], tau_list[i] == t ? anchor : unpack(y)};
    });
    return tr;
}

Trajectory variational_jacobian(double t, const PhasePoint& anchor, const FieldSampler& field,
                                const std::vector<double>& tau_list, const TrajectoryOptions& opt) {
    Trajectory tr;
    tr.t_anchor = t;
    tr.anchor = anchor;
    tr.samples.resize(tau_list.size());
    tr.jacobians.resize(tau_list.size());
    Aug s0{pack(anchor), Matrix6d::Identity()};
    sweep(field, t, s0, tau_list, opt.max_step, [&](std::size_t i, const Aug& s) {
        const bool at_anchor = tau_list[i] == t;
        tr.samples[i] = TrajectorySample{tau_list[i], at_anchor ? anchor : unpack(s.y)};
        tr.jacobians[i] = JacobianSample{tau_list[i], at_anchor ? Matrix6d::Identity() : s.J};
    });
    return tr;
}

PhasePoint flow(double t0, const PhasePoint& z0, double t1, const FieldSampler& field,
                const TrajectoryOptions& opt) {
    check_range(field, t0, t1);
    return unpack(advance(field, t0, pack(z0), t1, opt.max_step));
}

std::vector<Trajectory> batch_variational(double t, const std::vector<PhasePoint>& anchors,
                                          const FieldSampler& field, const std::vector<double>& tau_list,
                                          const TrajectoryOptions& opt) {
    std::vector<Trajectory> out(anchors.size());
    ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(anchors.size()); ++i)
        slot.run([&] { out[i] = variational_jacobian(t, anchors[i], field, tau_list, opt); });
    slot.rethrow();
    return out;
}

WindowReport jacobian_window_check(const std::vector<JacobianSample>& jac, double t, double T0_candidate) {
    WindowReport r;
    std::vector<const JacobianSample*> order;
    for (const auto& j : jac) order.push_back(&j);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(t - a->tau) < std::abs(t - b->tau); });
    bool intact = true;
    r.T0 = 0.0;
    r.ratio_min = std::numeric_limits<double>::infinity();
    r.ratio_max = -std::numeric_limits<double>::infinity();
    for (const JacobianSample* j : order) {
        const double s = std::abs(t - j->tau);
        r.volume_defect = std::max(r.volume_defect, std::abs(j->J.determinant() - 1.0));
        if (s == 0.0) continue;
        const double dxv = std::abs(j->dX_dv().determinant());
        const double ratio = dxv / (s * s * s);
        const double nrm = j->dX_dv().jacobiSvd().singularValues()(0);
        const double dvv = std::abs(j->dV_dv().determinant());
        const double dxx = std::abs(j->dX_dx().determinant());
        const bool b1 = ratio >= 0.5 && ratio <= 2.0;
        const bool b2 = nrm <= 2.0 * s;
        const bool b3 = dvv >= 0.5 && dvv <= 2.0;
        const bool b4 = dxx >= 0.5 && dxx <= 2.0;
        if (intact && b1 && b2 && b3 && b4)
            r.T0 = s;
        else
            intact = false;
        if (s <= T0_candidate + 1e-12) {
            r.ratio_min = std::min(r.ratio_min, ratio);
            r.ratio_max = std::max(r.ratio_max, ratio);
            r.det_dX_dv = r.det_dX_dv && b1;
            r.norm_dX_dv = r.norm_dX_dv && b2;
            r.det_dV_dv = r.det_dV_dv && b3;
            r.det_dX_dx = r.det_dX_dx && b4;
        }
    }
    if (r.ratio_min > r.ratio_max) r.ratio_min = r.ratio_max = 1.0;
    return r;
}

double empirical_T0(double t, const PhasePoint& anchor, const FieldSampler& field, double span, double d_tau,
                    const TrajectoryOptions& opt) {
    if (!(d_tau > 0.0) || !(span > 0.0)) throw PreconditionError("empirical_T0: span and d_tau must be positive");
    const int n = static_cast<int>(std::floor(span / d_tau + 1e-9));
    std::vector<double> taus;
    for (int i = 1; i <= n; ++i) taus.push_back(t - i * d_tau);
    auto tr = variational_jacobian(t, anchor, field, taus, opt);
    return jacobian_window_check(tr.jacobians, t, span).T0;
}

double w2_monitor(double t, double tau, const PhasePoint& anchor, double half_width, int n_x,
                  const FieldSampler& field, double delta, const TrajectoryOptions& opt) {
    if (n_x < 2) throw PreconditionError("w2_monitor: need at least two x samples");
    const double dx = 2.0 * half_width / (n_x - 1);
    std::vector<double> vals(n_x);
    auto dXdv = [&](const PhasePoint& z) {
        return variational_jacobian(t, z, field, {tau}, opt).jacobians[0].dX_dv();
    };
    for (int i = 0; i < n_x; ++i) {
        PhasePoint z = anchor;
        z.x[0] = anchor.x[0] - half_width + i * dx;
        double acc = 0.0;
        // x1 direction, then the three velocity directions
        for (int d = 0; d < 4; ++d) {
            PhasePoint zp = z, zm = z;
            if (d == 0) {
                zp.x[0] += delta;
                zm.x[0] -= delta;
            } else {
                zp.v[d - 1] += delta;
                zm.v[d - 1] -= delta;
            }
            Eigen::Matrix3d D = (dXdv(zp) - dXdv(zm)) / (2.0 * delta);
            acc += D.squaredNorm();
        }
        vals[i] = acc;
    }
    // trapezoid in x1
    double s = 0.0;
    for (int i = 0; i < n_x; ++i) s += (i == 0 || i == n_x - 1 ? 0.5 : 1.0) * vals[i];
    return std::sqrt(s * dx);
}

} // namespace hilbert
