#include "hilbert/collision.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "hilbert/binary_dump.hpp"
#include "hilbert/error.hpp"
#include "hilbert/rng.hpp"

namespace hilbert {

namespace {

// For a relative index offset D, post-collision offsets D' share |D'|^2 and
// the parity of every component with D; bucket = |D|^2 * 8 + parity bits.
struct LatticeTable {
    int n = 0;
    int smax = 0;
    std::vector<std::size_t> offset;
    std::vector<std::array<int, 3>> dprime;
    std::vector<double> weight;  // (4 pi / N_total) * |D| / 2, in index units
};

int parity_bits(int a, int b, int c) { return ((a & 1) << 2) | ((b & 1) << 1) | (c & 1); }

std::shared_ptr<const LatticeTable> make_table(int n) {
    auto t = std::make_shared<LatticeTable>();
    t->n = n;
    t->smax = 3 * (n - 1) * (n - 1);
    const std::size_t nb = static_cast<std::size_t>(t->smax + 1) * 8;
    std::vector<long> total(nb, 0);
    const int R = static_cast<int>(std::floor(std::sqrt(static_cast<double>(t->smax)))) + 1;
    for (int a = -R; a <= R; ++a)
        for (int b = -R; b <= R; ++b)
            for (int c = -R; c <= R; ++c) {
                int s = a * a + b * b + c * c;
                if (s > t->smax) continue;
                total[static_cast<std::size_t>(s) * 8 + parity_bits(a, b, c)]++;
            }
    std::vector<std::vector<std::array<int, 3>>> lists(nb);
    for (int a = -(n - 1); a <= n - 1; ++a)
        for (int b = -(n - 1); b <= n - 1; ++b)
            for (int c = -(n - 1); c <= n - 1; ++c) {
                int s = a * a + b * b + c * c;
                lists[static_cast<std::size_t>(s) * 8 + parity_bits(a, b, c)].push_back({a, b, c});
            }
    t->offset.assign(nb + 1, 0);
    t->weight.assign(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
        t->offset[k + 1] = t->offset[k] + lists[k].size();
        for (auto& d : lists[k]) t->dprime.push_back(d);
        std::size_t s = k / 8;
        if (total[k] > 0 && s > 0)
            t->weight[k] = 4.0 * std::numbers::pi / static_cast<double>(total[k]) * std::sqrt(static_cast<double>(s)) / 2.0;
    }
    return t;
}

std::shared_ptr<const LatticeTable> lattice_table(int n) {
    static std::mutex mtx;
    static std::map<int, std::shared_ptr<const LatticeTable>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto t = make_table(n);
    cache[n] = t;
    return t;
}

struct IndexTriples {
    std::vector<std::array<int, 3>> idx;
    explicit IndexTriples(int n) : idx(static_cast<std::size_t>(n) * n * n) {
        std::size_t m = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) idx[m++] = {i, j, k};
    }
};

// Visits every admissible collision (i, j) -> (k, l) for a fixed i.
// fn(j, k, l, weight) is called per post-collision pair; done(j, weight, count)
// once per partner j with at least one admissible pair.
template <class Visit, class Done>
void for_each_collision(const LatticeTable& T, const IndexTriples& ix, std::size_t i, Visit&& fn, Done&& done) {
    const int n = T.n;
    const int top = 2 * (n - 1);
    const auto& ai = ix.idx[i];
    const std::size_t N = ix.idx.size();
    for (std::size_t j = 0; j < N; ++j) {
        const auto& aj = ix.idx[j];
        int D0 = ai[0] - aj[0], D1 = ai[1] - aj[1], D2 = ai[2] - aj[2];
        int s = D0 * D0 + D1 * D1 + D2 * D2;
        if (s == 0) continue;
        std::size_t b = static_cast<std::size_t>(s) * 8 + parity_bits(D0, D1, D2);
        double w = T.weight[b];
        int P0 = ai[0] + aj[0], P1 = ai[1] + aj[1], P2 = ai[2] + aj[2];
        int count = 0;
        for (std::size_t q = T.offset[b]; q < T.offset[b + 1]; ++q) {
            const auto& d = T.dprime[q];
            int k0 = P0 + d[0], l0 = P0 - d[0];
            if (k0 < 0 || k0 > top || l0 < 0 || l0 > top) continue;
            int k1 = P1 + d[1], l1 = P1 - d[1];
            if (k1 < 0 || k1 > top || l1 < 0 || l1 > top) continue;
            int k2 = P2 + d[2], l2 = P2 - d[2];
            if (k2 < 0 || k2 > top || l2 < 0 || l2 > top) continue;
            std::size_t k = (static_cast<std::size_t>(k0 / 2) * n + k1 / 2) * n + k2 / 2;
            std::size_t l = (static_cast<std::size_t>(l0 / 2) * n + l1 / 2) * n + l2 / 2;
            fn(j, k, l, w);
            ++count;
        }
        if (count > 0) done(j, w, count);
    }
}

double h4(const VelocityGrid& g) { return g.h * g.h * g.h * g.h; }

double trilinear(std::span<const double> G, const VelocityGrid& grid, const Vec3& v) {
    const int n = grid.n_per_axis;
    int i0[3];
    double f[3];
    for (int d = 0; d < 3; ++d) {
        double t = (v[d] + grid.v_max) / grid.h - 0.5;
        double fl = std::floor(t);
        i0[d] = static_cast<int>(fl);
        f[d] = t - fl;
        if (i0[d] < -1 || i0[d] > n - 1) return 0.0;
    }
    double s = 0.0;
    for (int a = 0; a < 2; ++a) {
        int ia = i0[0] + a;
        if (ia < 0 || ia >= n) continue;
        double wa = a ? f[0] : 1.0 - f[0];
        for (int b = 0; b < 2; ++b) {
            int ib = i0[1] + b;
            if (ib < 0 || ib >= n) continue;
            double wb = b ? f[1] : 1.0 - f[1];
            for (int c = 0; c < 2; ++c) {
                int ic = i0[2] + c;
                if (ic < 0 || ic >= n) continue;
                double wc = c ? f[2] : 1.0 - f[2];
                s += wa * wb * wc * G[grid.index(ia, ib, ic)];
            }
        }
    }
    return s;
}

std::vector<double> collide_interpolated(std::span<const double> G1, std::span<const double> G2,
                                         const VelocityGrid& grid, const SphereQuadrature& sq) {
    const std::size_t N = grid.size();
    std::vector<double> Q(N, 0.0);
    const double h3 = grid.cell_volume();
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < N; ++i) {
        const Vec3& v = grid.nodes[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            const Vec3& u = grid.nodes[j];
            Vec3 g{v[0] - u[0], v[1] - u[1], v[2] - u[2]};
            double gain = 0.0, loss = 0.0;
            for (std::size_t q = 0; q < sq.directions.size(); ++q) {
                const Vec3& om = sq.directions[q];
                double gw = g[0] * om[0] + g[1] * om[1] + g[2] * om[2];
                double b = sq.weights[q] * std::abs(gw);
                if (b == 0.0) continue;
                Vec3 vp{v[0] - gw * om[0], v[1] - gw * om[1], v[2] - gw * om[2]};
                Vec3 up{u[0] + gw * om[0], u[1] + gw * om[1], u[2] + gw * om[2]};
                gain += b * trilinear(G1, grid, vp) * trilinear(G2, grid, up);
                loss += b;
            }
            acc += gain - loss * G1[i] * G2[j];
        }
        Q[i] = h3 * acc;
    }
    return Q;
}

void check_len(std::span<const double> a, const VelocityGrid& g, const char* what) {
    if (a.size() != g.size())
        throw PreconditionError(std::string(what) + ": length " + std::to_string(a.size()) + " does not match grid size " +
                                std::to_string(g.size()));
}

// One row of the integral part plus the matching loss frequency.
void assemble_row(const LatticeTable& T, const IndexTriples& ix, std::size_t i, std::span<const double> omega,
                  std::span<const double> sqw, double scale, double* row, double& nu) {
    const std::size_t N = omega.size();
    std::fill(row, row + N, 0.0);
    double nu_acc = 0.0;
    const double wi = omega[i];
    for_each_collision(
        T, ix, i,
        [&](std::size_t, std::size_t k, std::size_t l, double w) {
            row[k] += w * omega[l] * sqw[k];
            row[l] += w * omega[k] * sqw[l];
        },
        [&](std::size_t j, double w, int count) {
            row[j] -= w * count * wi * sqw[j];
            nu_acc += w * count * omega[j];
        });
    const double inv = scale / sqw[i];
    for (std::size_t c = 0; c < N; ++c) row[c] *= inv;
    nu = scale * nu_acc;
}

std::vector<double> sqrt_vec(std::span<const double> a) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = std::sqrt(a[i]);
    return r;
}

void finish_operator(LinearizedOperator& op) {
    const auto& grid = op.grid;
    op.nu_weight.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) op.nu_weight[i] = collision_frequency(op.params, grid.nodes[i]);
    op.nu0 = 0.5 * *std::min_element(op.nu_diag.begin(), op.nu_diag.end());
    if (!(op.nu0 > 0.0)) throw NumericalError("linearized operator has non-positive collision frequency");
}

double symmetry_defect(const RowMatrix& K) {
    double scale = K.cwiseAbs().maxCoeff();
    double worst = 0.0;
    const Eigen::Index N = K.rows();
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = i + 1; j < N; ++j) worst = std::max(worst, std::abs(K(i, j) - K(j, i)));
    return scale > 0.0 ? worst / scale : 0.0;
}

} // namespace

std::vector<double> LinearizedOperator::apply(std::span<const double> g) const {
    const std::size_t N = grid.size();
    if (g.size() != N) throw PreconditionError("LinearizedOperator::apply: length mismatch");
    std::vector<double> out(N);
    if (backend == Backend::bgk) {
        auto Pg = project_P(g, basis, grid);
        for (std::size_t i = 0; i < N; ++i) out[i] = bgk_rate * (g[i] - Pg[i]);
        return out;
    }
    Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(N));
    Eigen::Map<Eigen::VectorXd> ov(out.data(), static_cast<Eigen::Index>(N));
    ov.noalias() = -(k_matrix * gv);
    for (std::size_t i = 0; i < N; ++i) out[i] += nu_diag[i] * g[i];
    return out;
}

std::vector<double> collide(std::span<const double> G1, std::span<const double> G2, const VelocityGrid& grid,
                            const CollisionConfig& cfg) {
    if (cfg.backend != Backend::full_hard_sphere)
        throw PreconditionError("collide: requires the full hard-sphere backend");
    check_len(G1, grid, "collide");
    check_len(G2, grid, "collide");
    if (cfg.gain_rule == GainRule::interpolated) return collide_interpolated(G1, G2, grid, cfg.sphere_quad);

    auto T = lattice_table(grid.n_per_axis);
    IndexTriples ix(grid.n_per_axis);
    const std::size_t N = grid.size();
    const double scale = h4(grid);
    std::vector<double> Q(N, 0.0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < N; ++i) {
        double acc = 0.0, gain = 0.0;
        const double gi = G1[i];
        for_each_collision(
            *T, ix, i, [&](std::size_t, std::size_t k, std::size_t l, double) { gain += G1[k] * G2[l]; },
            [&](std::size_t j, double w, int count) {
                acc += w * (gain - count * gi * G2[j]);
                gain = 0.0;
            });
        Q[i] = scale * acc;
    }
    return Q;
}

std::vector<double> loss_frequency(std::span<const double> G, const VelocityGrid& grid) {
    check_len(G, grid, "loss_frequency");
    auto T = lattice_table(grid.n_per_axis);
    IndexTriples ix(grid.n_per_axis);
    const std::size_t N = grid.size();
    const double scale = h4(grid);
    std::vector<double> nu(N, 0.0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < N; ++i) {
        double acc = 0.0;
        for_each_collision(
            *T, ix, i, [](std::size_t, std::size_t, std::size_t, double) {},
            [&](std::size_t j, double w, int count) { acc += w * count * G[j]; });
        nu[i] = scale * acc;
    }
    return nu;
}

double collision_frequency(const MaxwellianParams& p, const Vec3& v) {
    double c2 = 0.0;
    for (int d = 0; d < 3; ++d) c2 += (v[d] - p.u[d]) * (v[d] - p.u[d]);
    const double st = std::sqrt(p.theta);
    const double c = std::sqrt(c2) / st;
    double nh;
    if (c < 1e-4) {
        nh = std::sqrt(8.0 / std::numbers::pi) * (1.0 + c * c / 6.0);
    } else {
        nh = std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * c * c) + (c + 1.0 / c) * std::erf(c / std::sqrt(2.0));
    }
    return p.rho * st * nh;
}

double bgk_rate(const MaxwellianParams& p, double scale) {
    if (!(scale > 0.0)) throw ConfigError("bgk_rate_scale must be positive");
    Vec3 v = p.u;
    v[0] += std::sqrt(8.0 * p.theta / std::numbers::pi);
    return scale * collision_frequency(p, v);
}

LinearizedOperator build_linearized(const MaxwellianParams& p, const VelocityGrid& grid, const CollisionConfig& cfg) {
    LinearizedOperator op;
    op.params = p;
    op.grid = grid;
    op.backend = cfg.backend;
    op.basis = null_basis(p, grid);
    auto omega = local_maxwellian(p, grid);
    op.sqrt_omega = sqrt_vec(omega);
    const std::size_t N = grid.size();
    if (cfg.backend == Backend::bgk) {
        op.bgk_rate = bgk_rate(p, cfg.bgk_rate_scale);
        op.nu_diag.assign(N, op.bgk_rate);
        finish_operator(op);
        return op;
    }
    if (cfg.gain_rule != GainRule::lattice)
        throw PreconditionError("build_linearized: the interpolated gain rule is not supported for L");
    auto T = lattice_table(grid.n_per_axis);
    IndexTriples ix(grid.n_per_axis);
    op.k_matrix.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    op.nu_diag.assign(N, 0.0);
    const double scale = h4(grid);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < N; ++i)
        assemble_row(*T, ix, i, omega, op.sqrt_omega, scale, op.k_matrix.row(static_cast<Eigen::Index>(i)).data(),
                     op.nu_diag[i]);
    op.symmetry_defect = symmetry_defect(op.k_matrix);
    if (op.symmetry_defect > 1e-6)
        throw NumericalError("linearized operator is not symmetric (relative defect " +
                             std::to_string(op.symmetry_defect) + ")");
    finish_operator(op);
    return op;
}

LinearizedOperator build_linearized_cached(const MaxwellianParams& p, const VelocityGrid& grid,
                                           const CollisionConfig& cfg, const std::filesystem::path& cache_dir) {
    if (cfg.backend == Backend::bgk || cache_dir.empty()) return build_linearized(p, grid, cfg);
    std::vector<double> key{static_cast<double>(grid.n_per_axis), grid.v_max, p.rho, p.u[0], p.u[1], p.u[2],
                            p.theta, static_cast<double>(static_cast<int>(cfg.gain_rule))};
    std::uint64_t h = fnv1a_doubles(key);
    for (const auto& d : cfg.sphere_quad.directions) h = fnv1a_doubles(d, h);
    h = fnv1a_doubles(cfg.sphere_quad.weights, h);
    char name[64];
    std::snprintf(name, sizeof(name), "kmatrix_%016llx.bin", static_cast<unsigned long long>(h));
    auto path = cache_dir / name;

    const std::size_t N = grid.size();
    DumpHeader hd;
    std::vector<double> body;
    if (read_dump(path, hd, body) && hd.n_per_axis == grid.n_per_axis && hd.v_max == grid.v_max && hd.params == key &&
        hd.rows == N + 1 && hd.cols == N) {
        LinearizedOperator op;
        op.params = p;
        op.grid = grid;
        op.backend = cfg.backend;
        op.basis = null_basis(p, grid);
        op.sqrt_omega = sqrt_vec(local_maxwellian(p, grid));
        op.k_matrix = Eigen::Map<RowMatrix>(body.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
        op.nu_diag.assign(body.begin() + static_cast<std::ptrdiff_t>(N * N), body.end());
        op.symmetry_defect = symmetry_defect(op.k_matrix);
        finish_operator(op);
        return op;
    }
    auto op = build_linearized(p, grid, cfg);
    std::filesystem::create_directories(cache_dir);
    hd.n_per_axis = grid.n_per_axis;
    hd.v_max = grid.v_max;
    hd.params = key;
    hd.rows = N + 1;
    hd.cols = N;
    body.assign(op.k_matrix.data(), op.k_matrix.data() + N * N);
    body.insert(body.end(), op.nu_diag.begin(), op.nu_diag.end());
    write_dump(path, hd, body);
    return op;
}

std::vector<std::vector<double>> kernel_rows(const MaxwellianParams& p, const VelocityGrid& grid,
                                             std::span<const std::size_t> rows) {
    auto T = lattice_table(grid.n_per_axis);
    IndexTriples ix(grid.n_per_axis);
    auto omega = local_maxwellian(p, grid);
    auto sqw = sqrt_vec(omega);
    std::vector<std::vector<double>> out(rows.size(), std::vector<double>(grid.size()));
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t r = 0; r < rows.size(); ++r) {
        double nu = 0.0;
        assemble_row(*T, ix, rows[r], omega, sqw, h4(grid), out[r].data(), nu);
    }
    return out;
}

double norm_nu(const LinearizedOperator& op, std::span<const double> g) {
    std::vector<double> t(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) t[i] = op.nu_weight[i] * g[i] * g[i];
    return std::sqrt(integrate_v(t, op.grid));
}

std::vector<double> invert_L(const LinearizedOperator& op, std::span<const double> r, SolveInfo* info, double tol) {
    const auto& grid = op.grid;
    const std::size_t N = grid.size();
    check_len(r, grid, "invert_L");
    auto Pr = project_P(r, op.basis, grid);
    std::vector<double> b(N);
    for (std::size_t i = 0; i < N; ++i) b[i] = r[i] - Pr[i];

    if (op.backend == Backend::bgk) {
        for (double& x : b) x /= op.bgk_rate;
        if (info) *info = SolveInfo{0, 0.0};
        return b;
    }

    auto micro = [&](std::vector<double>& x) {
        auto px = project_P(x, op.basis, grid);
        for (std::size_t i = 0; i < N; ++i) x[i] -= px[i];
    };
    auto precond = [&](const std::vector<double>& x) {
        std::vector<double> z(N);
        for (std::size_t i = 0; i < N; ++i) z[i] = x[i] / op.nu_diag[i];
        micro(z);
        return z;
    };
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& c) { return inner_v(a, c, grid); };

    std::vector<double> g(N, 0.0);
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        if (info) *info = SolveInfo{0, 0.0};
        return g;
    }
    std::vector<double> res = b;
    std::vector<double> z = precond(res);
    std::vector<double> p = z;
    double rz = dot(res, z);
    const int max_it = static_cast<int>(10 * N);
    int it = 0;
    double rel = 1.0;
    for (; it < max_it; ++it) {
        auto Ap = op.apply(p);
        double pAp = dot(p, Ap);
        if (!(pAp > 0.0)) break;
        double alpha = rz / pAp;
        for (std::size_t i = 0; i < N; ++i) {
            g[i] += alpha * p[i];
            res[i] -= alpha * Ap[i];
        }
        // keep the residual in the range of L
        if (it % 20 == 19) micro(res);
        rel = std::sqrt(dot(res, res)) / bnorm;
        if (rel <= tol) {
            ++it;
            break;
        }
        z = precond(res);
        double rz_new = dot(res, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
    }
    micro(g);
    // true residual
    auto Lg = op.apply(g);
    for (std::size_t i = 0; i < N; ++i) Lg[i] -= b[i];
    rel = std::sqrt(dot(Lg, Lg)) / bnorm;
    if (info) *info = SolveInfo{it, rel};
    if (!(rel <= std::max(tol, 1e-8) * 10.0))
        throw NumericalError("invert_L: CG did not converge, relative residual " + std::to_string(rel) + " after " +
                             std::to_string(it) + " iterations");
    return g;
}

std::vector<double> gamma(const LinearizedOperator& op, std::span<const double> g1, std::span<const double> g2,
                          const CollisionConfig& cfg) {
    const std::size_t N = op.grid.size();
    check_len(g1, op.grid, "gamma");
    check_len(g2, op.grid, "gamma");
    std::vector<double> a(N), b(N);
    for (std::size_t i = 0; i < N; ++i) {
        a[i] = op.sqrt_omega[i] * g1[i];
        b[i] = op.sqrt_omega[i] * g2[i];
    }
    auto Q = collide(a, b, op.grid, cfg);
    for (std::size_t i = 0; i < N; ++i) Q[i] /= op.sqrt_omega[i];
    return Q;
}

TransportCoefficients transport_coefficients(const LinearizedOperator& op) {
    const auto& grid = op.grid;
    const auto& p = op.params;
    const std::size_t N = grid.size();
    std::vector<double> B(N), A(N);
    for (std::size_t i = 0; i < N; ++i) {
        const Vec3& v = grid.nodes[i];
        double c1 = v[0] - p.u[0], c2 = v[1] - p.u[1], c3 = v[2] - p.u[2];
        double cc = (c1 * c1 + c2 * c2 + c3 * c3) / p.theta;
        B[i] = c1 * c2 / p.theta * op.sqrt_omega[i];
        A[i] = c1 / std::sqrt(p.theta) * (0.5 * cc - 2.5) * op.sqrt_omega[i];
    }
    auto LB = invert_L(op, B);
    auto LA = invert_L(op, A);
    TransportCoefficients tc;
    tc.mu = p.theta * inner_v(B, LB, grid);
    tc.kappa = 2.0 * p.theta * inner_v(A, LA, grid);
    if (!(tc.mu > 0.0) || !(tc.kappa > 0.0))
        throw NumericalError("transport coefficients are not positive (mu=" + std::to_string(tc.mu) +
                             ", kappa=" + std::to_string(tc.kappa) + ")");
    return tc;
}

TransportCoefficients transport_coefficients(const MaxwellianParams& p, const VelocityGrid& grid,
                                             const CollisionConfig& cfg) {
    return transport_coefficients(build_linearized(p, grid, cfg));
}

std::vector<double> discrete_maxwellian(const Moments& m, const VelocityGrid& grid) {
    MaxwellianParams p0 = params_from_moments(m);
    const std::size_t N = grid.size();
    const double st = std::sqrt(p0.theta);
    // basis psi = (1, c/sqrt(theta), |c|^2/theta) around the continuous guess
    std::vector<std::array<double, 5>> psi(N);
    for (std::size_t i = 0; i < N; ++i) {
        const Vec3& v = grid.nodes[i];
        double c0 = (v[0] - p0.u[0]) / st, c1 = (v[1] - p0.u[1]) / st, c2 = (v[2] - p0.u[2]) / st;
        psi[i] = {1.0, c0, c1, c2, c0 * c0 + c1 * c1 + c2 * c2};
    }
    Eigen::Matrix<double, 5, 1> target;
    target(0) = m.rho;
    double u2 = 0.0, um = 0.0;
    for (int d = 0; d < 3; ++d) {
        target(d + 1) = (m.momentum[d] - p0.u[d] * m.rho) / st;
        u2 += p0.u[d] * p0.u[d];
        um += p0.u[d] * m.momentum[d];
    }
    target(4) = (m.energy - 2.0 * um + u2 * m.rho) / p0.theta;

    Eigen::Matrix<double, 5, 1> alpha;
    alpha << std::log(p0.rho / std::pow(2.0 * std::numbers::pi * p0.theta, 1.5)), 0.0, 0.0, 0.0, -0.5;
    std::vector<double> M(N), tmp(N);
    for (int it = 0; it < 60; ++it) {
        for (std::size_t i = 0; i < N; ++i) {
            double e = 0.0;
            for (int a = 0; a < 5; ++a) e += alpha(a) * psi[i][a];
            M[i] = std::exp(e);
        }
        Eigen::Matrix<double, 5, 1> G;
        Eigen::Matrix<double, 5, 5> J;
        for (int a = 0; a < 5; ++a) {
            for (std::size_t i = 0; i < N; ++i) tmp[i] = psi[i][a] * M[i];
            G(a) = integrate_v(tmp, grid) - target(a);
            for (int b = a; b < 5; ++b) {
                for (std::size_t i = 0; i < N; ++i) tmp[i] = psi[i][a] * psi[i][b] * M[i];
                J(a, b) = J(b, a) = integrate_v(tmp, grid);
            }
        }
        Eigen::Matrix<double, 5, 1> step = J.ldlt().solve(G);
        alpha -= step;
        if (step.cwiseAbs().maxCoeff() < 1e-15 * std::max(1.0, alpha.cwiseAbs().maxCoeff()) ||
            G.cwiseAbs().maxCoeff() <= 1e-16 * m.rho) {
            for (std::size_t i = 0; i < N; ++i) {
                double e = 0.0;
                for (int a = 0; a < 5; ++a) e += alpha(a) * psi[i][a];
                M[i] = std::exp(e);
            }
            if (it >= 2 || G.cwiseAbs().maxCoeff() <= 1e-16 * m.rho) return M;
        }
        if (!alpha.allFinite()) break;
    }
    // accept once the residual sits at rounding level
    for (int a = 0; a < 5; ++a) {
        for (std::size_t i = 0; i < N; ++i) tmp[i] = psi[i][a] * M[i];
        if (std::abs(integrate_v(tmp, grid) - target(a)) > 1e-12 * m.rho)
            throw NumericalError("discrete Maxwellian: Newton iteration did not converge");
    }
    return M;
}

std::vector<double> bgk_surrogate(std::span<const double> F, const MaxwellianParams& p_of_F, double rate,
                                  const VelocityGrid& grid) {
    check_len(F, grid, "bgk_surrogate");
    if (!(p_of_F.rho > 0.0) || !(p_of_F.theta > 0.0))
        throw NumericalError("bgk_surrogate: non-positive density or temperature");
    auto M = discrete_maxwellian(moments(F, grid), grid);
    std::vector<double> out(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) out[i] = rate * (M[i] - F[i]);
    return out;
}

namespace {

// Largest Ritz value of a self-adjoint operator by Lanczos with full
// reorthogonalization.
template <class Apply, class Dot>
double lanczos_largest(Apply&& T, Dot&& ip, std::vector<double> q, int max_steps, int& steps) {
    const std::size_t N = q.size();
    std::vector<std::vector<double>> Qs;
    std::vector<double> alpha, beta;
    double nq = std::sqrt(ip(q, q));
    for (auto& c : q) c /= nq;
    double prev = 0.0, ritz = 0.0;
    for (int k = 0; k < max_steps; ++k) {
        Qs.push_back(q);
        auto w = T(q);
        double a = ip(w, q);
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& qq : Qs) {
                double c = ip(w, qq);
                for (std::size_t i = 0; i < N; ++i) w[i] -= c * qq[i];
            }
        double b = std::sqrt(ip(w, w));
        int m = static_cast<int>(alpha.size());
        Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            Tm(i, i) = alpha[i];
            if (i + 1 < m) Tm(i, i + 1) = Tm(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm, Eigen::EigenvaluesOnly);
        ritz = es.eigenvalues()(m - 1);
        steps = k + 1;
        if (k > 3 && std::abs(ritz - prev) <= 1e-11 * std::abs(ritz)) break;
        if (b <= 1e-14 * std::abs(ritz)) break;
        prev = ritz;
        beta.push_back(b);
        for (std::size_t i = 0; i < N; ++i) q[i] = w[i] / b;
    }
    return ritz;
}

} // namespace

GapEstimate spectral_gap(const LinearizedOperator& op, int random_samples, unsigned long long seed) {
    const auto& grid = op.grid;
    const std::size_t N = grid.size();
    GapEstimate est;
    auto micro = [&](std::vector<double>& x) {
        auto px = project_P(x, op.basis, grid);
        for (std::size_t i = 0; i < N; ++i) x[i] -= px[i];
    };
    auto rayleigh_nu = [&](const std::vector<double>& x) {
        auto Lx = op.apply(x);
        double nn = norm_nu(op, x);
        return inner_v(Lx, x, grid) / (nn * nn);
    };

    Rng rng(seed);
    est.rayleigh_random = std::numeric_limits<double>::infinity();
    for (int s = 0; s < random_samples; ++s) {
        std::vector<double> x(N);
        for (auto& c : x) c = rng.uniform(-1.0, 1.0);
        micro(x);
        est.rayleigh_random = std::min(est.rayleigh_random, rayleigh_nu(x));
    }

    std::vector<double> x0(N);
    for (std::size_t i = 0; i < N; ++i) x0[i] = rng.uniform(-1.0, 1.0) * op.sqrt_omega[i] + 1e-3 * rng.uniform(-1.0, 1.0);
    micro(x0);

    // shift-invert: largest eigenvalue of L^{-1} on the microscopic subspace
    int s1 = 0, s2 = 0;
    auto plain = [&](const std::vector<double>& a, const std::vector<double>& b) { return inner_v(a, b, grid); };
    double top = lanczos_largest([&](const std::vector<double>& v) { return invert_L(op, v); }, plain, x0, 80, s1);
    est.lambda6 = 1.0 / top;

    // L x = delta (I-P) nu x, self-adjoint in the nu inner product
    auto nu_ip = [&](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> t(N);
        for (std::size_t i = 0; i < N; ++i) t[i] = op.nu_weight[i] * a[i] * b[i];
        return integrate_v(t, grid);
    };
    double top2 = lanczos_largest(
        [&](const std::vector<double>& v) {
            std::vector<double> t(N);
            for (std::size_t i = 0; i < N; ++i) t[i] = op.nu_weight[i] * v[i];
            return invert_L(op, t);
        },
        nu_ip, x0, 80, s2);
    est.delta0 = 1.0 / top2;
    est.iterations = s1 + s2;
    return est;
}

std::vector<double> collision_Q(std::span<const double> F, const VelocityGrid& grid, const CollisionConfig& cfg) {
    if (cfg.backend == Backend::full_hard_sphere) return collide(F, F, grid, cfg);
    auto m = moments(F, grid);
    auto p = params_from_moments(m);
    double rate = bgk_rate(p, cfg.bgk_rate_scale);
    auto M = discrete_maxwellian(m, grid);
    std::vector<double> out(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) out[i] = rate * (M[i] - F[i]);
    return out;
}

std::vector<double> quadratic_part(std::span<const double> omega, std::span<const double> F1,
                                   const VelocityGrid& grid, const CollisionConfig& cfg) {
    if (cfg.backend == Backend::full_hard_sphere) return collide(F1, F1, grid, cfg);
    // symmetric second difference; odd orders cancel
    const double d = 0.5;
    const std::size_t N = omega.size();
    std::vector<double> a(N), b(N);
    for (std::size_t i = 0; i < N; ++i) {
        a[i] = omega[i] + d * F1[i];
        b[i] = omega[i] - d * F1[i];
    }
    auto Qa = collision_Q(a, grid, cfg);
    auto Qb = collision_Q(b, grid, cfg);
    auto Q0 = collision_Q(omega, grid, cfg);
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = (Qa[i] + Qb[i] - 2.0 * Q0[i]) / (2.0 * d * d);
    return out;
}

} // namespace hilbert
