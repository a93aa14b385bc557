#include <doctest.h>

#include <cmath>

#include "hilbert/collision.hpp"

using namespace hilbert;

namespace {

// Largest |K(v,v')| / ((r + 1/r) exp(-r^2/8)), r = |v - v'|, over a spread of rows.
double entry_ratio(int n) {
    auto g = build_velocity_grid(n, 6.0);
    std::vector<std::size_t> rows;
    for (int i = n / 2; i < n; i += std::max(1, n / 8))
        for (int j : {n / 2, n / 2 + 1, 3 * n / 4}) rows.push_back(g.index(i, j, n / 2 - 1));
    auto K = kernel_rows({1.0, {0, 0, 0}, 1.0}, g, rows);
    const double h3 = g.cell_volume();
    double worst = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& v = g.nodes[rows[r]];
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (j == rows[r]) continue;
            const auto& w = g.nodes[j];
            const double d = std::sqrt((v[0] - w[0]) * (v[0] - w[0]) + (v[1] - w[1]) * (v[1] - w[1]) +
                                       (v[2] - w[2]) * (v[2] - w[2]));
            worst = std::max(worst, std::abs(K[r][j]) / h3 / ((d + 1.0 / d) * std::exp(-d * d / 8.0)));
        }
    }
    return worst;
}

} // namespace

TEST_CASE("kernel entries on the finer grid stay under the envelope fitted on n=16") {
    const double C_fit = entry_ratio(16);
    const double fine = entry_ratio(24);
    MESSAGE("per-entry envelope constant n=16 ", C_fit, " n=24 ", fine);
    CHECK(fine <= C_fit);
}
