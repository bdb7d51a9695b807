#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace aggrecon {

// Minimum-cost perfect matching on a dense n x n cost matrix (row-major).
// O(n^3) shortest augmenting path with dual potentials. Returns, for each
// row, the column it is assigned to.
inline std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based internally; index 0 is the virtual source column.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        match_col[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match_col[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j) row_to_col[match_col[j] - 1] = j - 1;
    return row_to_col;
}

} // namespace aggrecon
