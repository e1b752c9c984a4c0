// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/matching.hpp"

#include <cmath>
#include <limits>

namespace irsva::match {

double unshared_capacity(double g_i_B, double f_norm2, double pmax_c, double sigma2,
                         double bandwidth) {
    if (f_norm2 <= 0) throw InvalidInput("unshared_capacity: zero detector");
    return bandwidth * std::log2(1.0 + pmax_c * g_i_B / (sigma2 * f_norm2));
}

CapacityTable extend_cost_table(const MatR& pair_caps,
                                const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& pair_feasible,
                                const VecR& unshared) {
    const int I = static_cast<int>(pair_caps.rows());
    const int L = static_cast<int>(pair_caps.cols());
    if (pair_feasible.rows() != I || pair_feasible.cols() != L || unshared.size() != I)
        throw InvalidInput("extend_cost_table: inconsistent shapes");
    if (L > I) throw InvalidInput("extend_cost_table: more VUE pairs than CUEs");
    for (int i = 0; i < I; ++i)
        for (int l = 0; l < L; ++l)
            if (!std::isfinite(pair_caps(i, l))) throw InvalidInput("extend_cost_table: missing cell");

    CapacityTable t;
    t.real_cols = L;
    t.value.resize(I, I);
    t.feasible.resize(I, I);
    for (int i = 0; i < I; ++i) {
        for (int l = 0; l < L; ++l) {
            t.feasible(i, l) = pair_feasible(i, l);
            t.value(i, l) = pair_feasible(i, l) ? pair_caps(i, l) : unshared(i);
        }
        for (int l = L; l < I; ++l) {
            t.value(i, l) = unshared(i);
            t.feasible(i, l) = true;
        }
    }
    return t;
}

// Kuhn-Munkres with potentials on the minimization form, O(n^3).
Assignment hungarian_max(const MatR& profits) {
    const int n = static_cast<int>(profits.rows());
    if (profits.cols() != n) throw InvalidInput("hungarian: square table required");
    const double big = profits.maxCoeff();
    MatR cost = big - profits.array(); // nonnegative costs, exactness preserved

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    Assignment a;
    a.col_of_row.assign(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) a.col_of_row[p[j] - 1] = j - 1;
    a.total = 0;
    for (int i = 0; i < n; ++i) a.total += profits(i, a.col_of_row[i]);
    return a;
}

Assignment hungarian_assign(const CapacityTable& table) {
    return hungarian_max(table.value);
}

} // namespace irsva::match
