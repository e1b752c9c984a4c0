// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Spectrum-reuse assignment: the per-pair converged capacities form an
// I x I profit table (virtual columns pad the VUE side when I > L, carrying
// the unshared capacity of the row's CUE), solved exactly by the Hungarian
// algorithm on negated profits.

#pragma once

#include "irsva/types.hpp"

#include <vector>

namespace irsva::match {

// W log2(1 + pmax_c * g_i_B / (sigma2 ||f||^2)) for a CUE transmitting alone.
double unshared_capacity(double g_i_B, double f_norm2, double pmax_c, double sigma2,
                         double bandwidth);

struct CapacityTable {
    MatR value;                      // I x I, bit/s, padded
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> feasible; // real cells only
    int real_cols = 0;               // L

    int rows() const { return static_cast<int>(value.rows()); }
    bool is_virtual(int col) const { return col >= real_cols; }
};

// pair_caps: I x L converged capacities; pair_feasible: same shape;
// unshared: per-CUE capacities. Infeasible real cells are replaced by the
// row's unshared capacity (reuse denied).
CapacityTable extend_cost_table(const MatR& pair_caps,
                                const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& pair_feasible,
                                const VecR& unshared);

struct Assignment {
    std::vector<int> col_of_row; // size I; column assigned to each CUE
    double total = 0;            // bit/s
};

// Exact maximum-profit perfect matching on the padded square table.
Assignment hungarian_assign(const CapacityTable& table);

// Convenience: exact max-sum assignment of a square profit matrix.
Assignment hungarian_max(const MatR& profits);

} // namespace irsva::match
