// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Self-learning power allocation: a high-probability region for the
// uncertain V2V gains is learned as the affine set { phi : p_a . phi >= kappa }
// anchored at the previous allocation; LP duality turns the robust QoS
// constraint into linear constraints in (P_c, P_v, z) and the resulting
// box-constrained problem has a closed-form optimum by case analysis.

#pragma once

#include "irsva/types.hpp"

#include <utility>
#include <vector>

namespace irsva::power {

struct PowerIterate {
    double p_c = 0;    // CUE transmit power, watts
    double p_v = 0;    // VUE transmit power, watts
    double z = 0;      // dual scalar
    double kappa = 0;  // learned region size
    bool feasible = false;
};

// Margin map t(phi) = (P_v_anchor / gamma_th) * g_l_v - P_c_anchor * g_i_v
// evaluated on one sample.
double margin_map(const std::pair<double, double>& phi, double anchor_p_c,
                  double anchor_p_v, double gamma_th);

// Learns the region size kappa as the empirical quantile of the margin map
// such that a fraction >= 1-delta of the samples lies inside
// { t >= kappa }: ascending order statistic of rank S - ceil((1-delta)S) + 1.
double learn_kappa(const std::vector<std::pair<double, double>>& phi_samples,
                   double anchor_p_c, double anchor_p_v, double gamma_th, double delta);

// Closed-form optimum of the anchored power problem. Branches ordered by
// the printed case analysis; the fall-through returns (0,0) infeasible.
PowerIterate closed_form_power(double kappa, double anchor_p_c, double anchor_p_v,
                               double sigma2, double pmax_c, double pmax_v);

// Exact optimum when the chance constraint degenerates to the deterministic
// constraint P_v*g_l_v/gamma_th - P_c*g_i_v >= sigma2 at a point estimate
// (used by the non-robust baseline).
PowerIterate deterministic_power(double g_l_v, double g_i_v, double gamma_th,
                                 double sigma2, double pmax_c, double pmax_v);

} // namespace irsva::power
