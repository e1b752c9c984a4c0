// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/power.hpp"

#include <algorithm>
#include <cmath>

namespace irsva::power {

double margin_map(const std::pair<double, double>& phi, double anchor_p_c,
                  double anchor_p_v, double gamma_th) {
    return (anchor_p_v / gamma_th) * phi.first - anchor_p_c * phi.second;
}

double learn_kappa(const std::vector<std::pair<double, double>>& phi_samples,
                   double anchor_p_c, double anchor_p_v, double gamma_th, double delta) {
    if (phi_samples.empty()) throw InvalidInput("learn_kappa: empty sample set");
    if (anchor_p_c < 0 || anchor_p_v < 0) throw InvalidInput("learn_kappa: negative anchor");
    const int S = static_cast<int>(phi_samples.size());
    std::vector<double> t(S);
    for (int s = 0; s < S; ++s)
        t[s] = margin_map(phi_samples[s], anchor_p_c, anchor_p_v, gamma_th);
    std::sort(t.begin(), t.end());
    // Rank so that ceil((1-delta)S) samples satisfy t >= kappa; the region
    // then covers the sample set with the required confidence.
    const int keep = static_cast<int>(std::ceil((1.0 - delta) * S));
    int rank = S - keep + 1; // 1-based ascending
    rank = std::clamp(rank, 1, S);
    return t[rank - 1];
}

PowerIterate closed_form_power(double kappa, double anchor_p_c, double anchor_p_v,
                               double sigma2, double pmax_c, double pmax_v) {
    PowerIterate out;
    out.kappa = kappa;
    if (!(kappa > 0) || !(anchor_p_c > 0) || !(anchor_p_v > 0)) {
        out.feasible = false;
        return out;
    }
    const double lo = sigma2 / kappa;             // least z enforcing the QoS
    const double rv = pmax_v / anchor_p_v;        // VUE budget ratio
    const double rc = pmax_c / anchor_p_c;        // CUE budget ratio

    if (lo <= rv && rv <= rc) {
        out.z = rv;
        out.p_c = rv * anchor_p_c;
        out.p_v = pmax_v;
        out.feasible = true;
    } else if (lo <= rc && rc <= rv) {
        out.z = rc;
        out.p_c = pmax_c;
        out.p_v = rc * anchor_p_v;
        out.feasible = true;
    } else if (rc <= lo && lo <= rv) {
        out.z = lo;
        out.p_c = pmax_c;
        out.p_v = lo * anchor_p_v;
        out.feasible = true;
    } else {
        out.p_c = 0;
        out.p_v = 0;
        out.z = 0;
        out.feasible = false;
    }
    return out;
}

PowerIterate deterministic_power(double g_l_v, double g_i_v, double gamma_th,
                                 double sigma2, double pmax_c, double pmax_v) {
    PowerIterate out;
    out.kappa = 0;
    if (!(g_l_v > 0) || pmax_v * g_l_v / gamma_th < sigma2) {
        out.feasible = false;
        return out;
    }
    // Objective increases in P_c and decreases in P_v, so the QoS constraint
    // binds: P_v = gamma_th (sigma2 + P_c g_i_v) / g_l_v, P_c as large as the
    // constraint set allows.
    double p_c = pmax_c;
    if (g_i_v > 0) p_c = std::min(pmax_c, (pmax_v * g_l_v / gamma_th - sigma2) / g_i_v);
    p_c = std::max(0.0, p_c);
    out.p_c = p_c;
    out.p_v = gamma_th * (sigma2 + p_c * g_i_v) / g_l_v;
    out.z = 1.0;
    out.feasible = true;
    return out;
}

} // namespace irsva::power
