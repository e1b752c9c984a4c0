// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Effective channel gains, SINRs/capacities and the Hermitian liftings that
// feed the semidefinite subproblems. With Phi = diag(e), the cascaded uplink
// channel of user x is a_x = g_xb + g_rb^H Phi g_xr and the gNB-side power
// gain after detection is |f^H a_x|^2. Lifted forms:
//   g_i_B = Tr(Gamma G1) = Tr(G3 Lambda),  Gamma = f f^H, Lambda = r r^H,
// with r = [u; e] and the G matrices built from G_iB = [g_ib, g_rb^H G_ir]^H.

#pragma once

#include "irsva/scenario.hpp"
#include "irsva/types.hpp"

namespace irsva::sinr {

struct EffectiveGains {
    double g_i_B = 0;       // CUE -> gNB through detector f
    double g_l_B = 0;       // VUE tx -> gNB through detector f
    double g_l_v = 0;       // VUE tx -> VUE rx
    double g_i_v = 0;       // CUE -> VUE rx crosstalk
    double noise_scale = 0; // sigma^2 ||f||^2
};

// Cascaded gNB-side channel of CUE i (or VUE transmitter l).
VecC cue_channel(const scn::ChannelSet& cs, int i, const VecC& e);
VecC vue_gnb_channel(const scn::ChannelSet& cs, int l, const VecC& e);

// Direct quadratic-form evaluation of all gains for pair (i,l). The V2V-side
// gains use the supplied uncertain-link values.
EffectiveGains effective_gains(const scn::ChannelSet& cs, const VecC& f, const VecC& e,
                               int i, int l, const scn::V2vLinks& links, double sigma2);

struct SinrCapacity {
    double gamma_i = 0;
    double gamma_l = 0;
    double capacity_i = 0; // W log2(1 + gamma_i), bit/s
};

SinrCapacity sinr_and_capacity(const EffectiveGains& g, double p_i, double p_l,
                               double sigma2, double bandwidth, bool reuse);

struct GnbLiftings {
    MatC G_iB, G_lB;  // (N+1) x M stacked channel matrices
    MatC Lambda1;     // [1,e^H]^H [1,e^H]
    MatC G1, G2;      // M x M, for the detector-side lifting
    MatC G3, G4;      // (N+1) x (N+1), for the phase-side lifting
};

GnbLiftings lift_gnb(const scn::ChannelSet& cs, int i, int l, const VecC& e, const MatC& gamma);

struct V2vLiftings {
    VecC g1, g2;  // (N+1) stacks of the uncertain V2V links
    VecC g3;      // [g2; g1]
    MatC delta;   // blkdiag(gamma_th P_i Lambda, -P_l Lambda)
};

V2vLiftings lift_v2v(const scn::ChannelSet& cs, int i, int l, const scn::V2vLinks& links,
                     double p_i, double p_l, double gamma_th, const MatC& lambda);

// blkdiag(gamma_th * p_i * Lambda, -p_l * Lambda), shared with the CVaR block.
MatC delta_of_lambda(const MatC& lambda, double p_i, double p_l, double gamma_th);

} // namespace irsva::sinr
