// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/sinr.hpp"

namespace irsva::sinr {

namespace {
double clamp_gain(double g) { return (g < 0 && g > -tol().gain_clamp) ? 0.0 : g; }
} // namespace

VecC cue_channel(const scn::ChannelSet& cs, int i, const VecC& e) {
    // g_ib + g_rb^H diag(e) g_ir
    VecC v = cs.g_ib[i];
    v.noalias() += cs.g_rb.adjoint() * e.cwiseProduct(cs.g_ir[i]);
    return v;
}

VecC vue_gnb_channel(const scn::ChannelSet& cs, int l, const VecC& e) {
    VecC v = cs.g_lb[l];
    v.noalias() += cs.g_rb.adjoint() * e.cwiseProduct(cs.g_lr[l]);
    return v;
}

EffectiveGains effective_gains(const scn::ChannelSet& cs, const VecC& f, const VecC& e,
                               int i, int l, const scn::V2vLinks& links, double sigma2) {
    if (f.squaredNorm() == 0.0) throw InvalidInput("effective_gains: zero detector vector");
    EffectiveGains g;
    g.g_i_B = clamp_gain(std::norm(f.dot(cue_channel(cs, i, e))));
    g.g_l_B = clamp_gain(std::norm(f.dot(vue_gnb_channel(cs, l, e))));
    const auto [glv, giv] = scn::v2v_power_gains(cs, i, l, links, e);
    g.g_l_v = clamp_gain(glv);
    g.g_i_v = clamp_gain(giv);
    g.noise_scale = sigma2 * f.squaredNorm();
    return g;
}

SinrCapacity sinr_and_capacity(const EffectiveGains& g, double p_i, double p_l,
                               double sigma2, double bandwidth, bool reuse) {
    if (p_i < 0 || p_l < 0) throw InvalidInput("sinr_and_capacity: negative power");
    if (sigma2 <= 0) throw InvalidInput("sinr_and_capacity: sigma2 must be positive");
    const double x = reuse ? 1.0 : 0.0;
    SinrCapacity out;
    out.gamma_i = p_i * g.g_i_B / (x * p_l * g.g_l_B + g.noise_scale);
    out.gamma_l = p_l * g.g_l_v / (x * p_i * g.g_i_v + sigma2);
    out.capacity_i = bandwidth * std::log2(1.0 + out.gamma_i);
    return out;
}

GnbLiftings lift_gnb(const scn::ChannelSet& cs, int i, int l, const VecC& e, const MatC& gamma) {
    const int M = cs.M, N = cs.N;
    if (e.size() != N || gamma.rows() != M || gamma.cols() != M)
        throw InvalidInput("lift_gnb: dimension mismatch");

    GnbLiftings out;
    // G_iB = [g_ib, g_rb^H diag(g_ir)]^H : rows 0..N index [direct; cascade].
    auto stack = [&](const VecC& gxb, const VecC& gxr) {
        MatC s(N + 1, M);
        s.row(0) = gxb.adjoint();
        // (g_rb^H diag(gxr))^H = diag(conj(gxr)) g_rb
        s.bottomRows(N) = gxr.conjugate().asDiagonal() * cs.g_rb;
        return s;
    };
    out.G_iB = stack(cs.g_ib[i], cs.g_ir[i]);
    out.G_lB = stack(cs.g_lb[l], cs.g_lr[l]);

    VecC r(N + 1);
    r(0) = 1.0;
    r.tail(N) = e;
    out.Lambda1 = r * r.adjoint();

    out.G1 = out.G_iB.adjoint() * out.Lambda1 * out.G_iB;
    out.G2 = out.G_lB.adjoint() * out.Lambda1 * out.G_lB;
    out.G3 = out.G_iB * gamma * out.G_iB.adjoint();
    out.G4 = out.G_lB * gamma * out.G_lB.adjoint();
    return out;
}

MatC delta_of_lambda(const MatC& lambda, double p_i, double p_l, double gamma_th) {
    const Eigen::Index d = lambda.rows();
    MatC delta = MatC::Zero(2 * d, 2 * d);
    delta.topLeftCorner(d, d) = gamma_th * p_i * lambda;
    delta.bottomRightCorner(d, d) = -p_l * lambda;
    return delta;
}

V2vLiftings lift_v2v(const scn::ChannelSet& cs, int i, int l, const scn::V2vLinks& links,
                     double p_i, double p_l, double gamma_th, const MatC& lambda) {
    if (!num::is_hermitian(lambda, 1e-8)) throw InvalidInput("lift_v2v: Lambda not Hermitian");
    V2vLiftings out;
    out.g3 = scn::stack_g3(cs, i, l, links);
    const int np1 = cs.N + 1;
    out.g2 = out.g3.head(np1);
    out.g1 = out.g3.tail(np1);
    out.delta = delta_of_lambda(lambda, p_i, p_l, gamma_th);
    return out;
}

} // namespace irsva::sinr
