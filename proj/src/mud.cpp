// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/mud.hpp"

#include "irsva/numerics.hpp"

#include <cmath>

namespace irsva::mud {

namespace {
double re_trace(const MatC& a, const MatC& b) {
    return (a.array() * b.transpose().array()).sum().real(); // Tr(A B)
}
constexpr double kLog2e = 1.4426950408889634; // 1/ln 2
} // namespace

double true_objective(const MatC& gamma, const MatC& g1, const MatC& g2, double p_c,
                      double p_v, double sigma2, double bandwidth) {
    const double num = p_c * re_trace(gamma, g1);
    const double den = p_v * re_trace(gamma, g2) + sigma2 * gamma.trace().real();
    return bandwidth * std::log2(1.0 + num / den);
}

double sca_bound(const MatC& gamma, const MatC& gamma_a, const MatC& g1, const MatC& g2,
                 double p_c, double p_v, double sigma2, double bandwidth) {
    const double tr1 = re_trace(gamma, g1);
    const double tr2 = re_trace(gamma, g2);
    const double trg = gamma.trace().real();
    const double den_a = p_v * re_trace(gamma_a, g2) + sigma2 * gamma_a.trace().real();
    if (den_a <= 0) throw InvalidInput("sca_bound: nonpositive expansion denominator");
    const double total = p_c * tr1 + p_v * tr2 + sigma2 * trg;
    if (total <= 0) throw InvalidInput("sca_bound: nonpositive log argument");
    const double lin = p_v * tr2 + sigma2 * trg; // Tr((P_v G2 + sigma2 I) Gamma)
    const double lin_a = den_a;
    return bandwidth * kLog2e *
           (std::log(total) - std::log(den_a) - (lin - lin_a) / den_a);
}

double detector_sinr(const VecC& f, const MatC& g1, const MatC& g2, double p_c, double p_v,
                     double sigma2) {
    const double s = (f.adjoint() * g1 * f)(0).real();
    const double i = (f.adjoint() * g2 * f)(0).real();
    return p_c * s / (p_v * i + sigma2 * f.squaredNorm());
}

VecC mvdr_oracle(const VecC& a, const VecC& b, double p_v, double sigma2) {
    if (a.squaredNorm() == 0) throw InvalidInput("mvdr_oracle: zero channel");
    if (sigma2 <= 0) throw InvalidInput("mvdr_oracle: sigma2 must be positive");
    const Eigen::Index m = a.size();
    MatC r = p_v * (b * b.adjoint());
    r.diagonal().array() += sigma2;
    VecC f = r.llt().solve(a);
    return f / f.norm();
}

VecC extract_rank_one(const MatC& gamma, double* rank_gap, const ExtractContext* ctx,
                      RngStream* rng, bool* used_fallback) {
    if (gamma.cwiseAbs().maxCoeff() == 0.0) throw InvalidInput("extract_rank_one: zero matrix");
    const num::Evd evd = num::hermitian_evd(gamma);
    const double l1 = evd.eigenvalues(0);
    if (l1 <= 0) throw InvalidInput("extract_rank_one: no positive eigenvalue");
    const double gap = (evd.eigenvalues.size() > 1) ? std::max(0.0, evd.eigenvalues(1)) / l1 : 0.0;
    if (rank_gap) *rank_gap = gap;
    if (used_fallback) *used_fallback = false;

    VecC f = std::sqrt(l1) * evd.eigenvectors.col(0);
    if (gap <= tol().rank_one || ctx == nullptr || rng == nullptr) return f;

    // Gaussian randomization, candidates f ~ CN(0, Gamma), best by SINR.
    if (used_fallback) *used_fallback = true;
    const Eigen::Index m = gamma.rows();
    MatC half(m, m);
    half.setZero();
    for (Eigen::Index k = 0; k < m; ++k) {
        const double lk = std::max(0.0, evd.eigenvalues(k));
        half += std::sqrt(lk) * evd.eigenvectors.col(k) * evd.eigenvectors.col(k).adjoint();
    }
    VecC best = f;
    double best_sinr = detector_sinr(f, ctx->g1, ctx->g2, ctx->p_c, ctx->p_v, ctx->sigma2);
    for (int trial = 0; trial < 100; ++trial) {
        VecC cand = half * num::sample_complex_gaussian(*rng, static_cast<int>(m));
        const double nn = cand.norm();
        if (nn == 0) continue;
        cand *= std::sqrt(l1) / nn;
        const double s = detector_sinr(cand, ctx->g1, ctx->g2, ctx->p_c, ctx->p_v, ctx->sigma2);
        if (s > best_sinr) {
            best_sinr = s;
            best = cand;
        }
    }
    return best;
}

MudResult solve_mud_iteration(const MatC& g1, const MatC& g2, double p_c, double p_v,
                              double sigma2, const MatC& gamma_a, double bandwidth,
                              const conic::SolveOptions& opts, RngStream* rng) {
    const int m = static_cast<int>(g1.rows());
    MudResult out;

    // Trace normalization keeps the scale-invariant problem bounded.
    MatC ga = gamma_a;
    const double tra = ga.trace().real();
    if (!(tra > 0)) throw InvalidInput("solve_mud_iteration: anchor must have positive trace");
    ga /= tra;
    const double den_a = p_v * re_trace(ga, g2) + sigma2;

    conic::ConicProblem cp;
    const auto v = cp.add_hermitian(m);
    {
        // Tr(Gamma) = 1
        conic::LinExpr tr;
        for (int i = 0; i < m; ++i) tr.add(cp.coord_diag(v, i), 1.0);
        cp.add_eq(tr, 1.0);
    }
    const int lmi = cp.add_lmi(m);
    cp.lmi_add_hermitian_block(lmi, v, 0, 1.0);

    MatC total = p_c * g1 + p_v * g2;
    total.diagonal().array() += sigma2;
    MatC lin = p_v * g2;
    lin.diagonal().array() += sigma2;
    conic::LinExpr log_arg = cp.trace_term(v, num::symmetrize(total));
    cp.obj_add_log(1.0, log_arg);
    conic::LinExpr linear = cp.trace_term(v, num::symmetrize(MatC(-lin / den_a)));
    linear.constant = -std::log(den_a) + 1.0; // + Tr(lin Gamma_a)/den_a = 1
    cp.obj_add_linear(linear);

    // Strictly interior warm start near the anchor.
    MatC start = 0.95 * ga + 0.05 * MatC::Identity(m, m) / m;
    cp.set_start_hermitian(v, start);

    conic::ConicSolution sol = conic::solve_barrier(cp, opts);
    out.status = sol.status;
    out.iterations = sol.iterations;
    out.gamma = num::symmetrize(sol.hermitian_value(cp, v));
    out.sdp_objective = bandwidth * kLog2e * sol.objective;
    ExtractContext ctx{g1, g2, p_c, p_v, sigma2};
    out.f = extract_rank_one(out.gamma, &out.rank_gap, &ctx, rng, &out.used_randomization);
    return out;
}

} // namespace irsva::mud
