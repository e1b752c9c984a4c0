// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/phase.hpp"

#include "irsva/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace irsva::phase {

namespace {
constexpr double kLog2e = 1.4426950408889634;
// Inflation buffer above the irreducible CVaR infimum; also the slack
// budget that keeps the slack-block barrier geometry well conditioned.
constexpr double kCvarInflationMargin = 1e-2;

double re_trace(const MatC& a, const MatC& b) {
    return (a.array() * b.transpose().array()).sum().real();
}

MatC positive_part(const MatC& a) {
    Eigen::SelfAdjointEigenSolver<MatC> es(a);
    VecR lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}
} // namespace

MomentMatrix moment_matrix(const std::vector<VecC>& g3_samples) {
    if (g3_samples.size() < 2) throw InvalidInput("moment_matrix: need at least 2 samples");
    const int S = static_cast<int>(g3_samples.size());
    const int dim = static_cast<int>(g3_samples[0].size());
    if (dim % 2 != 0) throw InvalidInput("moment_matrix: stacked dimension must be even");

    MomentMatrix mm;
    mm.half_dim = dim / 2;
    mm.mean = VecC::Zero(dim);
    for (const auto& s : g3_samples) mm.mean += s;
    mm.mean /= static_cast<double>(S);
    mm.cov = MatC::Zero(dim, dim);
    double sumsq = 0;
    for (const auto& s : g3_samples) {
        const VecC d = s - mm.mean;
        mm.cov.noalias() += d * d.adjoint();
        sumsq += s.squaredNorm();
    }
    mm.cov /= static_cast<double>(S);
    mm.scale = std::sqrt(std::max(sumsq / (static_cast<double>(S) * dim), 1e-300));

    MatC xi(dim + 1, dim + 1);
    xi.topLeftCorner(dim, dim) = mm.cov + mm.mean * mm.mean.adjoint();
    xi.topRightCorner(dim, 1) = mm.mean;
    xi.bottomLeftCorner(1, dim) = mm.mean.adjoint();
    xi(dim, dim) = 1.0;
    xi = num::symmetrize(xi);
    // PSD floor
    Eigen::SelfAdjointEigenSolver<MatC> es(xi);
    if (es.eigenvalues().minCoeff() < 0) {
        VecR lam = es.eigenvalues().cwiseMax(0.0);
        xi = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
        xi = num::symmetrize(xi);
    }
    mm.xi = xi;
    return mm;
}

CvarLmiSet cvar_lmi_set(const MomentMatrix& mm, double delta, double gamma_th, double sigma2,
                        double p_c, double p_v) {
    if (delta <= 0 || delta >= 1) throw InvalidInput("cvar_lmi_set: delta in (0,1)");
    CvarLmiSet set;
    set.delta = delta;
    set.scale = mm.scale;
    set.gamma_th = gamma_th;
    set.sigma2 = sigma2;
    set.p_c = p_c;
    set.p_v = p_v;
    set.half_dim = mm.half_dim;
    set.gamma_sigma2_n = gamma_th * sigma2 / (mm.scale * mm.scale);

    const int dim = 2 * mm.half_dim;
    // Xi_n = T^{-1} Xi T^{-1}, T = blkdiag(scale*I, 1).
    set.xi_n = mm.xi;
    set.xi_n.topLeftCorner(dim, dim) /= mm.scale * mm.scale;
    set.xi_n.topRightCorner(dim, 1) /= mm.scale;
    set.xi_n.bottomLeftCorner(1, dim) /= mm.scale;
    set.xi_n = num::symmetrize(set.xi_n);
    // A singular moment matrix leaves recession directions in (Psi, q); the
    // tiny inflation below only tightens the constraint (conservative) and
    // keeps the feasible set bounded.
    set.xi_n.diagonal().array() += 1e-8 * set.xi_n.trace().real() / (dim + 1);
    return set;
}

CvarLmiSet::Installed CvarLmiSet::install(conic::ConicProblem& cp, conic::VarRef lambda) const {
    const int np1 = half_dim;
    const int big = 2 * np1 + 1;
    Installed out;
    out.psi = cp.add_hermitian(big);
    out.q = cp.add_scalar();

    out.lmi_psi = cp.add_lmi(big);
    cp.lmi_add_hermitian_block(out.lmi_psi, out.psi, 0, 1.0);

    // Psi - blkdiag(gamma p_c Lambda, -p_v Lambda, gamma_sigma2_n - q) >= 0
    out.lmi_dom = cp.add_lmi(big);
    cp.lmi_add_hermitian_block(out.lmi_dom, out.psi, 0, 1.0);
    cp.lmi_add_hermitian_block(out.lmi_dom, lambda, 0, -gamma_th * p_c);
    cp.lmi_add_hermitian_block(out.lmi_dom, lambda, np1, p_v);
    {
        MatC corner = MatC::Zero(big, big);
        corner(big - 1, big - 1) = -gamma_sigma2_n;
        cp.lmi_add_constant(out.lmi_dom, corner);
        cp.lmi_add_scalar_matrix(out.lmi_dom, out.q,
                                 MatC::Identity(big, big).col(big - 1) *
                                     MatC::Identity(big, big).row(big - 1));
    }

    // q + (1/delta) Tr(Xi_n Psi) <= rho0
    conic::LinExpr e = cp.scalar_term(out.q, 1.0);
    conic::LinExpr tr = cp.trace_term(out.psi, num::symmetrize(MatC(xi_n / delta)));
    for (auto& t : tr.terms) e.terms.push_back(t);
    cp.add_ineq(e, rho0);
    out.ineq_index = -1; // index bookkeeping not needed by callers
    return out;
}

bool CvarLmiSet::accepts(const MatC& lambda, const MatC& psi, double q, double slack_tol) const {
    const int np1 = half_dim;
    const int big = 2 * np1 + 1;
    if (psi.rows() != big) return false;
    // true-frame Xi
    MatC xi = xi_n;
    const int dim = 2 * np1;
    xi.topLeftCorner(dim, dim) *= scale * scale;
    xi.topRightCorner(dim, 1) *= scale;
    xi.bottomLeftCorner(1, dim) *= scale;
    const double lin = q + re_trace(xi, psi) / delta;
    if (lin > rho0 * scale * scale + slack_tol) return false;
    Eigen::SelfAdjointEigenSolver<MatC> es1(num::symmetrize(psi), Eigen::EigenvaluesOnly);
    if (es1.eigenvalues().minCoeff() < -slack_tol) return false;
    MatC omega = MatC::Zero(big, big);
    omega.topLeftCorner(dim, dim) = sinr::delta_of_lambda(lambda, p_c, p_v, gamma_th);
    omega(big - 1, big - 1) = gamma_th * sigma2 - q;
    Eigen::SelfAdjointEigenSolver<MatC> es2(num::symmetrize(MatC(psi - omega)),
                                            Eigen::EigenvaluesOnly);
    return es2.eigenvalues().minCoeff() >= -slack_tol;
}

MatC CvarLmiSet::psi_to_true(const MatC& psi_n) const {
    const int dim = 2 * half_dim;
    MatC psi = psi_n;
    // Psi = scale^2 T^{-H} Psi_n T^{-1}: top-left unchanged, borders scaled.
    psi.topRightCorner(dim, 1) *= scale;
    psi.bottomLeftCorner(1, dim) *= scale;
    psi(dim, dim) *= scale * scale;
    return psi;
}

namespace {

struct WhitenedCvar {
    MatC L;       // lower Cholesky of the regularized normalized moments
    MatC delta_m; // Delta(Lambda) in the normalized frame
    int big = 0;

    MatC omega_of_q(double q, double gamma_sigma2_n) const {
        MatC o = MatC::Zero(big, big);
        o.topLeftCorner(big - 1, big - 1) = delta_m;
        o(big - 1, big - 1) = gamma_sigma2_n - q;
        return o;
    }
};

std::optional<WhitenedCvar> whiten(const CvarLmiSet& set, const MatC& lambda) {
    WhitenedCvar w;
    const int dim = 2 * set.half_dim;
    w.big = dim + 1;
    MatC xi_reg = set.xi_n;
    const double reg = std::max(1e-12, 1e-10 * xi_reg.trace().real() / w.big);
    xi_reg.diagonal().array() += reg;
    Eigen::LLT<MatC> llt(xi_reg);
    if (llt.info() != Eigen::Success) return std::nullopt;
    w.L = llt.matrixL();
    w.delta_m = sinr::delta_of_lambda(lambda, set.p_c, set.p_v, set.gamma_th);
    return w;
}

double h_of_q(const WhitenedCvar& w, const CvarLmiSet& set, double q) {
    const MatC m = w.L.adjoint() * w.omega_of_q(q, set.gamma_sigma2_n) * w.L;
    Eigen::SelfAdjointEigenSolver<MatC> es(num::symmetrize(m), Eigen::EigenvaluesOnly);
    return q + es.eigenvalues().cwiseMax(0.0).sum() / set.delta;
}

} // namespace

CvarInfimum cvar_infimum(const CvarLmiSet& set, const MatC& lambda) {
    const auto w = whiten(set, lambda);
    if (!w) return {1e300, 0.0};
    auto h = [&](double q) { return h_of_q(*w, set, q); };

    // Bracket the 1-D convex minimum, then golden-section.
    double lo = -1.0, hi = 1.0;
    double flo = h(lo), fhi = h(hi);
    for (int it = 0; it < 60 && h(lo * 2) < flo; ++it) {
        lo *= 2;
        flo = h(lo);
    }
    for (int it = 0; it < 60 && h(hi * 2) < fhi; ++it) {
        hi *= 2;
        fhi = h(hi);
    }
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    double f1 = h(c1), f2 = h(c2);
    for (int it = 0; it < 160; ++it) {
        if (f1 < f2) {
            b = c2; c2 = c1; f2 = f1;
            c1 = b - gr * (b - a);
            f1 = h(c1);
        } else {
            a = c1; c1 = c2; f1 = f2;
            c2 = a + gr * (b - a);
            f2 = h(c2);
        }
        if (b - a < 1e-13 * (1.0 + std::abs(a) + std::abs(b))) break;
    }
    CvarInfimum out;
    out.q_star = 0.5 * (a + b);
    out.h_star = h(out.q_star);
    return out;
}

std::optional<std::pair<MatC, double>> cvar_feasible_point(const CvarLmiSet& set,
                                                           const MatC& lambda, double margin) {
    const auto w = whiten(set, lambda);
    if (!w) return std::nullopt;
    const CvarInfimum inf = cvar_infimum(set, lambda);
    const double slack = set.rho0 - inf.h_star;
    if (slack <= 2.0 * margin) return std::nullopt;

    const int big = w->big;
    const MatC m =
        num::symmetrize(MatC(w->L.adjoint() * w->omega_of_q(inf.q_star, set.gamma_sigma2_n) * w->L));
    const MatC mp = positive_part(m);
    MatC linv = MatC::Identity(big, big);
    w->L.triangularView<Eigen::Lower>().solveInPlace(linv); // linv = L^{-1}
    MatC psi = num::symmetrize(MatC(linv.adjoint() * mp * linv));
    // spend at most half the slack on strictness of the two LMIs
    const double bump =
        std::min(0.25 * slack * set.delta / std::max(1e-12, set.xi_n.trace().real()),
                 1e-4 * (1.0 + psi.diagonal().real().maxCoeff()));
    psi.diagonal().array() += std::max(bump, 1e-12);
    return std::make_pair(psi, inf.q_star);
}

double true_objective(const MatC& lambda, const MatC& g3, const MatC& g4, double p_c,
                      double p_v, double sigma2_tr_gamma, double bandwidth) {
    const double num = p_c * re_trace(g3, lambda);
    const double den = p_v * re_trace(g4, lambda) + sigma2_tr_gamma;
    return bandwidth * std::log2(1.0 + num / den);
}

double sca_bound(const MatC& lambda, const MatC& lambda_a, const MatC& g3, const MatC& g4,
                 double p_c, double p_v, double sigma2_tr_gamma, double bandwidth) {
    const double t3 = re_trace(g3, lambda);
    const double t4 = re_trace(g4, lambda);
    const double t4a = re_trace(g4, lambda_a);
    const double den_a = p_v * t4a + sigma2_tr_gamma;
    if (den_a <= 0) throw InvalidInput("sca_bound: nonpositive expansion denominator");
    const double total = p_v * t4 + sigma2_tr_gamma + p_c * t3;
    if (total <= 0) throw InvalidInput("sca_bound: nonpositive log argument");
    return bandwidth * kLog2e *
           (std::log(total) - std::log(den_a) - p_v * (t4 - t4a) / den_a);
}

PhaseExtraction extract_phase_vector(const MatC& lambda) {
    const int np1 = static_cast<int>(lambda.rows());
    if (!num::is_hermitian(lambda, 1e-8)) throw InvalidInput("extract_phase_vector: not Hermitian");
    const num::Evd evd = num::hermitian_evd(lambda);
    const VecC w = evd.eigenvectors.col(0);

    PhaseExtraction out;
    VecC unit(np1);
    for (int k = 0; k < np1; ++k) {
        const double m = std::abs(w(k));
        if (m < 1e-12) {
            unit(k) = 1.0;
            out.flagged.push_back(k);
        } else {
            unit(k) = w(k) / m;
        }
    }
    const cplx u0 = unit(0);
    out.u = (u0.real() < 0) ? -1 : 1;
    out.e = VecC(np1 - 1);
    for (int n = 0; n < np1 - 1; ++n) {
        cplx v = unit(n + 1) * std::conj(u0);
        out.e(n) = v / std::abs(v); // exact unit modulus
    }
    return out;
}

namespace {

void add_phase_objective(conic::ConicProblem& cp, conic::VarRef lam, const MatC& g3,
                         const MatC& g4, double p_c, double p_v, double sigma2_tr_gamma,
                         const MatC& lambda_a) {
    const double den_a = p_v * re_trace(g4, lambda_a) + sigma2_tr_gamma;
    MatC total = num::symmetrize(MatC(p_c * g3 + p_v * g4));
    conic::LinExpr log_arg = cp.trace_term(lam, total);
    log_arg.constant = sigma2_tr_gamma;
    cp.obj_add_log(1.0, log_arg);
    conic::LinExpr linear = cp.trace_term(lam, num::symmetrize(MatC(-(p_v / den_a) * g4)));
    linear.constant = -std::log(den_a) + p_v * re_trace(g4, lambda_a) / den_a;
    cp.obj_add_linear(linear);
}

struct PhaseProblem {
    conic::ConicProblem cp;
    conic::VarRef lam;
};

PhaseProblem make_lambda_problem(int np1) {
    PhaseProblem pp;
    pp.lam = pp.cp.add_hermitian(np1);
    for (int n = 0; n < np1; ++n) {
        conic::LinExpr d;
        d.add(pp.cp.coord_diag(pp.lam, n), 1.0);
        pp.cp.add_eq(d, 1.0);
    }
    const int lmi = pp.cp.add_lmi(np1);
    pp.cp.lmi_add_hermitian_block(lmi, pp.lam, 0, 1.0);
    return pp;
}

MatC interior_lambda(const MatC& lambda_a, double blend = 0.05) {
    const int np1 = static_cast<int>(lambda_a.rows());
    return num::symmetrize(
        MatC((1.0 - blend) * lambda_a + blend * MatC::Identity(np1, np1)));
}

PhaseResult finish_phase(const conic::ConicProblem& cp, conic::VarRef lam,
                         const conic::ConicSolution& sol, double bandwidth) {
    PhaseResult out;
    out.status = sol.status;
    out.iterations = sol.iterations;
    out.lambda = num::symmetrize(sol.hermitian_value(cp, lam));
    out.sdp_objective = bandwidth * kLog2e * sol.objective;
    PhaseExtraction ex = extract_phase_vector(out.lambda);
    out.e = ex.e;
    out.u = ex.u;
    out.flagged_entries = ex.flagged;
    return out;
}

} // namespace

PhaseResult solve_phase_iteration(const MatC& g3, const MatC& g4, double sigma2_tr_gamma,
                                  double p_c, double p_v, const MatC& lambda_a,
                                  const CvarLmiSet& cvar, double bandwidth,
                                  const conic::SolveOptions& opts, const MatC* lambda_hint) {
    const int np1 = static_cast<int>(lambda_a.rows());
    PhaseProblem pp = make_lambda_problem(np1);
    add_phase_objective(pp.cp, pp.lam, g3, g4, p_c, p_v, sigma2_tr_gamma, lambda_a);

    // The exact worst-case CVaR set is empty whenever the moment matrix is
    // full rank (positive interference block), so enforce the constraint at
    // the smallest level attainable near the anchor: rho0 just above the
    // anchor's infimum. The anchor stays feasible and the step keeps the
    // monotone objective property.
    CvarLmiSet local = cvar;
    MatC lam0;
    double h_anchor = 1e300;
    for (double blend : {0.05, 0.3, 1.0}) {
        lam0 = interior_lambda(lambda_a, blend);
        const CvarInfimum inf = cvar_infimum(local, lam0);
        h_anchor = inf.h_star;
        if (h_anchor < 1e290) break;
    }
    if (h_anchor > 1e290) {
        PhaseResult out;
        out.infeasible = true;
        out.status = conic::SolveStatus::infeasible;
        out.lambda = lambda_a;
        PhaseExtraction ex = extract_phase_vector(lambda_a);
        out.e = ex.e;
        out.u = ex.u;
        return out;
    }
    local.rho0 = std::max(local.rho0, h_anchor + kCvarInflationMargin * (1.0 + std::abs(h_anchor)));

    // A start near the expected optimizer saves most of the Newton work;
    // widen rho0 so the hinted start stays inside the inflated set.
    if (lambda_hint && lambda_hint->rows() == np1) {
        const MatC lam_h = interior_lambda(*lambda_hint, 0.05);
        const CvarInfimum ih = cvar_infimum(local, lam_h);
        if (ih.h_star < 1e290) {
            const double rho_h =
                ih.h_star + kCvarInflationMargin * (1.0 + std::abs(ih.h_star));
            if (rho_h < 4.0 * (std::abs(local.rho0) + 1.0)) {
                local.rho0 = std::max(local.rho0, rho_h);
                lam0 = lam_h;
            }
        }
    }

    const auto inst = local.install(pp.cp, pp.lam);
    auto fp = cvar_feasible_point(local, lam0);
    if (!fp) {
        lam0 = interior_lambda(lambda_a, 0.05);
        fp = cvar_feasible_point(local, lam0);
    }
    if (!fp) {
        // Fall back to the generic feasibility search on the installed set.
        conic::ConicSolution p1 = conic::phase1_feasible(pp.cp, opts);
        if (p1.status != conic::SolveStatus::optimal) {
            PhaseResult out;
            out.infeasible = true;
            out.status = conic::SolveStatus::infeasible;
            out.iterations = p1.iterations;
            out.lambda = lambda_a;
            PhaseExtraction ex = extract_phase_vector(lambda_a);
            out.e = ex.e;
            out.u = ex.u;
            return out;
        }
        pp.cp.set_start(p1.x);
    } else {
        pp.cp.set_start_hermitian(pp.lam, lam0);
        pp.cp.set_start_hermitian(inst.psi, fp->first);
        pp.cp.set_start_scalar(inst.q, fp->second);
    }

    conic::ConicSolution sol = conic::solve_barrier(pp.cp, opts);
    PhaseResult out = finish_phase(pp.cp, pp.lam, sol, bandwidth);
    out.q = local.q_to_true(sol.scalar_value(pp.cp, inst.q));
    out.psi = local.psi_to_true(sol.hermitian_value(pp.cp, inst.psi));
    out.cvar_inflation = local.rho0;
    return out;
}

PhaseResult solve_phase_deterministic(const MatC& g3, const MatC& g4, double sigma2_tr_gamma,
                                      double p_c, double p_v, const MatC& lambda_a,
                                      const VecC& g1_bar, const VecC& g2_bar, double gamma_th,
                                      double sigma2, double bandwidth,
                                      const conic::SolveOptions& opts) {
    const int np1 = static_cast<int>(lambda_a.rows());
    PhaseProblem pp = make_lambda_problem(np1);
    add_phase_objective(pp.cp, pp.lam, g3, g4, p_c, p_v, sigma2_tr_gamma, lambda_a);

    // gamma_th p_c g2^H L g2 - p_v g1^H L g1 <= -gamma_th sigma2, normalized
    // by the stack scale for conditioning.
    const double sc = std::max({g1_bar.cwiseAbs().maxCoeff(), g2_bar.cwiseAbs().maxCoeff(),
                                1e-150});
    const VecC u1 = g1_bar / sc, u2 = g2_bar / sc;
    MatC con = num::symmetrize(MatC(gamma_th * p_c * (u2 * u2.adjoint()) -
                                    p_v * (u1 * u1.adjoint())));
    conic::LinExpr row = pp.cp.trace_term(pp.lam, con);
    const double rhs = -gamma_th * sigma2 / (sc * sc);
    pp.cp.add_ineq(row, rhs);

    // Feasibility: need a Lambda with the deterministic SINR satisfied
    // strictly; try the blended anchor then identity, else phase 1.
    auto row_value = [&](const MatC& lam) {
        return gamma_th * p_c * (u2.adjoint() * lam * u2)(0).real() -
               p_v * (u1.adjoint() * lam * u1)(0).real();
    };
    bool started = false;
    for (double blend : {0.05, 0.3, 1.0}) {
        MatC lam0 = interior_lambda(lambda_a, blend);
        if (row_value(lam0) < rhs - 1e-12) {
            pp.cp.set_start_hermitian(pp.lam, lam0);
            started = true;
            break;
        }
    }
    if (!started) {
        conic::ConicSolution p1 = conic::phase1_feasible(pp.cp, opts);
        if (p1.status != conic::SolveStatus::optimal) {
            PhaseResult out;
            out.infeasible = true;
            out.status = conic::SolveStatus::infeasible;
            out.iterations = p1.iterations;
            out.lambda = lambda_a;
            PhaseExtraction ex = extract_phase_vector(lambda_a);
            out.e = ex.e;
            out.u = ex.u;
            return out;
        }
        pp.cp.set_start(p1.x);
    }

    conic::ConicSolution sol = conic::solve_barrier(pp.cp, opts);
    return finish_phase(pp.cp, pp.lam, sol, bandwidth);
}

PhaseResult solve_phase_unconstrained(const MatC& g3, const MatC& g4, double sigma2_tr_gamma,
                                      double p_c, double p_v, const MatC& lambda_a,
                                      double bandwidth, const conic::SolveOptions& opts) {
    const int np1 = static_cast<int>(lambda_a.rows());
    PhaseProblem pp = make_lambda_problem(np1);
    add_phase_objective(pp.cp, pp.lam, g3, g4, p_c, p_v, sigma2_tr_gamma, lambda_a);
    pp.cp.set_start_hermitian(pp.lam, interior_lambda(lambda_a));
    conic::ConicSolution sol = conic::solve_barrier(pp.cp, opts);
    return finish_phase(pp.cp, pp.lam, sol, bandwidth);
}

} // namespace irsva::phase
