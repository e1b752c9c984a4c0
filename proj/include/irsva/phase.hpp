// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// IRS phase-shift subproblem. The reflection stack r = [u; e] is lifted to
// Lambda = r r^H with unit diagonal; the outage constraint on the uncertain
// stacked vector g3 is the quadratic g3^H Delta(Lambda) g3 + gamma_th sigma2 <= 0
// and is conservatively enforced through its worst-case CVaR form: auxiliary
// (Psi, q) with
//   q + (1/delta) Tr(Xi Psi) <= 0,   Psi >= 0,   Psi >= blkdiag(Delta, gamma_th sigma2 - q),
// where Xi is the empirical second-order moment matrix of g3. The capacity
// objective is replaced by its tight concave bound at the current iterate
// and the resulting SDP is solved by the barrier method.

#pragma once

#include "irsva/conic.hpp"
#include "irsva/sinr.hpp"
#include "irsva/types.hpp"

#include <optional>
#include <vector>

namespace irsva::phase {

struct MomentMatrix {
    MatC xi;     // (2N+3) x (2N+3), true frame; bottom-right entry exactly 1
    VecC mean;   // 2(N+1)
    MatC cov;    // 1/S normalization
    double scale = 1.0; // RMS sample entry magnitude (conditioning aid)
    int half_dim = 0;   // N+1
};

// Empirical mean/covariance assembled into the block moment form; PSD is
// enforced by symmetrization plus an eigenvalue floor at zero.
MomentMatrix moment_matrix(const std::vector<VecC>& g3_samples);

// The CVaR constraint block over (Lambda, Psi, q) for fixed powers. Data is
// kept in a rescaled frame (samples divided by `scale`) so that all solver
// quantities are O(1); install() emits the constraints into a problem and
// accepts() checks a candidate triple in the true frame.
//
// With a full-rank moment matrix the literal worst-case CVaR of the
// two-sided quadratic is strictly positive for every Lambda (an adversarial
// distribution concentrates its delta-mass along directions where the
// interference block is positive), so the exact set is empty. The block
// therefore carries an inflation rho0: the constraint enforced is
// q + (1/delta) Tr(Xi Psi) <= rho0, with rho0 chosen just above the
// irreducible infimum at the current anchor. VaR <= CVaR still bounds the
// worst-case outage at the rho0-shifted threshold.
struct CvarLmiSet {
    MatC xi_n;              // normalized moment matrix
    double gamma_sigma2_n = 0; // gamma_th * sigma2 / scale^2
    double delta = 0;
    double scale = 1.0;
    double p_c = 0, p_v = 0, gamma_th = 0, sigma2 = 0;
    int half_dim = 0;  // N+1
    double rho0 = 0.0; // normalized-frame inflation of the scalar constraint

    struct Installed {
        conic::VarRef psi;
        conic::VarRef q;
        int lmi_psi = -1;
        int lmi_dom = -1;
        int ineq_index = -1;
    };
    Installed install(conic::ConicProblem& cp, conic::VarRef lambda) const;

    // True-frame feasibility of (Lambda, Psi, q) within slack_tol.
    bool accepts(const MatC& lambda, const MatC& psi, double q, double slack_tol) const;

    // Normalized-frame <-> true-frame maps for (Psi, q).
    MatC psi_to_true(const MatC& psi_n) const;
    double q_to_true(double q_n) const { return q_n * scale * scale; }
};

CvarLmiSet cvar_lmi_set(const MomentMatrix& mm, double delta, double gamma_th, double sigma2,
                        double p_c, double p_v);

// Closed-form evaluation of inf_q [ q + (1/delta) min{Tr(Xi Psi) : Psi >=
// Omega(q), Psi >= 0} ] for fixed Lambda: the inner minimum is the trace of
// the whitened positive part, leaving a 1-D convex search in q.
struct CvarInfimum {
    double h_star = 0;
    double q_star = 0;
};
CvarInfimum cvar_infimum(const CvarLmiSet& set, const MatC& lambda);

// Strictly feasible normalized (Psi_n, q_n) for the rho0-inflated set, or
// nullopt when even the inflated set has no interior at this Lambda.
std::optional<std::pair<MatC, double>> cvar_feasible_point(const CvarLmiSet& set,
                                                           const MatC& lambda,
                                                           double margin = 1e-9);

// Capacity and its concave bound in Lambda (sigma2_tr_gamma = sigma2*Tr(Gamma)).
double true_objective(const MatC& lambda, const MatC& g3, const MatC& g4, double p_c,
                      double p_v, double sigma2_tr_gamma, double bandwidth);
double sca_bound(const MatC& lambda, const MatC& lambda_a, const MatC& g3, const MatC& g4,
                 double p_c, double p_v, double sigma2_tr_gamma, double bandwidth);

struct PhaseExtraction {
    VecC e;                   // N unit-modulus entries
    int u = 1;                // sign convention of the auxiliary entry
    std::vector<int> flagged; // entries whose eigenvector component vanished
};

// Top eigenvector, entrywise unit-modulus projection, global rotation by the
// conjugate phase of the auxiliary entry.
PhaseExtraction extract_phase_vector(const MatC& lambda);

struct PhaseResult {
    MatC lambda;
    VecC e;
    int u = 1;
    double q = 0;  // true frame
    MatC psi;      // true frame
    double sdp_objective = 0; // W log2 units
    conic::SolveStatus status = conic::SolveStatus::malformed;
    bool infeasible = false; // constraint set empty at current powers
    int iterations = 0;
    std::vector<int> flagged_entries;
    double cvar_inflation = 0; // rho0 used for the robust step, normalized frame
};

// Robust (CVaR) phase step. lambda_hint, when given, only seeds the interior
// start (the bound stays anchored at lambda_a).
PhaseResult solve_phase_iteration(const MatC& g3, const MatC& g4, double sigma2_tr_gamma,
                                  double p_c, double p_v, const MatC& lambda_a,
                                  const CvarLmiSet& cvar, double bandwidth,
                                  const conic::SolveOptions& opts = {},
                                  const MatC* lambda_hint = nullptr);

// Non-robust phase step: the outage constraint is replaced by the
// deterministic SINR constraint at the point-estimate stacks g1_bar, g2_bar.
PhaseResult solve_phase_deterministic(const MatC& g3, const MatC& g4, double sigma2_tr_gamma,
                                      double p_c, double p_v, const MatC& lambda_a,
                                      const VecC& g1_bar, const VecC& g2_bar, double gamma_th,
                                      double sigma2, double bandwidth,
                                      const conic::SolveOptions& opts = {});

// Phase step with no outage constraint (unshared CUE optimization).
PhaseResult solve_phase_unconstrained(const MatC& g3, const MatC& g4, double sigma2_tr_gamma,
                                      double p_c, double p_v, const MatC& lambda_a,
                                      double bandwidth, const conic::SolveOptions& opts = {});

} // namespace irsva::phase
