// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Multi-user-detection subproblem: lift Gamma = f f^H, replace the capacity
// objective by its tight concave lower bound at the current iterate, solve
// the trace-normalized semidefinite relaxation, and recover the detector by
// eigendecomposition (Gaussian randomization as a fallback when the
// relaxation returns a numerically non-rank-one matrix).

#pragma once

#include "irsva/conic.hpp"
#include "irsva/rng.hpp"
#include "irsva/types.hpp"

namespace irsva::mud {

// Capacity W log2(1 + P_c Tr(Gamma G1) / (P_v Tr(Gamma G2) + sigma2 Tr(Gamma))).
double true_objective(const MatC& gamma, const MatC& g1, const MatC& g2, double p_c,
                      double p_v, double sigma2, double bandwidth);

// Concave lower bound, tight at gamma_a. Rejects nonpositive log arguments.
double sca_bound(const MatC& gamma, const MatC& gamma_a, const MatC& g1, const MatC& g2,
                 double p_c, double p_v, double sigma2, double bandwidth);

// Receive SINR of a detector f for rank-one G1 = a a^H, G2 = b b^H data.
double detector_sinr(const VecC& f, const MatC& g1, const MatC& g2, double p_c, double p_v,
                     double sigma2);

// Closed-form optimum f = (P_v b b^H + sigma2 I)^{-1} a, unit-normalized.
// Independent oracle for the relaxation path.
VecC mvdr_oracle(const VecC& a, const VecC& b, double p_v, double sigma2);

struct ExtractContext {
    MatC g1, g2;
    double p_c = 0, p_v = 0, sigma2 = 0;
};

// f = sqrt(lambda1) v1 under the deterministic phase convention. When
// lambda2/lambda1 exceeds the rank-one tolerance and a context is supplied,
// falls back to the best of 100 Gaussian randomization candidates by SINR.
VecC extract_rank_one(const MatC& gamma, double* rank_gap = nullptr,
                      const ExtractContext* ctx = nullptr, RngStream* rng = nullptr,
                      bool* used_fallback = nullptr);

struct MudResult {
    MatC gamma;           // SDP optimizer (unit trace)
    VecC f;               // extracted detector
    double sdp_objective; // SCA-bound value at the optimizer, W log2 units
    double rank_gap = 0;
    bool used_randomization = false;
    conic::SolveStatus status = conic::SolveStatus::malformed;
    int iterations = 0;
};

// One SCA linearization at gamma_a followed by the relaxed SDP solve.
MudResult solve_mud_iteration(const MatC& g1, const MatC& g2, double p_c, double p_v,
                              double sigma2, const MatC& gamma_a, double bandwidth,
                              const conic::SolveOptions& opts = {}, RngStream* rng = nullptr);

} // namespace irsva::mud
