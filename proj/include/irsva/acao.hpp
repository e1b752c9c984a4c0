// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Per-pair block-coordinate descent over detector, IRS phases and powers
// (in that order), convergence on the spectral-efficiency trace, then
// Hungarian matching over all reuse pairs. Baseline variants disable or
// de-robustify individual blocks.

#pragma once

#include "irsva/conic.hpp"
#include "irsva/matching.hpp"
#include "irsva/phase.hpp"
#include "irsva/scenario.hpp"

#include <string>
#include <vector>

namespace irsva::acao {

enum class Variant { proposed, random_reuse, random_irs, non_robust, no_irs };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

enum class PairStatus { converged, iteration_cap, infeasible };

struct PairResult {
    int i = -1, l = -1;
    VecC f;              // converged detector
    VecC e;              // converged reflection vector
    double p_c = 0, p_v = 0;
    double capacity_bps = 0;
    std::vector<double> trace; // spectral efficiency (bit/s/Hz) per iteration
    double initial_se = 0;     // value at the initialization point
    PairStatus status = PairStatus::iteration_cap;
    int iterations = 0;
    double kappa = 0, z = 0;

    // Converged robust-constraint certificates (proposed/random variants).
    bool have_cvar = false;
    MatC lambda, psi;
    double q = 0;

    int extraction_warnings = 0; // realized capacity drifted >5% from the SDP value
    int phase_rejections = 0;    // extracted phases not accepted by the safeguard
    int newton_iterations = 0;
};

struct UnsharedResult {
    VecC f;
    VecC e;
    double capacity_bps = 0;
};

struct SolutionState {
    Variant variant = Variant::proposed;
    int I = 0, L = 0;
    std::vector<PairResult> pairs; // I*L, row-major by (i, l)
    std::vector<UnsharedResult> unshared; // per CUE
    match::Assignment assignment;
    double total_bps = 0;

    const PairResult& pair(int i, int l) const { return pairs[static_cast<std::size_t>(i) * L + l]; }
    bool serves(int i, int l) const; // assignment picked the real feasible cell (i,l)
};

struct RunOptions {
    RunOptions() {
        // The coordinate-descent loop needs block solves only a couple of
        // orders tighter than its own convergence threshold; a coarser path
        // keeps per-iteration Newton counts small. Oracle tests use the
        // solver defaults instead.
        solver.tol = 1e-6;
        solver.mu_factor = 0.05;
    }
    conic::SolveOptions solver;
    double warm_mu0 = 1e-2; // barrier restart level for warm-started solves
};

// One reuse pair, full BCD.
PairResult optimize_pair(const scn::Scenario& sc, const scn::ChannelSet& cs, int i, int l,
                         Variant variant, const RunOptions& opts = {});

// CUE alone on its spectrum (virtual-pair capacity).
UnsharedResult optimize_unshared(const scn::Scenario& sc, const scn::ChannelSet& cs, int i,
                                 Variant variant, const RunOptions& opts = {});

// Full pipeline for the given variant. The channel set must already match
// the variant's world (callers zero IRS links for Variant::no_irs).
SolutionState run_variant(Variant variant, const scn::Scenario& sc, const scn::ChannelSet& cs,
                          const RunOptions& opts = {});

inline SolutionState run_acao(const scn::Scenario& sc, const scn::ChannelSet& cs,
                              const RunOptions& opts = {}) {
    return run_variant(Variant::proposed, sc, cs, opts);
}

SolutionState run_baseline(Variant variant, const scn::Scenario& sc, const scn::ChannelSet& cs,
                           const RunOptions& opts = {});

} // namespace irsva::acao
