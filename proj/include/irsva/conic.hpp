// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Dense log-barrier interior-point solver for smooth concave maximization
// over Hermitian matrix and real scalar variables subject to affine
// equalities, affine scalar inequalities and linear matrix inequalities
// "affine(vars) >= 0". Hermitian variables are parameterised by d^2 real
// coordinates (diagonal, then re/im of each upper off-diagonal entry); all
// barrier algebra runs natively in complex arithmetic.
//
// A structured Newton path automatically eliminates a Hermitian variable
// that appears identity-embedded in exactly two LMIs and nowhere else
// except scalar inequalities (the shape of a dominated-slack matrix); this
// keeps the per-iteration cost polynomial in the remaining block.

#pragma once

#include "irsva/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace irsva::conic {

struct VarRef {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Affine functional over the flattened real coordinates.
struct LinExpr {
    std::vector<std::pair<int, double>> terms; // (coordinate, coefficient)
    double constant = 0.0;
    LinExpr& add(int coord, double coeff) {
        if (coeff != 0.0) terms.emplace_back(coord, coeff);
        return *this;
    }
};

class ConicProblem {
public:
    VarRef add_hermitian(int dim);
    VarRef add_scalar();

    int var_dim(VarRef v) const;
    int num_coords() const;

    // Coordinate handles into the flattened vector.
    int coord_diag(VarRef v, int i) const;
    int coord_re(VarRef v, int i, int j) const; // i < j
    int coord_im(VarRef v, int i, int j) const; // i < j
    int coord_scalar(VarRef v) const;

    // Tr(C V) as a LinExpr; C must be Hermitian.
    LinExpr trace_term(VarRef v, const MatC& c) const;
    LinExpr scalar_term(VarRef v, double coeff = 1.0) const;

    MatC unpack_hermitian(const VecR& x, VarRef v) const;
    void pack_hermitian(VecR& x, VarRef v, const MatC& value) const;

    void add_eq(const LinExpr& e, double rhs);
    void add_ineq(const LinExpr& e, double rhs); // e(x) <= rhs

    // LMIs: constant + sum of embedded Hermitian variables (real coeff,
    // diagonal block offset) + sum of scalar*HermitianMatrix terms >= 0.
    int add_lmi(int dim);
    void lmi_add_constant(int k, const MatC& c);
    void lmi_add_hermitian_block(int k, VarRef v, int block_offset, double coeff);
    void lmi_add_scalar_matrix(int k, VarRef v, const MatC& c);
    int num_lmis() const;

    // Structured concave objective: sum of w*ln(affine) terms plus an
    // affine part. `arg` must stay positive on the feasible interior.
    void obj_add_log(double w, const LinExpr& arg);
    void obj_add_linear(const LinExpr& e);

    // Free-form alternative: value, optional gradient and dense Hessian of a
    // smooth concave function of the coordinates. Overrides the structured
    // objective when set.
    using ObjectiveFn = std::function<double(const VecR&, VecR*, MatR*)>;
    void obj_set_callback(ObjectiveFn f);

    // Optional warm start; must satisfy equalities and be strictly feasible
    // for inequalities/LMIs, otherwise phase 1 runs anyway.
    void set_start(const VecR& x);
    void set_start_hermitian(VarRef v, const MatC& value);
    void set_start_scalar(VarRef v, double value);

    struct Impl;
    const Impl& impl() const { return *impl_; }
    Impl& impl() { return *impl_; }
    ConicProblem();
    ~ConicProblem();
    ConicProblem(const ConicProblem&) = delete;
    ConicProblem& operator=(const ConicProblem&) = delete;
    ConicProblem(ConicProblem&&) noexcept;
    ConicProblem& operator=(ConicProblem&&) noexcept;

private:
    std::unique_ptr<Impl> impl_;
};

struct SolveOptions {
    double tol = 1e-7;
    int max_iter = 200;      // Newton-iteration budget
    double mu0 = 1.0;
    double mu_factor = 0.1;
    double phase1_margin = 1e-8;
    bool use_elimination = true;
    bool log_iterates = false;
    std::string log_path; // empty: stderr when log_iterates is set
};

enum class SolveStatus { optimal, infeasible, iteration_cap, malformed };

struct KktReport {
    double eq_residual = 0;    // max |A x - b|
    double ineq_violation = 0; // max(0, e(x) - rhs)
    double lmi_violation = 0;  // max over LMIs of max(0, -lambda_min)
    double stationarity = 0;   // inf-norm of the Lagrangian gradient
    double gap = 0;            // complementarity surrogate
    bool within(double tol, double obj_scale) const {
        return eq_residual <= 10 * tol && ineq_violation <= 10 * tol &&
               lmi_violation <= 10 * tol && stationarity <= 10 * tol * obj_scale &&
               gap <= 10 * tol * obj_scale;
    }
};

struct ConicSolution {
    SolveStatus status = SolveStatus::malformed;
    VecR x;
    double objective = 0;
    int iterations = 0;
    KktReport kkt;

    // Duals at the final barrier point.
    VecR ineq_duals;
    std::vector<MatC> lmi_duals;
    VecR eq_duals;
    double mu_final = 0;

    // Infeasibility certificate (phase 1): most violated constraint and the
    // optimal slack bound. Constraint indexing: inequalities first, then
    // LMIs, in declaration order.
    int most_violated = -1;
    double infeasibility = 0;

    // Objective value at the end of each outer barrier stage.
    std::vector<double> outer_objectives;

    MatC hermitian_value(const ConicProblem& p, VarRef v) const {
        return p.unpack_hermitian(x, v);
    }
    double scalar_value(const ConicProblem& p, VarRef v) const {
        return x(p.coord_scalar(v));
    }
};

// Finds a strictly feasible point (status optimal, margin >= phase1_margin)
// or an infeasibility certificate (status infeasible).
ConicSolution phase1_feasible(const ConicProblem& p, const SolveOptions& opts = {});

// Barrier path following from a strictly feasible start (user-supplied or
// via phase 1).
ConicSolution solve_barrier(const ConicProblem& p, const SolveOptions& opts = {});
ConicSolution solve_barrier(const ConicProblem& p, double tol, int max_iter);

// Recomputes all KKT residuals from scratch for a populated solution.
KktReport check_kkt(const ConicProblem& p, const ConicSolution& s);

// Internal cross-check hook: dense and eliminated Newton directions at a
// strictly feasible point (used by the solver's own tests).
std::pair<VecR, VecR> newton_direction_pair(const ConicProblem& p, const VecR& x, double mu);

} // namespace irsva::conic
