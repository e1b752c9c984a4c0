// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/conic.hpp"

#include "irsva/numerics.hpp"
#include "irsva/rng.hpp"

#include <doctest.h>

using namespace irsva;
using namespace irsva::conic;

namespace {

// maximize Tr(C X) s.t. diag(X) = 1, X >= 0.
struct CutProblem {
    ConicProblem cp;
    VarRef x;
};

CutProblem make_cut(const MatC& c) {
    CutProblem out;
    const int d = static_cast<int>(c.rows());
    out.x = out.cp.add_hermitian(d);
    for (int i = 0; i < d; ++i) {
        LinExpr e;
        e.add(out.cp.coord_diag(out.x, i), 1.0);
        out.cp.add_eq(e, 1.0);
    }
    const int lmi = out.cp.add_lmi(d);
    out.cp.lmi_add_hermitian_block(lmi, out.x, 0, 1.0);
    out.cp.obj_add_linear(out.cp.trace_term(out.x, c));
    return out;
}

MatC two_by_two_offdiag() {
    MatC c(2, 2);
    c << 0, 1, 1, 0;
    return c;
}

} // namespace

TEST_CASE("phase 1 finds strictly feasible points") {
    SUBCASE("unit-diagonal PSD matrix") {
        CutProblem p = make_cut(two_by_two_offdiag());
        const ConicSolution f = phase1_feasible(p.cp);
        REQUIRE(f.status == SolveStatus::optimal);
        const MatC x = f.hermitian_value(p.cp, p.x);
        CHECK(x(0, 0).real() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(x(1, 1).real() == doctest::Approx(1.0).epsilon(1e-8));
        Eigen::SelfAdjointEigenSolver<MatC> es(num::symmetrize(x), Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > 1e-8);
    }
    SUBCASE("contradictory scalar bounds are infeasible") {
        ConicProblem cp;
        const VarRef v = cp.add_scalar();
        LinExpr ge1 = cp.scalar_term(v, -1.0); // -x <= -1  (x >= 1)
        cp.add_ineq(ge1, -1.0);
        LinExpr le0 = cp.scalar_term(v, 1.0); // x <= 0
        cp.add_ineq(le0, 0.0);
        const ConicSolution f = phase1_feasible(cp);
        CHECK(f.status == SolveStatus::infeasible);
        CHECK(f.most_violated >= 0);
        CHECK(f.infeasibility >= -1e-10);
    }
}

TEST_CASE("barrier solve: coupling objective on the unit-diagonal cone") {
    // brute force over X = [[1, t],[t, 1]]: objective 2t, optimum t = 1.
    double best_t = -1, best_v = -1e18;
    for (double t = -1.0; t <= 1.0; t += 1e-4) {
        const double v = 2 * t;
        if (v > best_v) {
            best_v = v;
            best_t = t;
        }
    }
    CHECK(best_t == doctest::Approx(1.0).epsilon(1e-3));

    CutProblem p = make_cut(two_by_two_offdiag());
    const ConicSolution s = solve_barrier(p.cp);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(2.0).epsilon(1e-5));
    const MatC x = s.hermitian_value(p.cp, p.x);
    CHECK(x(0, 1).real() == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(std::abs(x(0, 1).imag()) < 1e-5);

    SUBCASE("kkt residuals at the optimum") {
        const KktReport r = check_kkt(p.cp, s);
        CHECK(r.stationarity < 1e-6);
        CHECK(r.eq_residual < 1e-9);
        CHECK(r.lmi_violation < 1e-9);
        CHECK(r.gap < 1e-6);
    }
    SUBCASE("perturbation is detected") {
        ConicSolution bad = s;
        bad.x(p.cp.coord_re(p.x, 0, 1)) -= 0.1;
        const KktReport r = check_kkt(p.cp, bad);
        // the objective is linear, so the defect surfaces in complementarity
        CHECK(std::max(r.stationarity, r.gap) > 1e-2);
    }
    SUBCASE("suboptimal interior point shows a gap") {
        ConicSolution mid = s;
        mid.x(p.cp.coord_re(p.x, 0, 1)) = 0.0;
        mid.x(p.cp.coord_im(p.x, 0, 1)) = 0.0;
        const KktReport r = check_kkt(p.cp, mid);
        CHECK(r.gap > 1e-3);
    }
}

TEST_CASE("barrier solve: binding shifted-cone constraint") {
    // maximize -Tr(X) s.t. X - I >= 0  ->  X = I, value -dim
    for (int dim : {2, 4}) {
        ConicProblem cp;
        const VarRef x = cp.add_hermitian(dim);
        const int lmi = cp.add_lmi(dim);
        cp.lmi_add_hermitian_block(lmi, x, 0, 1.0);
        cp.lmi_add_constant(lmi, -MatC::Identity(dim, dim));
        cp.obj_add_linear(cp.trace_term(x, -MatC::Identity(dim, dim)));
        const ConicSolution s = solve_barrier(cp);
        REQUIRE(s.status == SolveStatus::optimal);
        CHECK(s.objective == doctest::Approx(-double(dim)).epsilon(1e-5));
        const MatC sol = s.hermitian_value(cp, x);
        CHECK((sol - MatC::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("barrier solve: constant objective returns a feasible point") {
    CutProblem p = make_cut(MatC::Zero(3, 3));
    const ConicSolution s = solve_barrier(p.cp);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective == doctest::Approx(0.0));
    CHECK(num::is_psd(s.hermitian_value(p.cp, p.x), 1e-9));
}

TEST_CASE("monotone outer objective along the barrier path") {
    RngStream rng(17, StreamTag::misc);
    MatC c(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) c(i, j) = rng.next_cn01();
    c = num::symmetrize(c);
    CutProblem p = make_cut(c);
    const ConicSolution s = solve_barrier(p.cp);
    REQUIRE(s.status == SolveStatus::optimal);
    REQUIRE(s.outer_objectives.size() >= 3);
    for (std::size_t k = 1; k < s.outer_objectives.size(); ++k)
        CHECK(s.outer_objectives[k] >= s.outer_objectives[k - 1] - 1e-9);
}

TEST_CASE("optimum independent of the starting point") {
    MatC c(3, 3);
    c.setZero();
    c(0, 1) = cplx(0.4, 0.2);
    c(1, 0) = std::conj(c(0, 1));
    c(1, 2) = cplx(-0.7, 0.1);
    c(2, 1) = std::conj(c(1, 2));
    c(0, 0) = 0.3;

    CutProblem p1 = make_cut(c);
    const ConicSolution a = solve_barrier(p1.cp); // phase-1 start

    CutProblem p2 = make_cut(c);
    p2.cp.set_start_hermitian(p2.x, MatC::Identity(3, 3));
    const ConicSolution b = solve_barrier(p2.cp);

    CutProblem p3 = make_cut(c);
    MatC alt = MatC::Identity(3, 3);
    alt(0, 1) = 0.25;
    alt(1, 0) = 0.25;
    p3.cp.set_start_hermitian(p3.x, alt);
    const ConicSolution d = solve_barrier(p3.cp);

    REQUIRE(a.status == SolveStatus::optimal);
    REQUIRE(b.status == SolveStatus::optimal);
    REQUIRE(d.status == SolveStatus::optimal);
    CHECK(std::abs(a.objective - b.objective) < 10 * 1e-7 * (1 + std::abs(a.objective)));
    CHECK(std::abs(a.objective - d.objective) < 10 * 1e-7 * (1 + std::abs(a.objective)));
}

TEST_CASE("complex problem equals its real symmetric embedding") {
    RngStream rng(23, StreamTag::misc);
    for (int rep = 0; rep < 3; ++rep) {
        const int d = 2 + rep % 2;
        MatC c(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) c(i, j) = rng.next_cn01();
        c = num::symmetrize(c);

        CutProblem hp = make_cut(c);
        const ConicSolution hs = solve_barrier(hp.cp);
        REQUIRE(hs.status == SolveStatus::optimal);

        // real 2d x 2d embedding emb(X) = [[A, -B],[B, A]], objective
        // (1/2) Tr(emb(C) Y) over unit-diagonal PSD Y.
        MatC emb = MatC::Zero(2 * d, 2 * d);
        const MatR a = c.real(), b = c.imag();
        emb.topLeftCorner(d, d) = a.cast<cplx>();
        emb.bottomRightCorner(d, d) = a.cast<cplx>();
        emb.topRightCorner(d, d) = (-b).cast<cplx>();
        emb.bottomLeftCorner(d, d) = b.cast<cplx>();
        CutProblem rp = make_cut(MatC(0.5 * emb));
        const ConicSolution rs = solve_barrier(rp.cp);
        REQUIRE(rs.status == SolveStatus::optimal);
        CHECK(std::abs(hs.objective - rs.objective) <
              10 * 1e-7 * (1 + std::abs(hs.objective)));
    }
}

TEST_CASE("non-concave callback objective is reported as malformed") {
    ConicProblem cp;
    const VarRef v = cp.add_scalar();
    cp.add_ineq(cp.scalar_term(v, 1.0), 1.0);  // x <= 1
    cp.add_ineq(cp.scalar_term(v, -1.0), 1.0); // x >= -1
    const int xc = cp.coord_scalar(v);
    cp.obj_set_callback([xc](const VecR& x, VecR* g, MatR* h) {
        if (g) (*g)(xc) = 2.0 * x(xc);
        if (h) (*h)(xc, xc) = 2.0;
        return x(xc) * x(xc);
    });
    cp.set_start_scalar(v, 0.3);
    const ConicSolution s = solve_barrier(cp);
    CHECK(s.status == SolveStatus::malformed);
}

TEST_CASE("log objective solves to the analytic optimum") {
    // maximize ln(2 - x) + ln(x) on [0.01, 1.9]: optimum x = 1.
    ConicProblem cp;
    const VarRef v = cp.add_scalar();
    cp.add_ineq(cp.scalar_term(v, 1.0), 1.9);
    cp.add_ineq(cp.scalar_term(v, -1.0), -0.01);
    LinExpr a1 = cp.scalar_term(v, -1.0);
    a1.constant = 2.0;
    cp.obj_add_log(1.0, a1);
    cp.obj_add_log(1.0, cp.scalar_term(v, 1.0));
    cp.set_start_scalar(v, 0.5);
    const ConicSolution s = solve_barrier(cp);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.x(cp.coord_scalar(v)) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(s.objective == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("iteration cap reports without pretending optimality") {
    CutProblem p = make_cut(two_by_two_offdiag());
    SolveOptions o;
    o.max_iter = 3;
    const ConicSolution s = solve_barrier(p.cp, o);
    CHECK(s.status != SolveStatus::optimal);
}

namespace {

// Random instance of the dominated-slack pattern: variables (L, P, q),
// LMIs P >= 0 and P - blkdiag(c1 L, c2 L, r - q) >= 0, inequality
// q + Tr(Xi P)/delta <= 0, log objective over unit-diagonal L.
struct SlackPattern {
    ConicProblem cp;
    VarRef lam, psi, q;
};

SlackPattern make_slack_pattern(int half, std::uint64_t seed) {
    SlackPattern sp;
    RngStream rng(seed, StreamTag::misc);
    const int dim = 2 * half;
    const int big = dim + 1;
    sp.lam = sp.cp.add_hermitian(half);
    sp.psi = sp.cp.add_hermitian(big);
    sp.q = sp.cp.add_scalar();

    for (int i = 0; i < half; ++i) {
        LinExpr e;
        e.add(sp.cp.coord_diag(sp.lam, i), 1.0);
        sp.cp.add_eq(e, 1.0);
    }
    int lmi_l = sp.cp.add_lmi(half);
    sp.cp.lmi_add_hermitian_block(lmi_l, sp.lam, 0, 1.0);

    int lmi_psi = sp.cp.add_lmi(big);
    sp.cp.lmi_add_hermitian_block(lmi_psi, sp.psi, 0, 1.0);

    int lmi_dom = sp.cp.add_lmi(big);
    sp.cp.lmi_add_hermitian_block(lmi_dom, sp.psi, 0, 1.0);
    sp.cp.lmi_add_hermitian_block(lmi_dom, sp.lam, 0, -0.05);
    sp.cp.lmi_add_hermitian_block(lmi_dom, sp.lam, half, 0.5);
    MatC corner = MatC::Zero(big, big);
    corner(big - 1, big - 1) = -0.01;
    sp.cp.lmi_add_constant(lmi_dom, corner);
    MatC qmat = MatC::Zero(big, big);
    qmat(big - 1, big - 1) = 1.0;
    sp.cp.lmi_add_scalar_matrix(lmi_dom, sp.q, qmat);

    // Moment matrix of mean-dominated samples (the structure the slack
    // pattern is built for: corner entry exactly one, small fluctuations).
    const VecC m = num::sample_complex_gaussian(rng, dim);
    MatC m2 = MatC::Zero(dim, dim);
    VecC mean = VecC::Zero(dim);
    const int S = 200;
    std::vector<VecC> samples;
    for (int s = 0; s < S; ++s) {
        samples.push_back(m + 0.1 * num::sample_complex_gaussian(rng, dim));
        mean += samples.back();
    }
    mean /= S;
    for (const auto& v : samples) m2 += v * v.adjoint();
    m2 /= S;
    MatC xi(big, big);
    xi.topLeftCorner(dim, dim) = m2;
    xi.topRightCorner(dim, 1) = mean;
    xi.bottomLeftCorner(1, dim) = mean.adjoint();
    xi(dim, dim) = 1.0;
    xi = num::symmetrize(xi);
    xi.diagonal().array() += 1e-8;

    const double delta = 0.1;
    LinExpr ineq = sp.cp.scalar_term(sp.q, 1.0);
    LinExpr tr = sp.cp.trace_term(sp.psi, num::symmetrize(MatC(xi / delta)));
    for (auto& t : tr.terms) ineq.terms.push_back(t);
    sp.cp.add_ineq(ineq, 0.0);

    MatC g3(half, half);
    for (int i = 0; i < half; ++i)
        for (int j = 0; j < half; ++j) g3(i, j) = rng.next_cn01();
    g3 = g3 * g3.adjoint();
    LinExpr log_arg = sp.cp.trace_term(sp.lam, num::symmetrize(g3));
    log_arg.constant = 0.5;
    sp.cp.obj_add_log(1.0, log_arg);
    LinExpr lin = sp.cp.trace_term(sp.lam, num::symmetrize(MatC(-0.05 * g3)));
    sp.cp.obj_add_linear(lin);
    return sp;
}

} // namespace

TEST_CASE("single-variable fast path agrees with the dense path") {
    // trace-normalized log-objective instance, the detector-step shape
    auto build = [](std::uint64_t seed, ConicProblem& cp) {
        RngStream rng(seed, StreamTag::misc);
        const int m = 5;
        const VarRef v = cp.add_hermitian(m);
        LinExpr tr;
        for (int i = 0; i < m; ++i) tr.add(cp.coord_diag(v, i), 1.0);
        cp.add_eq(tr, 1.0);
        const int lmi = cp.add_lmi(m);
        cp.lmi_add_hermitian_block(lmi, v, 0, 1.0);
        MatC g(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) g(i, j) = rng.next_cn01();
        g = g * g.adjoint();
        LinExpr arg = cp.trace_term(v, num::symmetrize(g));
        arg.constant = 0.1;
        cp.obj_add_log(1.0, arg);
        cp.obj_add_linear(cp.trace_term(v, num::symmetrize(MatC(-0.2 * g))));
        cp.set_start_hermitian(v, MatC::Identity(m, m) / m);
        return v;
    };
    for (std::uint64_t seed : {7, 8}) {
        ConicProblem pd;
        const VarRef vd = build(seed, pd);
        SolveOptions dense;
        dense.use_elimination = false;
        const ConicSolution sd = solve_barrier(pd, dense);

        ConicProblem pf;
        const VarRef vf = build(seed, pf);
        const ConicSolution sf = solve_barrier(pf, SolveOptions{});

        REQUIRE(sd.status == SolveStatus::optimal);
        REQUIRE(sf.status == SolveStatus::optimal);
        CHECK(std::abs(sd.objective - sf.objective) < 1e-6 * (1 + std::abs(sd.objective)));
        CHECK((sd.hermitian_value(pd, vd) - sf.hermitian_value(pf, vf)).cwiseAbs().maxCoeff() <
              1e-4);

        // direction-level agreement at the common start
        ConicProblem pn;
        build(seed, pn);
        VecR x0 = VecR::Zero(pn.num_coords());
        pn.pack_hermitian(x0, VarRef{0}, MatC(MatC::Identity(5, 5) / 5.0));
        const auto [dd, df] = newton_direction_pair(pn, x0, 0.1);
        CHECK((dd - df).norm() <= 1e-9 * (1.0 + dd.norm()));
    }
}

TEST_CASE("structured elimination path agrees with the dense path") {
    for (std::uint64_t seed : {101, 202, 303}) {
        SlackPattern a = make_slack_pattern(3, seed);
        SolveOptions dense;
        dense.use_elimination = false;
        const ConicSolution sd = solve_barrier(a.cp, dense);

        SlackPattern b = make_slack_pattern(3, seed);
        SolveOptions fast;
        fast.use_elimination = true;
        const ConicSolution sf = solve_barrier(b.cp, fast);

        REQUIRE(sd.status == SolveStatus::optimal);
        REQUIRE(sf.status == SolveStatus::optimal);
        CHECK(std::abs(sd.objective - sf.objective) <
              1e-5 * (1.0 + std::abs(sd.objective)));
        const MatC ld = sd.hermitian_value(a.cp, a.lam);
        const MatC lf = sf.hermitian_value(b.cp, b.lam);
        CHECK((ld - lf).cwiseAbs().maxCoeff() < 1e-3);

        // Newton directions must agree to roundoff at a common point.
        SlackPattern c = make_slack_pattern(3, seed);
        const ConicSolution feas = phase1_feasible(c.cp);
        REQUIRE(feas.status == SolveStatus::optimal);
        for (double mu : {1.0, 1e-3}) {
            const auto [dd, df] = newton_direction_pair(c.cp, feas.x, mu);
            CHECK((dd - df).norm() <= 1e-9 * (1.0 + dd.norm()));
        }
    }
}
