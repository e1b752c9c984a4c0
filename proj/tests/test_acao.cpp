// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/acao.hpp"

#include "irsva/sinr.hpp"

#include <doctest.h>

using namespace irsva;
using namespace irsva::acao;

namespace {

// Small desk configuration used throughout the suite.
scn::Config desk_config(std::uint64_t seed, int cues = 2, int vues = 2) {
    scn::Config cfg = scn::default_config();
    cfg.antennas = 6;
    cfg.elements = 8;
    cfg.cues = cues;
    cfg.vues = vues;
    cfg.samples = 300;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("pair optimization produces a monotone converging trace") {
    const scn::Config cfg = desk_config(11);
    const scn::Scenario sc = scn::build_scenario(cfg);
    const scn::ChannelSet cs = scn::draw_channel_set(sc);
    const PairResult pr = optimize_pair(sc, cs, 0, 0, Variant::proposed);
    REQUIRE(pr.status == PairStatus::converged);
    REQUIRE(pr.trace.size() >= 1);
    for (std::size_t k = 1; k < pr.trace.size(); ++k)
        CHECK(pr.trace[k] >= pr.trace[k - 1] - 1e-7);
    CHECK(pr.iterations <= sc.a_max);
    // converged delta below the threshold
    if (pr.trace.size() >= 2)
        CHECK(std::abs(pr.trace.back() - pr.trace[pr.trace.size() - 2]) <= sc.epsilon);
    CHECK(pr.capacity_bps > 0);
    CHECK(pr.p_c > 0);
    CHECK(pr.p_c <= sc.pmax_c + 1e-12);
    CHECK(pr.p_v <= sc.pmax_v + 1e-12);
    // detector and phases have sane shapes
    CHECK(pr.f.size() == sc.M);
    CHECK(pr.e.size() == sc.N);
    for (int n = 0; n < sc.N; ++n) CHECK(std::abs(pr.e(n)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("huge threshold stops after one iteration") {
    scn::Config cfg = desk_config(12);
    cfg.epsilon = 1e9;
    const scn::Scenario sc = scn::build_scenario(cfg);
    const scn::ChannelSet cs = scn::draw_channel_set(sc);
    const PairResult pr = optimize_pair(sc, cs, 0, 1, Variant::proposed);
    CHECK(pr.iterations == 1);
    CHECK(pr.status == PairStatus::converged);
}

TEST_CASE("interference-free pair converges to full CUE power quickly") {
    scn::Config cfg = desk_config(13, 1, 1);
    const scn::Scenario sc = scn::build_scenario(cfg);
    // zero crosstalk and IRS: every block optimum is analytic and the loop
    // must settle immediately
    scn::ChannelSet cs = scn::draw_channel_set(sc).without_irs();
    cs.g_lb[0].setZero();
    cs.g_il_mean.setZero();
    cs.amp_il.setZero();
    const PairResult pr = optimize_pair(sc, cs, 0, 0, Variant::proposed);
    REQUIRE(pr.status == PairStatus::converged);
    CHECK(pr.iterations <= 2);
    CHECK(pr.p_c == doctest::Approx(sc.pmax_c));
    // with the IRS present the phase block may refine a little longer but
    // the CUE power conclusion is the same
    scn::ChannelSet cs2 = scn::draw_channel_set(sc);
    cs2.g_lb[0].setZero();
    cs2.g_lr[0].setZero();
    cs2.g_il_mean.setZero();
    cs2.amp_il.setZero();
    const PairResult pr2 = optimize_pair(sc, cs2, 0, 0, Variant::proposed);
    REQUIRE(pr2.status == PairStatus::converged);
    CHECK(pr2.iterations <= 5);
    CHECK(pr2.p_c == doctest::Approx(sc.pmax_c));
}

TEST_CASE("full pipeline on square and rectangular layouts") {
    SUBCASE("single pair is forced") {
        const scn::Config cfg = desk_config(14, 1, 1);
        const scn::Scenario sc = scn::build_scenario(cfg);
        const scn::ChannelSet cs = scn::draw_channel_set(sc);
        const SolutionState st = run_acao(sc, cs);
        REQUIRE(st.assignment.col_of_row.size() == 1);
        CHECK(st.assignment.col_of_row[0] == 0);
        if (st.pair(0, 0).status == PairStatus::converged)
            CHECK(st.total_bps == doctest::Approx(st.pair(0, 0).capacity_bps));
    }
    SUBCASE("two CUEs one VUE matches the two-permutation brute force") {
        const scn::Config cfg = desk_config(15, 2, 1);
        const scn::Scenario sc = scn::build_scenario(cfg);
        const scn::ChannelSet cs = scn::draw_channel_set(sc);
        const SolutionState st = run_acao(sc, cs);
        auto cell = [&](int i, int l) {
            return st.pair(i, l).status == PairStatus::converged ? st.pair(i, l).capacity_bps
                                                                 : st.unshared[i].capacity_bps;
        };
        const double opt_a = cell(0, 0) + st.unshared[1].capacity_bps;
        const double opt_b = cell(1, 0) + st.unshared[0].capacity_bps;
        CHECK(st.total_bps == doctest::Approx(std::max(opt_a, opt_b)).epsilon(1e-12));
    }
}

TEST_CASE("baselines") {
    const scn::Config cfg = desk_config(16);
    const scn::Scenario sc = scn::build_scenario(cfg);
    const scn::ChannelSet cs = scn::draw_channel_set(sc);

    SUBCASE("random reflection keeps the initial draw") {
        const SolutionState st = run_baseline(Variant::random_irs, sc, cs);
        const SolutionState st2 = run_baseline(Variant::random_irs, sc, cs);
        for (int i = 0; i < sc.I; ++i) {
            const int l = st.assignment.col_of_row[i];
            if (l < 0 || l >= sc.L) continue;
            CHECK(st.pair(i, l).e == st2.pair(i, l).e); // deterministic
        }
    }
    SUBCASE("no-IRS on a dead direct V2V link denies reuse") {
        scn::ChannelSet dead = cs.without_irs();
        dead.g_l_mean.setZero();
        dead.amp_l.setZero();
        const PairResult pr = optimize_pair(sc, dead, 0, 0, Variant::no_irs);
        CHECK(pr.status == PairStatus::infeasible);
    }
    SUBCASE("random reuse is a valid assignment with unshared leftovers") {
        const SolutionState st = run_baseline(Variant::random_reuse, sc, cs);
        std::vector<char> used(sc.I + sc.L, 0);
        int real_cells = 0;
        for (int i = 0; i < sc.I; ++i) {
            const int l = st.assignment.col_of_row[i];
            REQUIRE(l >= 0);
            CHECK(!used[l]);
            used[l] = 1;
            if (l < sc.L) ++real_cells;
        }
        CHECK(real_cells == sc.L);
        CHECK(st.total_bps > 0);
    }
    SUBCASE("non-robust runs and meets the threshold at the point estimate") {
        const SolutionState st = run_baseline(Variant::non_robust, sc, cs);
        for (int i = 0; i < sc.I; ++i) {
            const int l = st.assignment.col_of_row[i];
            if (l < 0 || l >= sc.L) continue;
            const auto& pr = st.pair(i, l);
            if (pr.status != PairStatus::converged) continue;
            const auto [glv, giv] =
                scn::v2v_power_gains(cs, i, l, cs.mean_links(i, l), pr.e);
            const double gamma_l = pr.p_v * glv / (pr.p_c * giv + sc.noise_power);
            CHECK(gamma_l >= sc.gamma_th * (1.0 - 1e-3));
        }
    }
}

TEST_CASE("deterministic reruns") {
    const scn::Config cfg = desk_config(17);
    const scn::Scenario sc = scn::build_scenario(cfg);
    const scn::ChannelSet cs = scn::draw_channel_set(sc);
    const SolutionState a = run_acao(sc, cs);
    const SolutionState b = run_acao(sc, cs);
    CHECK(a.total_bps == b.total_bps);
    for (std::size_t k = 0; k < a.pairs.size(); ++k) {
        CHECK(a.pairs[k].capacity_bps == b.pairs[k].capacity_bps);
        CHECK(a.pairs[k].iterations == b.pairs[k].iterations);
    }
}
