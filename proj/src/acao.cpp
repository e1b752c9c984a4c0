// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/acao.hpp"

#include "irsva/mud.hpp"
#include "irsva/power.hpp"
#include "irsva/sinr.hpp"

#include <cmath>

namespace irsva::acao {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::proposed: return "proposed";
        case Variant::random_reuse: return "random_reuse";
        case Variant::random_irs: return "random_irs";
        case Variant::non_robust: return "non_robust";
        case Variant::no_irs: return "no_irs";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "proposed") return Variant::proposed;
    if (name == "random_reuse") return Variant::random_reuse;
    if (name == "random_irs") return Variant::random_irs;
    if (name == "non_robust") return Variant::non_robust;
    if (name == "no_irs") return Variant::no_irs;
    throw InvalidInput("unknown variant: " + name);
}

namespace {

VecC random_phases(const scn::Scenario& sc, int i, int l) {
    RngStream rng(sc.master_seed, StreamTag::phase_init, static_cast<std::uint64_t>(i),
                  static_cast<std::uint64_t>(l));
    VecC e(sc.N);
    for (int n = 0; n < sc.N; ++n) {
        const double th = 2.0 * M_PI * rng.next_uniform();
        e(n) = cplx(std::cos(th), std::sin(th));
    }
    return e;
}

MatC rank_one_lambda(const VecC& e) {
    VecC r(e.size() + 1);
    r(0) = 1.0;
    r.tail(e.size()) = e;
    return r * r.adjoint();
}

// Reflections co-phased with the direct path through the current detector;
// a cheap near-optimal seed for the phase solver's interior start.
VecC aligned_phases(const scn::ChannelSet& cs, int i, const VecC& f) {
    const cplx direct = f.dot(cs.g_ib[i]);
    const VecC through = cs.g_rb * f; // row n: conj pairing below
    VecC e(cs.N);
    for (int n = 0; n < cs.N; ++n) {
        const cplx c = std::conj(through(n)) * cs.g_ir[i](n);
        const cplx target = (std::abs(c) > 0 ? direct / c : cplx(1, 0));
        e(n) = (std::abs(direct) > 0 && std::abs(target) > 0) ? target / std::abs(target)
                                                              : cplx(1, 0);
    }
    return e;
}

// Spectral efficiency (bit/s/Hz) of the CUE for the current blocks.
double spectral_efficiency(const scn::ChannelSet& cs, int i, int l, const VecC& f,
                           const VecC& e, double p_c, double p_v, double sigma2) {
    const double s = std::norm(f.dot(sinr::cue_channel(cs, i, e)));
    const double it = std::norm(f.dot(sinr::vue_gnb_channel(cs, l, e)));
    return std::log2(1.0 + p_c * s / (p_v * it + sigma2 * f.squaredNorm()));
}

bool phase_step_enabled(Variant v) {
    return v == Variant::proposed || v == Variant::random_reuse || v == Variant::non_robust;
}

} // namespace

PairResult optimize_pair(const scn::Scenario& sc, const scn::ChannelSet& cs, int i, int l,
                         Variant variant, const RunOptions& opts) {
    const double sigma2 = sc.noise_power;
    const double gamma = sc.gamma_th;
    const double W = sc.W;

    PairResult out;
    out.i = i;
    out.l = l;

    VecC f = cs.g_ib[i].squaredNorm() > 0 ? VecC(cs.g_ib[i] / cs.g_ib[i].norm())
                                          : VecC(VecC::Ones(sc.M) / std::sqrt(double(sc.M)));
    VecC e = random_phases(sc, i, l);
    double p_c = 0.5 * sc.pmax_c;
    double p_v = 0.5 * sc.pmax_v;

    const bool robust_power = variant != Variant::non_robust;
    scn::UncertaintySamples us;
    phase::MomentMatrix mm;
    if (robust_power || phase_step_enabled(variant))
        us = scn::draw_uncertainty_samples(sc, cs, i, l, e, sc.S);
    if (variant == Variant::proposed || variant == Variant::random_reuse)
        mm = phase::moment_matrix(us.g3);

    const scn::V2vLinks mean = cs.mean_links(i, l);
    RngStream extraction_rng(sc.master_seed, StreamTag::misc, static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(l));
    MatC lambda_hint; // previous phase optimizer, or the aligned seed

    out.initial_se = spectral_efficiency(cs, i, l, f, e, p_c, p_v, sigma2);
    double se_prev = out.initial_se;

    conic::SolveOptions cold = opts.solver;
    conic::SolveOptions warm = opts.solver;
    warm.mu0 = opts.warm_mu0;

    for (int a = 1; a <= sc.a_max; ++a) {
        const bool first = (a == 1);
        const conic::SolveOptions& sopt = first ? cold : warm;

        // --- detector step ---
        {
            MatC gamma_f = f * f.adjoint();
            const auto lifts = sinr::lift_gnb(cs, i, l, e, gamma_f);
            mud::MudResult mr = mud::solve_mud_iteration(lifts.G1, lifts.G2, p_c, p_v, sigma2,
                                                         gamma_f, W, sopt, &extraction_rng);
            out.newton_iterations += mr.iterations;
            const double se_old = spectral_efficiency(cs, i, l, f, e, p_c, p_v, sigma2);
            const double se_new = spectral_efficiency(cs, i, l, mr.f, e, p_c, p_v, sigma2);
            if (se_new >= se_old - 1e-12) f = mr.f;
        }

        // --- phase step ---
        if (phase_step_enabled(variant)) {
            MatC gamma_f = f * f.adjoint();
            const auto lifts = sinr::lift_gnb(cs, i, l, e, gamma_f);
            const MatC lambda_a = rank_one_lambda(e);
            const double s2tg = sigma2 * f.squaredNorm();
            phase::PhaseResult pr;
            if (variant == Variant::non_robust) {
                const VecC g3bar = scn::stack_g3(cs, i, l, mean);
                const VecC g2bar = g3bar.head(sc.N + 1);
                const VecC g1bar = g3bar.tail(sc.N + 1);
                pr = phase::solve_phase_deterministic(lifts.G3, lifts.G4, s2tg, p_c, p_v,
                                                      lambda_a, g1bar, g2bar, gamma, sigma2, W,
                                                      sopt);
            } else {
                const phase::CvarLmiSet cvar =
                    phase::cvar_lmi_set(mm, sc.delta, gamma, sigma2, p_c, p_v);
                if (lambda_hint.size() == 0)
                    lambda_hint = rank_one_lambda(aligned_phases(cs, i, f));
                pr = phase::solve_phase_iteration(lifts.G3, lifts.G4, s2tg, p_c, p_v, lambda_a,
                                                  cvar, W, sopt, &lambda_hint);
            }
            out.newton_iterations += pr.iterations;
            if (!pr.infeasible) {
                if (variant != Variant::non_robust) lambda_hint = pr.lambda;
                const double se_old = spectral_efficiency(cs, i, l, f, e, p_c, p_v, sigma2);
                const double se_new = spectral_efficiency(cs, i, l, f, pr.e, p_c, p_v, sigma2);
                if (se_new >= se_old - 1e-12) {
                    e = pr.e;
                    if (variant != Variant::non_robust) {
                        out.have_cvar = true;
                        out.lambda = pr.lambda;
                        out.psi = pr.psi;
                        out.q = pr.q;
                    }
                    const double sdp_se = pr.sdp_objective / W;
                    if (sdp_se > 0 && std::abs(se_new - sdp_se) > 0.05 * sdp_se)
                        ++out.extraction_warnings;
                } else {
                    ++out.phase_rejections;
                }
            }
        }

        // --- power step ---
        {
            power::PowerIterate pi;
            if (robust_power) {
                scn::reevaluate_phi(us, cs, e);
                out.kappa = power::learn_kappa(us.phi, p_c, p_v, gamma, sc.delta);
                pi = power::closed_form_power(out.kappa, p_c, p_v, sigma2, sc.pmax_c, sc.pmax_v);
            } else {
                const auto [glv, giv] = scn::v2v_power_gains(cs, i, l, mean, e);
                pi = power::deterministic_power(glv, giv, gamma, sigma2, sc.pmax_c, sc.pmax_v);
            }
            if (!pi.feasible) {
                out.status = PairStatus::infeasible;
                out.iterations = a;
                break;
            }
            p_c = pi.p_c;
            p_v = pi.p_v;
            out.z = pi.z;
            if (robust_power) out.kappa = pi.kappa;
        }

        const double se = spectral_efficiency(cs, i, l, f, e, p_c, p_v, sigma2);
        out.trace.push_back(se);
        out.iterations = a;
        if (std::abs(se - se_prev) <= sc.epsilon) {
            out.status = PairStatus::converged;
            se_prev = se;
            break;
        }
        se_prev = se;
        if (a == sc.a_max) out.status = PairStatus::iteration_cap;
    }

    out.f = f;
    out.e = e;
    out.p_c = p_c;
    out.p_v = p_v;
    out.capacity_bps = W * se_prev;
    return out;
}

UnsharedResult optimize_unshared(const scn::Scenario& sc, const scn::ChannelSet& cs, int i,
                                 Variant variant, const RunOptions& opts) {
    const double sigma2 = sc.noise_power;
    const double W = sc.W;
    UnsharedResult out;

    VecC f = cs.g_ib[i].squaredNorm() > 0 ? VecC(cs.g_ib[i] / cs.g_ib[i].norm())
                                          : VecC(VecC::Ones(sc.M) / std::sqrt(double(sc.M)));
    VecC e = random_phases(sc, i, sc.L); // own stream slot, distinct from real pairs
    const bool tune_phase = phase_step_enabled(variant);

    conic::SolveOptions cold = opts.solver;
    conic::SolveOptions warm = opts.solver;
    warm.mu0 = opts.warm_mu0;

    auto se_of = [&](const VecC& fv, const VecC& ev) {
        const double s = std::norm(fv.dot(sinr::cue_channel(cs, i, ev)));
        return std::log2(1.0 + sc.pmax_c * s / (sigma2 * fv.squaredNorm()));
    };

    const MatC zero_g2 = MatC::Zero(sc.M, sc.M);
    double se_prev = se_of(f, e);
    for (int a = 1; a <= sc.a_max; ++a) {
        const conic::SolveOptions& sopt = (a == 1) ? cold : warm;
        {
            MatC gamma_f = f * f.adjoint();
            const auto lifts = sinr::lift_gnb(cs, i, 0, e, gamma_f);
            mud::MudResult mr = mud::solve_mud_iteration(lifts.G1, zero_g2, sc.pmax_c, 0.0,
                                                         sigma2, gamma_f, W, sopt, nullptr);
            if (se_of(mr.f, e) >= se_of(f, e) - 1e-12) f = mr.f;
        }
        if (tune_phase) {
            MatC gamma_f = f * f.adjoint();
            const auto lifts = sinr::lift_gnb(cs, i, 0, e, gamma_f);
            const MatC lambda_a = rank_one_lambda(e);
            phase::PhaseResult pr = phase::solve_phase_unconstrained(
                lifts.G3, MatC::Zero(sc.N + 1, sc.N + 1), sigma2 * f.squaredNorm(), sc.pmax_c,
                0.0, lambda_a, W, sopt);
            if (se_of(f, pr.e) >= se_of(f, e) - 1e-12) e = pr.e;
        }
        const double se = se_of(f, e);
        if (std::abs(se - se_prev) <= sc.epsilon) {
            se_prev = se;
            break;
        }
        se_prev = se;
    }
    out.f = f;
    out.e = e;
    out.capacity_bps = W * se_prev;
    return out;
}

bool SolutionState::serves(int i, int l) const {
    if (l >= L) return false;
    if (assignment.col_of_row.empty()) return false;
    return assignment.col_of_row[i] == l && pair(i, l).status == PairStatus::converged;
}

SolutionState run_variant(Variant variant, const scn::Scenario& sc, const scn::ChannelSet& cs,
                          const RunOptions& opts) {
    SolutionState st;
    st.variant = variant;
    st.I = sc.I;
    st.L = sc.L;

    st.unshared.resize(sc.I);
    for (int i = 0; i < sc.I; ++i) st.unshared[i] = optimize_unshared(sc, cs, i, variant, opts);
    VecR unshared_caps(sc.I);
    for (int i = 0; i < sc.I; ++i) unshared_caps(i) = st.unshared[i].capacity_bps;

    if (variant == Variant::random_reuse) {
        // Random injection of VUE pairs into CUE rows; only assigned pairs
        // are optimized, the rest keep their spectrum to themselves.
        RngStream rng(sc.master_seed, StreamTag::assignment);
        std::vector<int> rows(sc.I);
        for (int i = 0; i < sc.I; ++i) rows[i] = i;
        for (int i = sc.I - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(rows[i], rows[j]);
        }
        st.pairs.resize(static_cast<std::size_t>(sc.I) * sc.L);
        st.assignment.col_of_row.assign(sc.I, -1);
        st.assignment.total = 0;
        std::vector<char> row_used(sc.I, 0);
        for (int l = 0; l < sc.L; ++l) {
            const int i = rows[l];
            PairResult pr = optimize_pair(sc, cs, i, l, variant, opts);
            const bool ok = pr.status == PairStatus::converged;
            st.pairs[static_cast<std::size_t>(i) * sc.L + l] = std::move(pr);
            st.assignment.col_of_row[i] = l;
            row_used[i] = 1;
            st.assignment.total += ok ? st.pair(i, l).capacity_bps : unshared_caps(i);
        }
        int virt = sc.L;
        for (int i = 0; i < sc.I; ++i)
            if (!row_used[i]) {
                st.assignment.col_of_row[i] = virt++;
                st.assignment.total += unshared_caps(i);
            }
        st.total_bps = st.assignment.total;
        return st;
    }

    st.pairs.resize(static_cast<std::size_t>(sc.I) * sc.L);
    MatR caps(sc.I, sc.L);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> feas(sc.I, sc.L);
    for (int i = 0; i < sc.I; ++i)
        for (int l = 0; l < sc.L; ++l) {
            PairResult pr = optimize_pair(sc, cs, i, l, variant, opts);
            caps(i, l) = pr.capacity_bps;
            feas(i, l) = pr.status == PairStatus::converged;
            st.pairs[static_cast<std::size_t>(i) * sc.L + l] = std::move(pr);
        }

    const match::CapacityTable table = match::extend_cost_table(caps, feas, unshared_caps);
    st.assignment = match::hungarian_assign(table);
    st.total_bps = st.assignment.total;
    return st;
}

SolutionState run_baseline(Variant variant, const scn::Scenario& sc, const scn::ChannelSet& cs,
                           const RunOptions& opts) {
    return run_variant(variant, sc, cs, opts);
}

} // namespace irsva::acao
