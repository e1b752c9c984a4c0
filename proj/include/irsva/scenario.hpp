// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Network geometry, physical parameters and channel realizations for the
// IRS-aided V2X uplink: one gNB (M antennas), one IRS (N elements), I
// cellular uplink users (CUEs) and L vehicle-to-vehicle pairs (VUEs) that
// may reuse CUE spectrum. Links terminating at a vehicle carry uncertain
// small-scale fading modelled by a first-order Gauss-Markov process
//   h = tau * h_est + sqrt(1 - tau^2) * h_new,   h_new ~ CN(0,1),
// with tau = J0(2*pi*f_s*T), f_s = v*f_c/c.

#pragma once

#include "irsva/numerics.hpp"
#include "irsva/rng.hpp"
#include "irsva/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace irsva::scn {

// Flat key=value configuration; keys mirror the config-file schema.
struct Config {
    double bandwidth_hz = 10e6;
    double carrier_hz = 2e9;
    double noise_density_dbm = -174.0; // per Hz; total noise = density + 10*log10(W)
    double feedback_ms = 0.5;
    double delta = 0.01;
    double speed_kmh = 80.0;
    double gamma_th = 1.0; // linear SINR threshold
    double pmax_c_dbm = 30.0;
    double pmax_v_dbm = 30.0;
    double ple_gnb = 4.0;     // gNB-vehicle exponent (also vehicle-vehicle links)
    double ple_irs = 2.2;     // IRS-vehicle exponent
    double ple_gnb_irs = 2.0; // gNB-IRS exponent
    double alpha_db = 40.0;   // reference pathloss at 1 m, positive dB of loss
    int samples = 5000;       // learning sample count S
    double epsilon = 1e-3;    // convergence threshold (bit/s/Hz)
    int antennas = 30;        // M
    int elements = 40;        // N
    int cues = 4;             // I
    int vues = 4;             // L
    double irs_x_m = 80.0;
    int max_iters = 50;       // alternating-optimization iteration cap
    std::uint64_t seed = 1;
};

Config default_config();

// Parses "key = value" lines ('#' comments, blank lines allowed).
// Unknown keys are rejected.
Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);
void apply_override(Config& cfg, const std::string& key, const std::string& value);
std::string config_to_text(const Config& cfg);

struct Scenario {
    int M = 0, N = 0, I = 0, L = 0;
    double W = 0;            // Hz
    double noise_power = 0;  // sigma^2, watts over the full band
    double delta = 0;        // outage bound
    double gamma_th = 0;     // linear
    double pmax_c = 0, pmax_v = 0; // watts
    double speed_mps = 0, carrier_hz = 0, feedback_s = 0;
    double tau = 0;          // clamped into (1e-6, 1-1e-9)
    double alpha = 0;        // linear power gain at 1 m
    double ple_gnb = 0, ple_irs = 0, ple_gnb_irs = 0;
    int S = 0;
    double epsilon = 0;
    int a_max = 0;
    std::uint64_t master_seed = 0;

    Eigen::Vector3d gnb_pos, irs_pos;
    std::vector<Eigen::Vector3d> cue_pos;    // I
    std::vector<Eigen::Vector3d> vue_tx_pos; // L
    std::vector<Eigen::Vector3d> vue_rx_pos; // L
};

// tau = J0(2*pi * v*f_c/c * T), c = 3e8 m/s.
double doppler_correlation(double v_mps, double f_c_hz, double t_s);

// alpha * d^(-exponent); rejects d <= 0.
double pathloss_gain(double d_m, double exponent, double alpha_linear);

// Geometry per the simulation layout: gNB at (0,0,20), IRS at (irs_x,0,20),
// CUEs uniform in a disk of radius 40 m centred at (110,0,0), VUE
// transmitters uniform in a disk of radius 60 m centred at (100,100,0),
// each VUE receiver offset 20 m at a uniform random bearing.
Scenario build_scenario(const Config& cfg);

// Uncertain vehicle-destination links of one reuse pair (i,l).
struct V2vLinks {
    cplx g_l;   // VUE tx -> VUE rx direct
    cplx g_il;  // CUE i -> VUE rx crosstalk
    VecC g_rl;  // IRS -> VUE rx, length N
};

struct ChannelSet {
    int M = 0, N = 0, I = 0, L = 0;
    double tau = 0;

    // Links known at the gNB (drawn realizations).
    std::vector<VecC> g_ib; // I x (M)
    std::vector<VecC> g_lb; // L x (M)
    std::vector<VecC> g_ir; // I x (N)
    std::vector<VecC> g_lr; // L x (N)
    MatC g_rb;              // N x M

    // Vehicle-destination links: estimated value sqrt(beta)*h_est plus the
    // large-scale amplitude needed to synthesize true draws.
    VecC g_l_mean;               // L
    MatC g_il_mean;              // I x L
    std::vector<VecC> g_rl_mean; // L x (N)
    VecR amp_l;                  // L
    MatR amp_il;                 // I x L
    VecR amp_rl;                 // L

    // Point estimate of the uncertain links of pair (i,l).
    V2vLinks mean_links(int i, int l) const;

    // One true realization given the stored estimates (Gauss-Markov step
    // with fresh CN(0,1) innovations from the stream).
    V2vLinks draw_true_links(int i, int l, RngStream& rng) const;

    // Copy with all IRS-related links zeroed.
    ChannelSet without_irs() const;
};

ChannelSet draw_channel_set(const Scenario& sc);

// S stored draws of the uncertain links of one pair, exposed both as the
// stacked uncertainty vectors used by the moment matrix and as scalar
// power-gain pairs evaluated at a given reflection vector.
struct UncertaintySamples {
    int i = 0, l = 0, S = 0, N = 0;
    std::vector<V2vLinks> raw;                   // S underlying draws
    std::vector<VecC> g3;                        // S x (2(N+1)), [g2; g1]
    std::vector<std::pair<double, double>> phi;  // S x (g_l_v, g_i_v) at `e`
    VecC phase_context;                          // e the phi values refer to
};

// Builds the stacked vector [g2; g1] for given uncertain links.
VecC stack_g3(const ChannelSet& cs, int i, int l, const V2vLinks& links);

// Direct evaluation of (g_l_v, g_i_v) = (|g_l + g_rl^H Phi g_lr|^2,
// |g_il + g_rl^H Phi g_ir|^2) for Phi = diag(e).
std::pair<double, double> v2v_power_gains(const ChannelSet& cs, int i, int l,
                                          const V2vLinks& links, const VecC& e);

UncertaintySamples draw_uncertainty_samples(const Scenario& sc, const ChannelSet& cs,
                                            int i, int l, const VecC& e, int count);

// Re-evaluates the scalar pairs at a new reflection vector, reusing the
// stored draws.
void reevaluate_phi(UncertaintySamples& us, const ChannelSet& cs, const VecC& e);

} // namespace irsva::scn
