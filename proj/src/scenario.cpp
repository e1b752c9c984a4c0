// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace irsva::scn {

namespace {
constexpr double kLightSpeed = 3.0e8; // m/s
constexpr double kTauFloor = 1e-6;
constexpr double kTauCeil = 1.0 - 1e-9;
constexpr double kVuePairSeparation = 20.0; // m
} // namespace

Config default_config() { return Config{}; }

void apply_override(Config& cfg, const std::string& key, const std::string& value) {
    auto as_d = [&] { return std::stod(value); };
    auto as_i = [&] { return std::stoi(value); };
    if (key == "bandwidth_hz") cfg.bandwidth_hz = as_d();
    else if (key == "carrier_hz") cfg.carrier_hz = as_d();
    else if (key == "noise_density_dbm") cfg.noise_density_dbm = as_d();
    else if (key == "feedback_ms") cfg.feedback_ms = as_d();
    else if (key == "delta") cfg.delta = as_d();
    else if (key == "speed_kmh") cfg.speed_kmh = as_d();
    else if (key == "gamma_th") cfg.gamma_th = as_d();
    else if (key == "pmax_c_dbm") cfg.pmax_c_dbm = as_d();
    else if (key == "pmax_v_dbm") cfg.pmax_v_dbm = as_d();
    else if (key == "ple_gnb") cfg.ple_gnb = as_d();
    else if (key == "ple_irs") cfg.ple_irs = as_d();
    else if (key == "ple_gnb_irs") cfg.ple_gnb_irs = as_d();
    else if (key == "alpha_db") cfg.alpha_db = as_d();
    else if (key == "samples") cfg.samples = as_i();
    else if (key == "epsilon") cfg.epsilon = as_d();
    else if (key == "antennas") cfg.antennas = as_i();
    else if (key == "elements") cfg.elements = as_i();
    else if (key == "cues") cfg.cues = as_i();
    else if (key == "vues") cfg.vues = as_i();
    else if (key == "irs_x_m") cfg.irs_x_m = as_d();
    else if (key == "max_iters") cfg.max_iters = as_i();
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else throw InvalidInput("unknown config key: " + key);
}

Config parse_config_text(const std::string& text) {
    Config cfg = default_config();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(lineno) + ": expected key=value");
        apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_text(const Config& c) {
    std::ostringstream o;
    o.precision(17);
    o << "bandwidth_hz = " << c.bandwidth_hz << "\ncarrier_hz = " << c.carrier_hz
      << "\nnoise_density_dbm = " << c.noise_density_dbm << "\nfeedback_ms = " << c.feedback_ms
      << "\ndelta = " << c.delta << "\nspeed_kmh = " << c.speed_kmh
      << "\ngamma_th = " << c.gamma_th << "\npmax_c_dbm = " << c.pmax_c_dbm
      << "\npmax_v_dbm = " << c.pmax_v_dbm << "\nple_gnb = " << c.ple_gnb
      << "\nple_irs = " << c.ple_irs << "\nple_gnb_irs = " << c.ple_gnb_irs
      << "\nalpha_db = " << c.alpha_db << "\nsamples = " << c.samples
      << "\nepsilon = " << c.epsilon << "\nantennas = " << c.antennas
      << "\nelements = " << c.elements << "\ncues = " << c.cues << "\nvues = " << c.vues
      << "\nirs_x_m = " << c.irs_x_m << "\nmax_iters = " << c.max_iters
      << "\nseed = " << c.seed << "\n";
    return o.str();
}

double doppler_correlation(double v_mps, double f_c_hz, double t_s) {
    if (v_mps < 0 || f_c_hz <= 0 || t_s <= 0)
        throw InvalidInput("doppler_correlation: invalid arguments");
    const double f_s = v_mps * f_c_hz / kLightSpeed;
    return num::bessel_j0(2.0 * M_PI * f_s * t_s);
}

double pathloss_gain(double d_m, double exponent, double alpha_linear) {
    if (d_m <= 0) throw InvalidInput("pathloss_gain: distance must be positive");
    return alpha_linear * std::pow(d_m, -exponent);
}

Scenario build_scenario(const Config& cfg) {
    if (cfg.cues < cfg.vues) throw InvalidInput("build_scenario: need I >= L");
    if (cfg.vues < 1) throw InvalidInput("build_scenario: need L >= 1");
    if (cfg.antennas < 1 || cfg.elements < 1) throw InvalidInput("build_scenario: M, N >= 1");
    if (cfg.delta <= 0 || cfg.delta >= 1) throw InvalidInput("build_scenario: delta in (0,1)");
    if (cfg.samples < 2) throw InvalidInput("build_scenario: samples >= 2");

    Scenario sc;
    sc.M = cfg.antennas;
    sc.N = cfg.elements;
    sc.I = cfg.cues;
    sc.L = cfg.vues;
    sc.W = cfg.bandwidth_hz;
    sc.noise_power = dbm_to_watts(cfg.noise_density_dbm + 10.0 * std::log10(cfg.bandwidth_hz));
    sc.delta = cfg.delta;
    sc.gamma_th = cfg.gamma_th;
    sc.pmax_c = dbm_to_watts(cfg.pmax_c_dbm);
    sc.pmax_v = dbm_to_watts(cfg.pmax_v_dbm);
    sc.speed_mps = cfg.speed_kmh / 3.6;
    sc.carrier_hz = cfg.carrier_hz;
    sc.feedback_s = cfg.feedback_ms * 1e-3;
    sc.alpha = db_to_linear(-cfg.alpha_db);
    sc.ple_gnb = cfg.ple_gnb;
    sc.ple_irs = cfg.ple_irs;
    sc.ple_gnb_irs = cfg.ple_gnb_irs;
    sc.S = cfg.samples;
    sc.epsilon = cfg.epsilon;
    sc.a_max = cfg.max_iters;
    sc.master_seed = cfg.seed;

    const double raw_tau = doppler_correlation(sc.speed_mps, sc.carrier_hz, sc.feedback_s);
    sc.tau = std::min(std::max(raw_tau, kTauFloor), kTauCeil);

    sc.gnb_pos = {0.0, 0.0, 20.0};
    sc.irs_pos = {cfg.irs_x_m, 0.0, 20.0};

    RngStream geo(sc.master_seed, StreamTag::geometry);
    auto disk_point = [&](double cx, double cy, double radius) {
        if (radius <= 0) throw InvalidInput("build_scenario: disk radius must be positive");
        const double r = radius * std::sqrt(geo.next_uniform());
        const double th = 2.0 * M_PI * geo.next_uniform();
        return Eigen::Vector3d(cx + r * std::cos(th), cy + r * std::sin(th), 0.0);
    };
    sc.cue_pos.reserve(sc.I);
    for (int i = 0; i < sc.I; ++i) sc.cue_pos.push_back(disk_point(110.0, 0.0, 40.0));
    sc.vue_tx_pos.reserve(sc.L);
    sc.vue_rx_pos.reserve(sc.L);
    for (int l = 0; l < sc.L; ++l) {
        const Eigen::Vector3d tx = disk_point(100.0, 100.0, 60.0);
        const double bearing = 2.0 * M_PI * geo.next_uniform();
        sc.vue_tx_pos.push_back(tx);
        sc.vue_rx_pos.push_back(tx + Eigen::Vector3d(kVuePairSeparation * std::cos(bearing),
                                                     kVuePairSeparation * std::sin(bearing), 0.0));
    }
    return sc;
}

namespace {

double dist(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return (a - b).norm(); }

// Link-class ids for stream derivation; values are frozen.
enum LinkClass : std::uint64_t {
    kCueGnb = 1,
    kVueGnb = 2,
    kCueIrs = 3,
    kVueIrs = 4,
    kIrsGnb = 5,
    kVueDirect = 6,
    kCueVue = 7,
    kIrsVue = 8,
};

VecC scaled_cn(RngStream& rng, int dim, double amp) {
    VecC v = num::sample_complex_gaussian(rng, dim);
    return amp * v;
}

} // namespace

ChannelSet draw_channel_set(const Scenario& sc) {
    ChannelSet cs;
    cs.M = sc.M;
    cs.N = sc.N;
    cs.I = sc.I;
    cs.L = sc.L;
    cs.tau = sc.tau;

    auto amp_of = [&](double d, double ple) { return std::sqrt(pathloss_gain(d, ple, sc.alpha)); };

    cs.g_ib.resize(sc.I);
    cs.g_ir.resize(sc.I);
    for (int i = 0; i < sc.I; ++i) {
        RngStream r1(sc.master_seed, StreamTag::channel, kCueGnb, static_cast<std::uint64_t>(i));
        cs.g_ib[i] = scaled_cn(r1, sc.M, amp_of(dist(sc.cue_pos[i], sc.gnb_pos), sc.ple_gnb));
        RngStream r2(sc.master_seed, StreamTag::channel, kCueIrs, static_cast<std::uint64_t>(i));
        cs.g_ir[i] = scaled_cn(r2, sc.N, amp_of(dist(sc.cue_pos[i], sc.irs_pos), sc.ple_irs));
    }

    cs.g_lb.resize(sc.L);
    cs.g_lr.resize(sc.L);
    cs.g_rl_mean.resize(sc.L);
    cs.g_l_mean.resize(sc.L);
    cs.amp_l.resize(sc.L);
    cs.amp_rl.resize(sc.L);
    for (int l = 0; l < sc.L; ++l) {
        RngStream r1(sc.master_seed, StreamTag::channel, kVueGnb, static_cast<std::uint64_t>(l));
        cs.g_lb[l] = scaled_cn(r1, sc.M, amp_of(dist(sc.vue_tx_pos[l], sc.gnb_pos), sc.ple_gnb));
        RngStream r2(sc.master_seed, StreamTag::channel, kVueIrs, static_cast<std::uint64_t>(l));
        cs.g_lr[l] = scaled_cn(r2, sc.N, amp_of(dist(sc.vue_tx_pos[l], sc.irs_pos), sc.ple_irs));

        cs.amp_rl(l) = amp_of(dist(sc.irs_pos, sc.vue_rx_pos[l]), sc.ple_irs);
        RngStream r3(sc.master_seed, StreamTag::channel, kIrsVue, static_cast<std::uint64_t>(l));
        cs.g_rl_mean[l] = scaled_cn(r3, sc.N, cs.amp_rl(l));

        // Vehicle-to-vehicle ground links follow the gNB-vehicle exponent.
        cs.amp_l(l) = amp_of(dist(sc.vue_tx_pos[l], sc.vue_rx_pos[l]), sc.ple_gnb);
        RngStream r4(sc.master_seed, StreamTag::channel, kVueDirect, static_cast<std::uint64_t>(l));
        cs.g_l_mean(l) = cs.amp_l(l) * r4.next_cn01();
    }

    {
        RngStream r(sc.master_seed, StreamTag::channel, kIrsGnb);
        const double amp = amp_of(dist(sc.irs_pos, sc.gnb_pos), sc.ple_gnb_irs);
        cs.g_rb.resize(sc.N, sc.M);
        for (int n = 0; n < sc.N; ++n)
            for (int m = 0; m < sc.M; ++m) cs.g_rb(n, m) = amp * r.next_cn01();
    }

    cs.g_il_mean.resize(sc.I, sc.L);
    cs.amp_il.resize(sc.I, sc.L);
    for (int i = 0; i < sc.I; ++i)
        for (int l = 0; l < sc.L; ++l) {
            cs.amp_il(i, l) = amp_of(dist(sc.cue_pos[i], sc.vue_rx_pos[l]), sc.ple_gnb);
            RngStream r(sc.master_seed, StreamTag::channel, kCueVue,
                        static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(l));
            cs.g_il_mean(i, l) = cs.amp_il(i, l) * r.next_cn01();
        }

    return cs;
}

V2vLinks ChannelSet::mean_links(int i, int l) const {
    V2vLinks v;
    v.g_l = g_l_mean(l);
    v.g_il = g_il_mean(i, l);
    v.g_rl = g_rl_mean[l];
    return v;
}

V2vLinks ChannelSet::draw_true_links(int i, int l, RngStream& rng) const {
    const double mix = std::sqrt(std::max(0.0, 1.0 - tau * tau));
    V2vLinks v;
    v.g_l = tau * g_l_mean(l) + mix * amp_l(l) * rng.next_cn01();
    v.g_il = tau * g_il_mean(i, l) + mix * amp_il(i, l) * rng.next_cn01();
    v.g_rl.resize(N);
    for (int n = 0; n < N; ++n)
        v.g_rl(n) = tau * g_rl_mean[l](n) + mix * amp_rl(l) * rng.next_cn01();
    return v;
}

ChannelSet ChannelSet::without_irs() const {
    ChannelSet c = *this;
    for (auto& v : c.g_ir) v.setZero();
    for (auto& v : c.g_lr) v.setZero();
    for (auto& v : c.g_rl_mean) v.setZero();
    c.g_rb.setZero();
    c.amp_rl.setZero();
    return c;
}

VecC stack_g3(const ChannelSet& cs, int i, int l, const V2vLinks& links) {
    const int N = cs.N;
    // g1 = [g_l, g_rl^H diag(g_lr)]^H, g2 = [g_il, g_rl^H diag(g_ir)]^H,
    // stacked as [g2; g1].
    VecC g1(N + 1), g2(N + 1);
    g1(0) = std::conj(links.g_l);
    g2(0) = std::conj(links.g_il);
    for (int n = 0; n < N; ++n) {
        g1(n + 1) = std::conj(std::conj(links.g_rl(n)) * cs.g_lr[l](n));
        g2(n + 1) = std::conj(std::conj(links.g_rl(n)) * cs.g_ir[i](n));
    }
    VecC g3(2 * (N + 1));
    g3.head(N + 1) = g2;
    g3.tail(N + 1) = g1;
    return g3;
}

std::pair<double, double> v2v_power_gains(const ChannelSet& cs, int i, int l,
                                          const V2vLinks& links, const VecC& e) {
    cplx cascade_l = 0.0, cascade_i = 0.0;
    for (int n = 0; n < cs.N; ++n) {
        const cplx rn = std::conj(links.g_rl(n)) * e(n);
        cascade_l += rn * cs.g_lr[l](n);
        cascade_i += rn * cs.g_ir[i](n);
    }
    const double gl = std::norm(links.g_l + cascade_l);
    const double gi = std::norm(links.g_il + cascade_i);
    return {gl, gi};
}

UncertaintySamples draw_uncertainty_samples(const Scenario& sc, const ChannelSet& cs,
                                            int i, int l, const VecC& e, int count) {
    if (count < 2) throw InvalidInput("draw_uncertainty_samples: count >= 2 required");
    UncertaintySamples us;
    us.i = i;
    us.l = l;
    us.S = count;
    us.N = cs.N;
    us.raw.reserve(count);
    us.g3.reserve(count);
    RngStream rng(sc.master_seed, StreamTag::uncertainty,
                  static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(l));
    for (int s = 0; s < count; ++s) {
        us.raw.push_back(cs.draw_true_links(i, l, rng));
        us.g3.push_back(stack_g3(cs, i, l, us.raw.back()));
    }
    reevaluate_phi(us, cs, e);
    return us;
}

void reevaluate_phi(UncertaintySamples& us, const ChannelSet& cs, const VecC& e) {
    us.phase_context = e;
    us.phi.resize(us.raw.size());
    for (std::size_t s = 0; s < us.raw.size(); ++s)
        us.phi[s] = v2v_power_gains(cs, us.i, us.l, us.raw[s], e);
}

} // namespace irsva::scn
