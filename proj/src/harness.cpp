// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/harness.hpp"

#include "irsva/sinr.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace irsva::harness {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (int t = 0; t < threads; ++t)
        workers.emplace_back([&] {
            for (int k = next.fetch_add(1); k < n; k = next.fetch_add(1)) fn(k);
        });
    for (auto& w : workers) w.join();
}

std::vector<double> verify_outage(const acao::SolutionState& sol, const scn::Scenario& sc,
                                  const scn::ChannelSet& cs, int n_samples) {
    if (n_samples < 1000) throw InvalidInput("verify_outage: need at least 1000 samples");
    std::vector<double> out(sc.L, -1.0);
    for (int i = 0; i < sc.I; ++i) {
        const int l = sol.assignment.col_of_row.empty() ? -1 : sol.assignment.col_of_row[i];
        if (l < 0 || l >= sc.L) continue;
        const auto& pr = sol.pair(i, l);
        if (pr.status != acao::PairStatus::converged) {
            out[l] = 1.0; // reuse denied: the VUE link is not served
            continue;
        }
        RngStream rng(sc.master_seed, StreamTag::verify, static_cast<std::uint64_t>(i),
                      static_cast<std::uint64_t>(l));
        int below = 0;
        for (int s = 0; s < n_samples; ++s) {
            const scn::V2vLinks links = cs.draw_true_links(i, l, rng);
            const auto [glv, giv] = scn::v2v_power_gains(cs, i, l, links, pr.e);
            const double gamma_l = pr.p_v * glv / (pr.p_c * giv + sc.noise_power);
            if (gamma_l < sc.gamma_th) ++below;
        }
        out[l] = static_cast<double>(below) / n_samples;
    }
    return out;
}

scn::Config config_for(const ExperimentConfig& ec, double sweep_value, std::uint64_t seed) {
    scn::Config cfg = ec.base;
    cfg.seed = seed;
    if (ec.sweep_param == "none") {
    } else if (ec.sweep_param == "pmax_c_dbm") {
        cfg.pmax_c_dbm = sweep_value;
    } else if (ec.sweep_param == "gamma_th") {
        cfg.gamma_th = sweep_value;
    } else if (ec.sweep_param == "antennas") {
        cfg.antennas = static_cast<int>(sweep_value);
    } else if (ec.sweep_param == "elements") {
        cfg.elements = static_cast<int>(sweep_value);
    } else if (ec.sweep_param == "irs_x_m") {
        cfg.irs_x_m = sweep_value;
    } else {
        throw InvalidInput("unknown sweep parameter: " + ec.sweep_param);
    }
    return cfg;
}

ExperimentOutput run_experiment(const ExperimentConfig& ec) {
    if (ec.trials < 1) throw InvalidInput("run_experiment: trials >= 1");
    for (std::size_t k = 1; k < ec.sweep_values.size(); ++k)
        if (!(ec.sweep_values[k] > ec.sweep_values[k - 1]))
            throw InvalidInput("run_experiment: sweep values must be strictly increasing");

    struct Job {
        acao::Variant variant;
        double value;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto v : ec.variants)
        for (const double val : ec.sweep_values)
            for (int t = 0; t < ec.trials; ++t)
                jobs.push_back({v, val, ec.base.seed + static_cast<std::uint64_t>(t)});

    ExperimentOutput out;
    out.rows.resize(jobs.size());
    std::vector<std::vector<TraceRow>> traces(jobs.size());

    parallel_for(static_cast<int>(jobs.size()), ec.threads, [&](int j) {
        const Job& job = jobs[j];
        const auto t0 = std::chrono::steady_clock::now();
        const scn::Config cfg = config_for(ec, job.value, job.seed);
        const scn::Scenario sc = scn::build_scenario(cfg);
        scn::ChannelSet cs = scn::draw_channel_set(sc);
        if (job.variant == acao::Variant::no_irs) cs = cs.without_irs();
        const acao::SolutionState sol = acao::run_variant(job.variant, sc, cs, ec.run);
        const std::vector<double> outage = verify_outage(sol, sc, cs, ec.verify_samples);

        ResultRow row;
        row.variant = acao::variant_name(job.variant);
        row.sweep_param = ec.sweep_param;
        row.sweep_value = job.value;
        row.seed = job.seed;
        row.total_bps = sol.total_bps;
        row.assigned_caps.resize(sc.I, 0.0);
        for (int i = 0; i < sc.I; ++i) {
            const int l = sol.assignment.col_of_row[i];
            if (l >= 0 && l < sc.L && sol.pair(i, l).status == acao::PairStatus::converged)
                row.assigned_caps[i] = sol.pair(i, l).capacity_bps;
            else
                row.assigned_caps[i] = sol.unshared[i].capacity_bps;
        }
        row.outage = outage;
        for (int i = 0; i < sc.I; ++i) {
            const int l = sol.assignment.col_of_row[i];
            if (l >= 0 && l < sc.L) row.iterations.push_back(sol.pair(i, l).iterations);
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        out.rows[j] = std::move(row);

        if (ec.emit_traces) {
            for (int i = 0; i < sc.I; ++i)
                for (int l = 0; l < sc.L; ++l) {
                    const auto& pr = sol.pair(i, l);
                    if (pr.i < 0) continue;
                    for (std::size_t it = 0; it < pr.trace.size(); ++it)
                        traces[j].push_back({acao::variant_name(job.variant), job.value,
                                             job.seed, i, l, static_cast<int>(it + 1),
                                             pr.trace[it]});
                }
        }
    });

    for (auto& t : traces)
        out.traces.insert(out.traces.end(), t.begin(), t.end());

    if (!ec.out_dir.empty()) {
        std::filesystem::create_directories(ec.out_dir);
        write_results_csv(out.rows, ec.out_dir + "/results.csv");
        if (ec.emit_traces) write_traces_csv(out.traces, ec.out_dir + "/traces.csv");
    }
    return out;
}

namespace {
std::string join(const std::vector<double>& v) {
    std::ostringstream o;
    o.precision(17);
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) o << ';';
        o << v[k];
    }
    return o.str();
}
std::string join(const std::vector<int>& v) {
    std::ostringstream o;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) o << ';';
        o << v[k];
    }
    return o.str();
}
std::vector<double> split_d(const std::string& s) {
    std::vector<double> v;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ';'))
        if (!tok.empty()) v.push_back(std::stod(tok));
    return v;
}
std::vector<int> split_i(const std::string& s) {
    std::vector<int> v;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ';'))
        if (!tok.empty()) v.push_back(std::stoi(tok));
    return v;
}
} // namespace

void sweep_emit_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    if (rows.empty()) throw InvalidInput("sweep_emit_csv: no rows");
    for (const auto& r : rows)
        if (!std::isfinite(r.total_bps)) throw InvalidInput("sweep_emit_csv: non-finite total");
    out << "# irsva results schema v1\n";
    out << "variant,sweep_param,sweep_value,seed,total_bps,assigned_caps,outage,iterations,wall_ms\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.variant << ',' << r.sweep_param << ',' << r.sweep_value << ',' << r.seed << ','
            << r.total_bps << ',' << join(r.assigned_caps) << ',' << join(r.outage) << ','
            << join(r.iterations) << ',' << r.wall_ms << '\n';
    }
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot open for write: " + path);
    sweep_emit_csv(rows, f);
}

void write_traces_csv(const std::vector<TraceRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot open for write: " + path);
    f << "# irsva traces schema v1\n";
    f << "variant,sweep_value,seed,i,l,iter,objective_bps_hz\n";
    f.precision(17);
    for (const auto& r : rows)
        f << r.variant << ',' << r.sweep_value << ',' << r.seed << ',' << r.i << ',' << r.l
          << ',' << r.iter << ',' << r.objective_bps_hz << '\n';
}

std::vector<ResultRow> parse_results_csv(std::istream& in) {
    std::vector<ResultRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("variant,", 0) == 0) continue;
        std::istringstream ls(line);
        std::string tok;
        ResultRow r;
        std::getline(ls, r.variant, ',');
        std::getline(ls, r.sweep_param, ',');
        std::getline(ls, tok, ',');
        r.sweep_value = std::stod(tok);
        std::getline(ls, tok, ',');
        r.seed = std::stoull(tok);
        std::getline(ls, tok, ',');
        r.total_bps = std::stod(tok);
        std::getline(ls, tok, ',');
        r.assigned_caps = split_d(tok);
        std::getline(ls, tok, ',');
        r.outage = split_d(tok);
        std::getline(ls, tok, ',');
        r.iterations = split_i(tok);
        std::getline(ls, tok, ',');
        r.wall_ms = std::stod(tok);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace irsva::harness
