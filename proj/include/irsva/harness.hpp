// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Experiment driver: scenario sweeps over seeds and one swept parameter,
// fresh-draw Monte-Carlo outage verification of converged allocations, and
// deterministic CSV emission.

#pragma once

#include "irsva/acao.hpp"
#include "irsva/scenario.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace irsva::harness {

struct ExperimentConfig {
    scn::Config base;
    std::vector<acao::Variant> variants{acao::Variant::proposed};
    std::string sweep_param = "none"; // pmax_c_dbm|gamma_th|antennas|elements|irs_x_m|none
    std::vector<double> sweep_values{0.0};
    int trials = 1;
    int verify_samples = 20000;
    std::string out_dir;
    bool emit_traces = false;
    int threads = 0; // 0: hardware concurrency
    acao::RunOptions run;
};

struct ResultRow {
    std::string variant;
    std::string sweep_param;
    double sweep_value = 0;
    std::uint64_t seed = 0;
    double total_bps = 0;
    std::vector<double> assigned_caps; // per CUE, bit/s
    std::vector<double> outage;        // per VUE; 1.0 when reuse was denied
    std::vector<int> iterations;       // per served pair
    double wall_ms = 0;
};

struct TraceRow {
    std::string variant;
    double sweep_value = 0;
    std::uint64_t seed = 0;
    int i = 0, l = 0, iter = 0;
    double objective_bps_hz = 0;
};

// Fraction of n_samples fresh uncertain-channel draws with gamma_l below the
// threshold, for each VUE pair index (served, converged pairs; others -1).
std::vector<double> verify_outage(const acao::SolutionState& sol, const scn::Scenario& sc,
                                  const scn::ChannelSet& cs, int n_samples);

scn::Config config_for(const ExperimentConfig& ec, double sweep_value, std::uint64_t seed);

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::vector<TraceRow> traces;
};

ExperimentOutput run_experiment(const ExperimentConfig& ec);

// CSV with a schema comment line; rejects empty input and non-finite totals.
void sweep_emit_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
void write_traces_csv(const std::vector<TraceRow>& rows, const std::string& path);
std::vector<ResultRow> parse_results_csv(std::istream& in);

// Simple fixed-order worker pool.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace irsva::harness
