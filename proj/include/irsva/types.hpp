// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Common scalar/matrix aliases and the central tolerance record.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace irsva {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

// All numeric tolerances used across the library live here.
struct Tolerances {
    double psd = 1e-9;           // min-eigenvalue slack for PSD checks
    double evd_rel = 1e-8;       // relative EVD reconstruction error
    double hermitian_sym = 1e-10;// allowed conjugate-symmetry deviation (relative)
    double solver = 1e-7;        // interior-point stationarity / gap target
    double rank_one = 1e-3;      // lambda2/lambda1 above which extraction falls back
    double gain_clamp = 1e-15;   // negative gains of smaller magnitude are clamped to 0
};

inline const Tolerances& tol() {
    static const Tolerances t{};
    return t;
}

class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

} // namespace irsva
