// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace irsva::num {

namespace {

// Ascending series sum_k (-x^2/4)^k / (k!)^2. Accurate while the largest
// term stays small enough that cancellation does not eat the budget; with
// the switch point at 12 the worst-case loss is ~1e-12.
double j0_series(double x) {
    const double q = -0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 80; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
    }
    return sum;
}

// Hankel asymptotic expansion, truncated at the smallest term:
//   J0(x) = sqrt(2/(pi x)) [ P(x) cos(x - pi/4) - Q(x) sin(x - pi/4) ]
// with P, Q the standard inverse-power series.
double j0_asymptotic(double x) {
    // a_k = prod_{j=1..k} (2j-1)^2 / (k! 8^k); P uses even k, Q odd k.
    double p = 1.0, q = 0.0;
    double ak = 1.0;
    double prev_mag = 1e300;
    for (int k = 1; k <= 40; ++k) {
        const double tw = 2.0 * k - 1.0;
        ak *= (tw * tw) / (8.0 * k);
        const double term = ak / std::pow(x, k);
        if (std::abs(term) >= prev_mag) break; // divergent tail reached
        prev_mag = std::abs(term);
        const int r = k % 4;
        if (r == 1) q -= term;
        else if (r == 2) p -= term;
        else if (r == 3) q += term;
        else p += term;
        if (std::abs(term) < 1e-17) break;
    }
    const double chi = x - 0.25 * M_PI;
    return std::sqrt(2.0 / (M_PI * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

} // namespace

double bessel_j0(double x) {
    if (!std::isfinite(x)) throw InvalidInput("bessel_j0: non-finite argument");
    const double ax = std::abs(x);
    if (ax < 12.0) return j0_series(ax);
    return j0_asymptotic(ax);
}

bool is_hermitian(const MatC& a, double rel_tol) {
    if (a.rows() != a.cols() || a.rows() == 0) return false;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

MatC symmetrize(const MatC& a) {
    MatC s = 0.5 * (a + a.adjoint());
    for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, i) = cplx(s(i, i).real(), 0.0);
    return s;
}

Evd hermitian_evd(const MatC& a) {
    if (!is_hermitian(a)) throw InvalidInput("hermitian_evd: input is not conjugate-symmetric");
    Eigen::SelfAdjointEigenSolver<MatC> es(symmetrize(a));
    if (es.info() != Eigen::Success) throw InvalidInput("hermitian_evd: eigensolver failed");

    const Eigen::Index n = a.rows();
    Evd out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k; // Eigen sorts ascending
        out.eigenvalues(k) = es.eigenvalues()(src);
        VecC v = es.eigenvectors().col(src);
        // Phase convention: rotate so the largest-modulus entry is real >= 0;
        // ties resolved by the lowest index.
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double m = std::abs(v(i));
            if (m > best + 1e-15) { best = m; imax = i; }
        }
        if (best > 0.0) {
            const cplx ph = v(imax) / std::abs(v(imax));
            v *= std::conj(ph);
            v(imax) = cplx(std::abs(v(imax)), 0.0);
        }
        out.eigenvectors.col(k) = v;
    }
    return out;
}

bool is_psd(const MatC& a, double psd_tol) {
    if (!is_hermitian(a, 1e-8)) return false;
    Eigen::SelfAdjointEigenSolver<MatC> es(symmetrize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -psd_tol;
}

VecC sample_complex_gaussian(RngStream& rng, int dim) {
    if (dim < 0) throw InvalidInput("sample_complex_gaussian: negative dimension");
    VecC v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.next_cn01();
    return v;
}

} // namespace irsva::num
