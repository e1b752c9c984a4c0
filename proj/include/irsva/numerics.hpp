// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Complex/Hermitian linear-algebra substrate: Bessel J0, Hermitian EVD with a
// deterministic phase convention, PSD tests and complex Gaussian sampling.
// Hermitian matrices are plain Eigen::MatrixXcd kept conjugate-symmetric by
// construction; validation helpers enforce the invariant at module borders.

#pragma once

#include "irsva/rng.hpp"
#include "irsva/types.hpp"

namespace irsva::num {

// Zero-order Bessel function of the first kind. Absolute error below 1e-10
// for |x| <= 50 (ascending power series for small |x|, Hankel asymptotic
// expansion with optimal truncation beyond). Rejects non-finite input.
double bessel_j0(double x);

struct Evd {
    VecR eigenvalues;  // sorted descending
    MatC eigenvectors; // unitary columns, column k pairs with eigenvalues[k]
};

// True when max |A - A^H| entry is within rel_tol * max(1, max|A|).
bool is_hermitian(const MatC& a, double rel_tol = tol().hermitian_sym);

// Eigendecomposition of a Hermitian matrix. Eigenvalues descending; each
// eigenvector is rotated so its largest-modulus entry is real nonnegative,
// which makes rank-one extraction deterministic. Throws on non-Hermitian
// input (deviation beyond the tolerance record).
Evd hermitian_evd(const MatC& a);

// min eigenvalue >= -psd_tol.
bool is_psd(const MatC& a, double psd_tol = tol().psd);

// Forces exact conjugate symmetry: (A + A^H)/2 with real diagonal.
MatC symmetrize(const MatC& a);

// dim i.i.d. CN(0,1) entries from the given stream.
VecC sample_complex_gaussian(RngStream& rng, int dim);

} // namespace irsva::num
