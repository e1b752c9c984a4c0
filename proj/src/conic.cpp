// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors

#include "irsva/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <unordered_map>

namespace irsva::conic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Problem description
// ---------------------------------------------------------------------------

struct Triplet {
    int r = 0, c = 0;
    cplx v{};
};

struct VarInfo {
    bool hermitian = false;
    int dim = 1;
    int offset = 0; // first coordinate
    int coords = 1;
};

struct LmiHermTerm {
    int var = -1;
    int block_offset = 0;
    double coeff = 1.0;
};

struct LmiScalTerm {
    int var = -1;
    MatC c;
};

struct LmiDesc {
    int dim = 0;
    MatC constant;
    std::vector<LmiHermTerm> herm;
    std::vector<LmiScalTerm> scal;
};

struct LogTerm {
    double w = 0;
    LinExpr arg;
};

struct ConicProblem::Impl {
    std::vector<VarInfo> vars;
    int total_coords = 0;

    std::vector<LmiDesc> lmis;
    std::vector<std::pair<LinExpr, double>> ineqs; // e <= rhs
    std::vector<std::pair<LinExpr, double>> eqs;   // e == rhs

    std::vector<LogTerm> obj_logs;
    LinExpr obj_linear;
    ConicProblem::ObjectiveFn obj_callback;

    std::optional<VecR> start;
};

ConicProblem::ConicProblem() : impl_(std::make_unique<Impl>()) {}
ConicProblem::~ConicProblem() = default;
ConicProblem::ConicProblem(ConicProblem&&) noexcept = default;
ConicProblem& ConicProblem::operator=(ConicProblem&&) noexcept = default;

VarRef ConicProblem::add_hermitian(int dim) {
    if (dim < 1) throw InvalidInput("add_hermitian: dim >= 1");
    VarInfo v;
    v.hermitian = true;
    v.dim = dim;
    v.offset = impl_->total_coords;
    v.coords = dim * dim;
    impl_->vars.push_back(v);
    impl_->total_coords += v.coords;
    return {static_cast<int>(impl_->vars.size()) - 1};
}

VarRef ConicProblem::add_scalar() {
    VarInfo v;
    v.hermitian = false;
    v.dim = 1;
    v.offset = impl_->total_coords;
    v.coords = 1;
    impl_->vars.push_back(v);
    impl_->total_coords += 1;
    return {static_cast<int>(impl_->vars.size()) - 1};
}

int ConicProblem::var_dim(VarRef v) const { return impl_->vars.at(v.id).dim; }
int ConicProblem::num_coords() const { return impl_->total_coords; }
int ConicProblem::num_lmis() const { return static_cast<int>(impl_->lmis.size()); }

namespace {
// Coordinate layout inside a Hermitian block of dimension d:
// [0, d): diagonal entries; then for each pair (i<j) in row-scan order the
// (re, im) pair of V(i, j).
int pair_index(int i, int j, int d) {
    // number of pairs preceding row i: sum_{r<i} (d-1-r)
    const int before = i * (d - 1) - (i * (i - 1)) / 2;
    return before + (j - i - 1);
}
} // namespace

int ConicProblem::coord_diag(VarRef v, int i) const {
    const auto& info = impl_->vars.at(v.id);
    if (!info.hermitian || i < 0 || i >= info.dim) throw InvalidInput("coord_diag: bad index");
    return info.offset + i;
}

int ConicProblem::coord_re(VarRef v, int i, int j) const {
    const auto& info = impl_->vars.at(v.id);
    if (!info.hermitian || i < 0 || j <= i || j >= info.dim) throw InvalidInput("coord_re: bad index");
    return info.offset + info.dim + 2 * pair_index(i, j, info.dim);
}

int ConicProblem::coord_im(VarRef v, int i, int j) const { return coord_re(v, i, j) + 1; }

int ConicProblem::coord_scalar(VarRef v) const {
    const auto& info = impl_->vars.at(v.id);
    if (info.hermitian) throw InvalidInput("coord_scalar: not a scalar variable");
    return info.offset;
}

LinExpr ConicProblem::trace_term(VarRef v, const MatC& c) const {
    const auto& info = impl_->vars.at(v.id);
    if (!info.hermitian) throw InvalidInput("trace_term: not a Hermitian variable");
    if (c.rows() != info.dim || c.cols() != info.dim)
        throw InvalidInput("trace_term: dimension mismatch");
    LinExpr e;
    for (int i = 0; i < info.dim; ++i) e.add(coord_diag(v, i), c(i, i).real());
    for (int i = 0; i < info.dim; ++i)
        for (int j = i + 1; j < info.dim; ++j) {
            e.add(coord_re(v, i, j), 2.0 * c(i, j).real());
            e.add(coord_im(v, i, j), 2.0 * c(i, j).imag());
        }
    return e;
}

LinExpr ConicProblem::scalar_term(VarRef v, double coeff) const {
    LinExpr e;
    e.add(coord_scalar(v), coeff);
    return e;
}

MatC ConicProblem::unpack_hermitian(const VecR& x, VarRef v) const {
    const auto& info = impl_->vars.at(v.id);
    MatC m(info.dim, info.dim);
    for (int i = 0; i < info.dim; ++i) m(i, i) = x(coord_diag(v, i));
    for (int i = 0; i < info.dim; ++i)
        for (int j = i + 1; j < info.dim; ++j) {
            const cplx z(x(coord_re(v, i, j)), x(coord_im(v, i, j)));
            m(i, j) = z;
            m(j, i) = std::conj(z);
        }
    return m;
}

void ConicProblem::pack_hermitian(VecR& x, VarRef v, const MatC& value) const {
    const auto& info = impl_->vars.at(v.id);
    for (int i = 0; i < info.dim; ++i) x(coord_diag(v, i)) = value(i, i).real();
    for (int i = 0; i < info.dim; ++i)
        for (int j = i + 1; j < info.dim; ++j) {
            x(coord_re(v, i, j)) = value(i, j).real();
            x(coord_im(v, i, j)) = value(i, j).imag();
        }
}

void ConicProblem::add_eq(const LinExpr& e, double rhs) { impl_->eqs.emplace_back(e, rhs); }
void ConicProblem::add_ineq(const LinExpr& e, double rhs) { impl_->ineqs.emplace_back(e, rhs); }

int ConicProblem::add_lmi(int dim) {
    LmiDesc l;
    l.dim = dim;
    l.constant = MatC::Zero(dim, dim);
    impl_->lmis.push_back(std::move(l));
    return static_cast<int>(impl_->lmis.size()) - 1;
}

void ConicProblem::lmi_add_constant(int k, const MatC& c) {
    auto& l = impl_->lmis.at(k);
    if (c.rows() != l.dim || c.cols() != l.dim) throw InvalidInput("lmi constant: bad dims");
    l.constant += c;
}

void ConicProblem::lmi_add_hermitian_block(int k, VarRef v, int block_offset, double coeff) {
    auto& l = impl_->lmis.at(k);
    const auto& info = impl_->vars.at(v.id);
    if (!info.hermitian) throw InvalidInput("lmi hermitian block: not Hermitian");
    if (block_offset < 0 || block_offset + info.dim > l.dim)
        throw InvalidInput("lmi hermitian block: block out of range");
    l.herm.push_back({v.id, block_offset, coeff});
}

void ConicProblem::lmi_add_scalar_matrix(int k, VarRef v, const MatC& c) {
    auto& l = impl_->lmis.at(k);
    const auto& info = impl_->vars.at(v.id);
    if (info.hermitian) throw InvalidInput("lmi scalar matrix: not a scalar var");
    if (c.rows() != l.dim || c.cols() != l.dim) throw InvalidInput("lmi scalar matrix: bad dims");
    l.scal.push_back({v.id, c});
}

void ConicProblem::obj_add_log(double w, const LinExpr& arg) {
    if (w <= 0) throw InvalidInput("obj_add_log: weight must be positive");
    impl_->obj_logs.push_back({w, arg});
}

void ConicProblem::obj_add_linear(const LinExpr& e) {
    auto& lin = impl_->obj_linear;
    for (auto& t : e.terms) lin.terms.push_back(t);
    lin.constant += e.constant;
}

void ConicProblem::obj_set_callback(ObjectiveFn f) { impl_->obj_callback = std::move(f); }

void ConicProblem::set_start(const VecR& x) {
    if (x.size() != impl_->total_coords) throw InvalidInput("set_start: wrong size");
    impl_->start = x;
}

void ConicProblem::set_start_hermitian(VarRef v, const MatC& value) {
    if (!impl_->start) impl_->start = VecR::Zero(impl_->total_coords);
    pack_hermitian(*impl_->start, v, value);
}

void ConicProblem::set_start_scalar(VarRef v, double value) {
    if (!impl_->start) impl_->start = VecR::Zero(impl_->total_coords);
    (*impl_->start)(coord_scalar(v)) = value;
}

// ---------------------------------------------------------------------------
// Compiled form
// ---------------------------------------------------------------------------

namespace {

struct SparseRow {
    std::vector<std::pair<int, double>> terms; // merged, sorted by coord
    double constant = 0.0;
    double rhs = 0.0;
};

SparseRow normalize(const LinExpr& e, double rhs) {
    std::unordered_map<int, double> acc;
    for (auto& [k, c] : e.terms) acc[k] += c;
    SparseRow r;
    r.constant = e.constant;
    r.rhs = rhs;
    r.terms.assign(acc.begin(), acc.end());
    std::sort(r.terms.begin(), r.terms.end());
    std::erase_if(r.terms, [](auto& t) { return t.second == 0.0; });
    return r;
}

struct CompiledLmi {
    int dim = 0;
    MatC constant;
    // coordinate -> Hermitian-closed triplet list
    std::unordered_map<int, std::vector<Triplet>> basis;
    std::vector<int> coords; // keys of basis, sorted
};

struct Compiled {
    const ConicProblem::Impl* src = nullptr;
    int n = 0; // total coords

    std::vector<CompiledLmi> lmis;
    std::vector<SparseRow> ineqs;
    std::vector<SparseRow> gen_eqs; // non-fixing equalities
    std::vector<char> is_fixed;
    VecR fixed_value;
    std::vector<int> free_of_coord; // coord -> free index or -1
    std::vector<int> coord_of_free;

    std::vector<LogTerm> obj_logs;
    SparseRow obj_linear;
    ConicProblem::ObjectiveFn obj_callback;

    // elimination target (fast Newton), if detected
    int elim_var = -1;
    int elim_lmi_a = -1, elim_lmi_b = -1;
    // single-variable problem (one Hermitian variable in one identity LMI)
    bool solo = false;

    int nu_total = 0; // barrier parameter
};

void add_herm_basis(const ConicProblem& p, VarRef v, int block_offset, double coeff,
                    CompiledLmi& out) {
    const int d = p.var_dim(v);
    for (int i = 0; i < d; ++i) {
        out.basis[p.coord_diag(v, i)].push_back(
            {block_offset + i, block_offset + i, cplx(coeff, 0)});
    }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            auto& re = out.basis[p.coord_re(v, i, j)];
            re.push_back({block_offset + i, block_offset + j, cplx(coeff, 0)});
            re.push_back({block_offset + j, block_offset + i, cplx(coeff, 0)});
            auto& im = out.basis[p.coord_im(v, i, j)];
            im.push_back({block_offset + i, block_offset + j, cplx(0, coeff)});
            im.push_back({block_offset + j, block_offset + i, cplx(0, -coeff)});
        }
}

Compiled compile(const ConicProblem& p) {
    const auto& im = p.impl();
    Compiled c;
    c.src = &im;
    c.n = im.total_coords;
    c.obj_logs = im.obj_logs;
    c.obj_linear = normalize(im.obj_linear, 0.0);
    c.obj_callback = im.obj_callback;

    for (const auto& l : im.lmis) {
        CompiledLmi cl;
        cl.dim = l.dim;
        cl.constant = l.constant;
        for (const auto& t : l.herm)
            add_herm_basis(p, VarRef{t.var}, t.block_offset, t.coeff, cl);
        for (const auto& t : l.scal) {
            auto& lst = cl.basis[p.coord_scalar(VarRef{t.var})];
            for (int i = 0; i < l.dim; ++i)
                for (int j = 0; j < l.dim; ++j)
                    if (t.c(i, j) != cplx(0, 0)) lst.push_back({i, j, t.c(i, j)});
        }
        for (auto& [k, _] : cl.basis) cl.coords.push_back(k);
        std::sort(cl.coords.begin(), cl.coords.end());
        c.lmis.push_back(std::move(cl));
        c.nu_total += l.dim;
    }
    c.nu_total += static_cast<int>(im.ineqs.size());

    for (const auto& [e, rhs] : im.ineqs) c.ineqs.push_back(normalize(e, rhs));

    c.is_fixed.assign(c.n, 0);
    c.fixed_value = VecR::Zero(c.n);
    for (const auto& [e, rhs] : im.eqs) {
        SparseRow r = normalize(e, rhs);
        if (r.terms.size() == 1) {
            const int k = r.terms[0].first;
            const double val = (r.rhs - r.constant) / r.terms[0].second;
            if (c.is_fixed[k] && std::abs(c.fixed_value(k) - val) > 1e-12)
                throw InvalidInput("conic: contradictory coordinate fixings");
            c.is_fixed[k] = 1;
            c.fixed_value(k) = val;
        } else if (!r.terms.empty()) {
            c.gen_eqs.push_back(std::move(r));
        } else if (std::abs(r.constant - r.rhs) > 1e-12) {
            throw InvalidInput("conic: inconsistent constant equality");
        }
    }

    c.free_of_coord.assign(c.n, -1);
    for (int k = 0; k < c.n; ++k)
        if (!c.is_fixed[k]) {
            c.free_of_coord[k] = static_cast<int>(c.coord_of_free.size());
            c.coord_of_free.push_back(k);
        }
    return c;
}

// Elimination pattern: a Hermitian variable that (a) appears identity-embedded
// (offset 0, coeff 1, dim == lmi dim) in exactly two LMIs, (b) appears in no
// other LMI, objective term, or equality. Scalar inequalities may touch it.
void detect_elimination(const ConicProblem& p, Compiled& c) {
    const auto& im = p.impl();
    int best = -1, best_dim = 0, la = -1, lb = -1;
    for (int v = 0; v < static_cast<int>(im.vars.size()); ++v) {
        const auto& info = im.vars[v];
        if (!info.hermitian) continue;
        std::vector<int> hosts;
        bool clean = true;
        for (int k = 0; k < static_cast<int>(im.lmis.size()) && clean; ++k) {
            int uses = 0;
            for (const auto& t : im.lmis[k].herm)
                if (t.var == v) {
                    ++uses;
                    if (t.block_offset != 0 || t.coeff != 1.0 || im.lmis[k].dim != info.dim)
                        clean = false;
                }
            if (uses > 1) clean = false;
            if (uses == 1) hosts.push_back(k);
        }
        if (!clean || hosts.size() != 2) continue;
        auto touches_var = [&](const LinExpr& e) {
            for (auto& [k, _] : e.terms)
                if (k >= info.offset && k < info.offset + info.coords) return true;
            return false;
        };
        for (const auto& lt : im.obj_logs)
            if (touches_var(lt.arg)) clean = false;
        if (touches_var(im.obj_linear)) clean = false;
        for (const auto& [e, rhs] : im.eqs)
            if (touches_var(e)) clean = false;
        if (im.obj_callback) clean = false; // cannot see inside a callback
        if (clean && info.dim > best_dim) {
            best = v;
            best_dim = info.dim;
            la = hosts[0];
            lb = hosts[1];
        }
    }
    if (best >= 0) {
        c.elim_var = best;
        c.elim_lmi_a = la;
        c.elim_lmi_b = lb;
    }

    // Single Hermitian variable, identity-embedded in the only LMI, with a
    // structured objective: the Newton system is a sum of the barrier kernel
    // (whose inverse is the congruence by the LMI value) and a few rank-one
    // terms; solvable in O(dim^3).
    if (im.vars.size() == 1 && im.vars[0].hermitian && im.lmis.size() == 1 &&
        !im.obj_callback && im.lmis[0].scal.empty() && im.lmis[0].herm.size() == 1 &&
        im.lmis[0].herm[0].coeff == 1.0 && im.lmis[0].herm[0].block_offset == 0 &&
        im.lmis[0].dim == im.vars[0].dim &&
        im.lmis[0].constant.cwiseAbs().maxCoeff() == 0.0) {
        c.solo = true;
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double row_value(const SparseRow& r, const VecR& x) {
    double v = r.constant;
    for (auto& [k, cfo] : r.terms) v += cfo * x(k);
    return v;
}

MatC lmi_value(const CompiledLmi& l, const VecR& x) {
    MatC m = l.constant;
    for (int k : l.coords) {
        const double xv = x(k);
        if (xv == 0.0) continue;
        for (const auto& t : l.basis.at(k)) m(t.r, t.c) += xv * t.v;
    }
    return m;
}

struct ObjEval {
    double value = 0;
    VecR grad;       // full coords
    MatR hess;       // dense over full coords (callback path only)
    bool dense_hess = false;
    std::vector<double> log_args; // positive on success
    bool ok = true;
};

ObjEval eval_objective(const Compiled& c, const VecR& x, bool need_derivs) {
    ObjEval o;
    o.grad = VecR::Zero(c.n);
    if (c.obj_callback) {
        o.dense_hess = need_derivs;
        if (need_derivs) o.hess = MatR::Zero(c.n, c.n);
        o.value = c.obj_callback(x, need_derivs ? &o.grad : nullptr,
                                 need_derivs ? &o.hess : nullptr);
        return o;
    }
    o.value = row_value(c.obj_linear, x);
    if (need_derivs)
        for (auto& [k, cf] : c.obj_linear.terms) o.grad(k) += cf;
    for (const auto& lt : c.obj_logs) {
        double a = lt.arg.constant;
        for (auto& [k, cf] : lt.arg.terms) a += cf * x(k);
        o.log_args.push_back(a);
        if (a <= 0) {
            o.ok = false;
            o.value = -kInf;
            return o;
        }
        o.value += lt.w * std::log(a);
        if (need_derivs)
            for (auto& [k, cf] : lt.arg.terms) o.grad(k) += lt.w * cf / a;
    }
    return o;
}

struct PointEval {
    bool feasible = false;
    double merit = -kInf;
    double objective = -kInf;
    std::vector<double> slacks;
    std::vector<Eigen::LLT<MatC>> llts;
    std::vector<MatC> lmi_vals;
};

PointEval eval_point(const Compiled& c, const VecR& x, double mu) {
    PointEval pe;
    pe.slacks.reserve(c.ineqs.size());
    double barrier = 0;
    for (const auto& r : c.ineqs) {
        const double s = r.rhs - row_value(r, x);
        pe.slacks.push_back(s);
        if (s <= 0) return pe;
        barrier += std::log(s);
    }
    pe.lmi_vals.reserve(c.lmis.size());
    pe.llts.reserve(c.lmis.size());
    for (const auto& l : c.lmis) {
        pe.lmi_vals.push_back(lmi_value(l, x));
        pe.llts.emplace_back(pe.lmi_vals.back());
        if (pe.llts.back().info() != Eigen::Success) return pe;
        const auto& L = pe.llts.back().matrixLLT();
        for (int i = 0; i < l.dim; ++i) {
            const double dii = L(i, i).real();
            if (!(dii > 0)) return pe;
            barrier += 2.0 * std::log(dii);
        }
    }
    ObjEval o = eval_objective(c, x, false);
    if (!o.ok || !std::isfinite(o.value)) return pe;
    pe.feasible = true;
    pe.objective = o.value;
    pe.merit = o.value + mu * barrier;
    return pe;
}

// ---------------------------------------------------------------------------
// Newton step (dense and eliminated variants)
// ---------------------------------------------------------------------------

struct NewtonWork {
    VecR dx;          // full-coordinate step (fixed coords zero)
    double decrement2 = 0;
    double obj_curvature = 0; // objective-only curvature along dx
    VecR eq_multipliers;
    bool ok = false;

    // Exact dual certificate recovered from the Newton algebra (single
    // variable path); sidesteps the conditioning of mu*M^{-1} estimates.
    bool has_exact_duals = false;
    MatC exact_Z;
    VecR exact_ineq_duals;
};

// Gradient of the merit over all coordinates (fixed included; caller masks).
VecR merit_gradient(const Compiled& c, const VecR& x, double mu, const PointEval& pe,
                    const ObjEval& obj, std::vector<MatC>& inverses) {
    VecR g = obj.grad;
    for (std::size_t j = 0; j < c.ineqs.size(); ++j) {
        const double s = pe.slacks[j];
        for (auto& [k, cf] : c.ineqs[j].terms) g(k) -= mu * cf / s;
    }
    inverses.clear();
    inverses.reserve(c.lmis.size());
    for (std::size_t m = 0; m < c.lmis.size(); ++m) {
        const auto& l = c.lmis[m];
        MatC S = pe.llts[m].solve(MatC::Identity(l.dim, l.dim));
        for (int k : l.coords) {
            double acc = 0;
            for (const auto& t : l.basis.at(k)) acc += (t.v * S(t.c, t.r)).real();
            g(k) += mu * acc;
        }
        inverses.push_back(std::move(S));
    }
    return g;
}

// -Tr(S B_k S B_j) accumulated over a triplet pair; returns the real part.
double pair_entry(const std::vector<Triplet>& bk, const std::vector<Triplet>& bj, const MatC& S) {
    cplx acc = 0;
    for (const auto& p : bk)
        for (const auto& q : bj) acc += p.v * q.v * S(q.c, p.r) * S(p.c, q.r);
    return acc.real();
}

// Solves Q d = g with optional equality rows A d = 0 (Q SPD).
bool solve_spd_with_eq(MatR& Q, const VecR& g, const std::vector<SparseRow>& eqs,
                       const std::vector<int>& free_of_coord, VecR& d, VecR& nu) {
    const int n = static_cast<int>(g.size());
    Eigen::LLT<MatR> llt;
    double ridge = 0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        llt.compute(Q);
        if (llt.info() == Eigen::Success) break;
        const double bump = (ridge == 0 ? 1e-12 : ridge * 100) * (1.0 + Q.diagonal().cwiseAbs().maxCoeff());
        Q.diagonal().array() += bump;
        ridge = (ridge == 0 ? 1e-12 : ridge * 100);
    }
    if (llt.info() != Eigen::Success) return false;

    if (eqs.empty()) {
        d = llt.solve(g);
        nu.resize(0);
        return true;
    }
    const int p = static_cast<int>(eqs.size());
    MatR A = MatR::Zero(p, n);
    for (int r = 0; r < p; ++r)
        for (auto& [k, cf] : eqs[r].terms) {
            const int f = free_of_coord[k];
            if (f >= 0) A(r, f) += cf;
        }
    const MatR AQi = llt.solve(A.transpose()).transpose(); // p x n
    MatR S = AQi * A.transpose();                          // p x p
    const VecR rhs = AQi * g;
    nu = S.ldlt().solve(rhs);
    d = llt.solve(g - A.transpose() * nu);
    return true;
}

NewtonWork dense_newton(const Compiled& c, const VecR& x, double mu, const PointEval& pe) {
    NewtonWork w;
    ObjEval obj = eval_objective(c, x, true);
    if (!obj.ok) return w;
    std::vector<MatC> S;
    const VecR g_full = merit_gradient(c, x, mu, pe, obj, S);

    const int nf = static_cast<int>(c.coord_of_free.size());
    VecR g(nf);
    for (int f = 0; f < nf; ++f) g(f) = g_full(c.coord_of_free[f]);

    MatR Q = MatR::Zero(nf, nf); // Q = -Hessian(merit)
    // objective curvature
    if (obj.dense_hess) {
        for (int a = 0; a < nf; ++a)
            for (int b = 0; b < nf; ++b) Q(a, b) -= obj.hess(c.coord_of_free[a], c.coord_of_free[b]);
    } else {
        for (std::size_t t = 0; t < c.obj_logs.size(); ++t) {
            const auto& lt = c.obj_logs[t];
            const double a = obj.log_args[t];
            VecR v = VecR::Zero(nf);
            for (auto& [k, cf] : lt.arg.terms) {
                const int f = c.free_of_coord[k];
                if (f >= 0) v(f) += cf;
            }
            Q.selfadjointView<Eigen::Lower>().rankUpdate(v, lt.w / (a * a));
        }
    }
    // inequality barriers
    for (std::size_t j = 0; j < c.ineqs.size(); ++j) {
        const double s = pe.slacks[j];
        VecR v = VecR::Zero(nf);
        for (auto& [k, cf] : c.ineqs[j].terms) {
            const int f = c.free_of_coord[k];
            if (f >= 0) v(f) += cf;
        }
        Q.selfadjointView<Eigen::Lower>().rankUpdate(v, mu / (s * s));
    }
    Q = Q.selfadjointView<Eigen::Lower>();
    // LMI barriers
    for (std::size_t m = 0; m < c.lmis.size(); ++m) {
        const auto& l = c.lmis[m];
        std::vector<int> freel;
        for (int k : l.coords)
            if (c.free_of_coord[k] >= 0) freel.push_back(k);
        for (std::size_t a = 0; a < freel.size(); ++a) {
            const auto& bk = l.basis.at(freel[a]);
            const int fa = c.free_of_coord[freel[a]];
            for (std::size_t b = a; b < freel.size(); ++b) {
                const auto& bj = l.basis.at(freel[b]);
                const int fb = c.free_of_coord[freel[b]];
                const double h = mu * pair_entry(bk, bj, S[m]);
                Q(fa, fb) += h;
                if (fa != fb) Q(fb, fa) += h;
            }
        }
    }

    VecR d, nu;
    if (!solve_spd_with_eq(Q, g, c.gen_eqs, c.free_of_coord, d, nu)) return w;

    w.dx = VecR::Zero(c.n);
    for (int f = 0; f < nf; ++f) w.dx(c.coord_of_free[f]) = d(f);
    w.decrement2 = g.dot(d);
    w.eq_multipliers = nu;
    if (obj.dense_hess) w.obj_curvature = w.dx.dot(obj.hess * w.dx);
    w.ok = true;
    return w;
}

// Two-sided symmetric-Kronecker solve machinery for the eliminated block:
// K(X) = mu (S_a X S_a + S_b X S_b) with M_a, M_b the LMI values.
struct ElimKernel {
    double mu = 1;
    int d = 0;
    MatC T;      // M_a^{1/2} U
    MatC Qa, Qb; // S_a T, S_b T
    VecR lam;    // eigenvalues of C = W S_b W
    MatR E;      // 1 + lam lam^T

    // Woodbury data for scalar-inequality rank-one terms over the block.
    std::vector<MatC> wood_base; // K^{-1} A_j
    std::vector<MatC> wood_A;
    MatR wood_core;              // (C^{-1} + G)
    Eigen::LDLT<MatR> wood_ldlt;

    void build(const MatC& Ma, const MatC& Mb, double mu_in,
               const std::vector<std::pair<double, MatC>>& rank_ones) {
        mu = mu_in;
        d = static_cast<int>(Ma.rows());
        Eigen::SelfAdjointEigenSolver<MatC> esa(Ma);
        const MatC W = esa.operatorSqrt();
        Eigen::LLT<MatC> lltb(Mb);
        const MatC Sb = lltb.solve(MatC::Identity(d, d));
        const MatC C = W * Sb * W;
        Eigen::SelfAdjointEigenSolver<MatC> esc(C);
        lam = esc.eigenvalues();
        T = W * esc.eigenvectors();
        Eigen::LLT<MatC> llta(Ma);
        Qa = llta.solve(T);
        Qb = lltb.solve(T);
        E = MatR::Ones(d, d) + lam * lam.transpose();

        const int r = static_cast<int>(rank_ones.size());
        if (r > 0) {
            wood_A.clear();
            wood_base.clear();
            MatR G(r, r);
            MatR Cinv = MatR::Zero(r, r);
            for (int j = 0; j < r; ++j) {
                wood_A.push_back(rank_ones[j].second);
                wood_base.push_back(k_solve(rank_ones[j].second));
                Cinv(j, j) = 1.0 / rank_ones[j].first;
            }
            for (int j = 0; j < r; ++j)
                for (int k = 0; k < r; ++k)
                    G(j, k) = (wood_A[j].array().conjugate() * wood_base[k].array()).sum().real();
            wood_core = Cinv + G;
            wood_ldlt.compute(wood_core);
        }
    }

    // K^{-1} B for Hermitian B.
    MatC k_solve(const MatC& B) const {
        MatC V = T.adjoint() * B * T;
        V.array() /= E.array();
        return (T * V * T.adjoint()) / mu;
    }

    // (K + sum rho_j A_j <A_j, .>)^{-1} B.
    MatC full_solve(const MatC& B) const {
        MatC base = k_solve(B);
        if (wood_A.empty()) return base;
        const int r = static_cast<int>(wood_A.size());
        VecR rhs(r);
        for (int j = 0; j < r; ++j)
            rhs(j) = (wood_A[j].array().conjugate() * base.array()).sum().real();
        const VecR y = wood_ldlt.solve(rhs);
        for (int j = 0; j < r; ++j) base -= y(j) * wood_base[j];
        return base;
    }
};

// Rebuilds the Hermitian matrix functional A with <A, V> = sum coeff*x_k
// from the coordinate coefficients of variable `pinfo` inside a sparse row.
MatC row_to_matrix(const VarInfo& pinfo,
                   const std::vector<std::pair<int, double>>& terms) {
    const int d = pinfo.dim;
    MatC a = MatC::Zero(d, d);
    for (auto& [k, cf] : terms) {
        if (k < pinfo.offset || k >= pinfo.offset + pinfo.coords) continue;
        const int rel = k - pinfo.offset;
        if (rel < d) {
            a(rel, rel) += cf;
            continue;
        }
        const int pr = (rel - d) / 2;
        const bool imag = (rel - d) % 2;
        int i0 = 0, j0 = 0, seen = 0;
        for (int ii = 0; ii < d && !seen; ++ii)
            for (int jj = ii + 1; jj < d; ++jj)
                if (pair_index(ii, jj, d) == pr) {
                    i0 = ii;
                    j0 = jj;
                    seen = 1;
                    break;
                }
        // Tr(A V) contributes 2 Re(A_ij) u_ij + 2 Im(A_ij) v_ij, so a
        // coefficient c maps to A_ij = c/2 (re) or i c/2 (im).
        if (!imag) {
            a(i0, j0) += 0.5 * cf;
            a(j0, i0) += 0.5 * cf;
        } else {
            a(i0, j0) += cplx(0, 0.5 * cf);
            a(j0, i0) += cplx(0, -0.5 * cf);
        }
    }
    return a;
}

// Newton step for the single-variable pattern: Q = K + sum_t rho_t A_t<A_t,.>
// with K^{-1}(B) = (1/mu) M B M, plus bordered general equalities.
NewtonWork solo_newton(const Compiled& c, const ConicProblem& prob, const VecR& x, double mu,
                       const PointEval& pe) {
    NewtonWork w;
    const auto& pinfo = c.src->vars[0];
    const int d = pinfo.dim;
    const MatC& M = pe.lmi_vals[0];
    const MatC& S_inv = M; // K^{-1} congruence factor

    ObjEval obj = eval_objective(c, x, true);
    if (!obj.ok) return w;

    // Gradient split: the smooth part G_rest plus the barrier term mu*S.
    // K^{-1}(mu S) = M exactly, which sidesteps the squared conditioning of
    // the boundary matrix in the final stages.
    std::vector<std::pair<int, double>> grad_terms;
    for (int k = pinfo.offset; k < pinfo.offset + pinfo.coords; ++k)
        if (obj.grad(k) != 0.0) grad_terms.emplace_back(k, obj.grad(k));
    MatC G_rest = row_to_matrix(pinfo, grad_terms);
    for (std::size_t j = 0; j < c.ineqs.size(); ++j)
        G_rest -= (mu / pe.slacks[j]) * row_to_matrix(pinfo, c.ineqs[j].terms);
    Eigen::LLT<MatC> llt_m(M);
    const MatC S_barrier = llt_m.solve(MatC::Identity(d, d));
    MatC G = G_rest + mu * S_barrier;

    // rank-one curvature terms
    std::vector<std::pair<double, MatC>> ones;
    for (std::size_t t = 0; t < c.obj_logs.size(); ++t) {
        const double a = obj.log_args[t];
        ones.emplace_back(c.obj_logs[t].w / (a * a),
                          row_to_matrix(pinfo, normalize(c.obj_logs[t].arg, 0.0).terms));
    }
    for (std::size_t j = 0; j < c.ineqs.size(); ++j) {
        const double s = pe.slacks[j];
        ones.emplace_back(mu / (s * s), row_to_matrix(pinfo, c.ineqs[j].terms));
    }

    auto k_solve = [&](const MatC& B) { return MatC((S_inv * B * S_inv) / mu); };
    const int r = static_cast<int>(ones.size());
    std::vector<MatC> base(r);
    MatR core(r, r);
    for (int j = 0; j < r; ++j) base[j] = k_solve(ones[j].second);
    for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k)
            core(j, k) = (j == k ? 1.0 / ones[j].first : 0.0) +
                         (ones[j].second.array().conjugate() * base[k].array()).sum().real();
    Eigen::LDLT<MatR> core_ldlt(core);
    auto woodbury = [&](MatC out) {
        if (r > 0) {
            VecR rhs(r);
            for (int j = 0; j < r; ++j)
                rhs(j) = (ones[j].second.array().conjugate() * out.array()).sum().real();
            const VecR y = core_ldlt.solve(rhs);
            for (int j = 0; j < r; ++j) out -= y(j) * base[j];
        }
        return out;
    };
    auto full_solve = [&](const MatC& B) { return woodbury(k_solve(B)); };
    // K^{-1} of the full gradient with the exact barrier shortcut
    const MatC kinv_G = MatC(k_solve(G_rest) + M);

    // Bordered rows: general equalities plus coordinate fixings (the step
    // must vanish along fixed coordinates).
    std::vector<MatC> eqm;
    int p_gen = static_cast<int>(c.gen_eqs.size());
    for (const auto& row : c.gen_eqs) eqm.push_back(row_to_matrix(pinfo, row.terms));
    for (int k = pinfo.offset; k < pinfo.offset + pinfo.coords; ++k)
        if (c.is_fixed[k]) eqm.push_back(row_to_matrix(pinfo, {{k, 1.0}}));
    const int p = static_cast<int>(eqm.size());
    MatC dP;
    VecR nu_all = VecR::Zero(p);
    if (p == 0) {
        dP = woodbury(kinv_G);
        w.eq_multipliers.resize(0);
    } else {
        std::vector<MatC> eqs_solved(p);
        for (int m = 0; m < p; ++m) eqs_solved[m] = full_solve(eqm[m]);
        const MatC u1 = woodbury(kinv_G);
        MatR sys(p, p);
        VecR rhs(p);
        for (int m = 0; m < p; ++m) {
            rhs(m) = (eqm[m].array().conjugate() * u1.array()).sum().real();
            for (int n2 = 0; n2 < p; ++n2)
                sys(m, n2) = (eqm[m].array().conjugate() * eqs_solved[n2].array()).sum().real();
        }
        nu_all = sys.ldlt().solve(rhs);
        dP = u1;
        for (int m = 0; m < p; ++m) dP -= nu_all(m) * eqs_solved[m];
        w.eq_multipliers = nu_all.head(p_gen);
    }

    w.dx = VecR::Zero(c.n);
    VecR xtmp = VecR::Zero(c.n);
    prob.pack_hermitian(xtmp, VarRef{0}, dP);
    for (int k = pinfo.offset; k < pinfo.offset + pinfo.coords; ++k)
        if (!c.is_fixed[k]) w.dx(k) = xtmp(k);
    w.decrement2 = (G.array().conjugate() * dP.array()).sum().real();

    // Dual recovery: Z = -grad f + sum y_t A_t + sum lambda_j A_j + sum nu E_m
    // with y from the rank-one multipliers; exact stationarity at x + dP.
    {
        const int n_logs = static_cast<int>(c.obj_logs.size());
        w.exact_Z = -row_to_matrix(pinfo, grad_terms);
        w.exact_ineq_duals.resize(static_cast<int>(c.ineqs.size()));
        for (int t = 0; t < r; ++t) {
            const double y = ones[t].first *
                             (ones[t].second.array().conjugate() * dP.array()).sum().real();
            if (t < n_logs) {
                w.exact_Z += y * ones[t].second;
            } else {
                const int j = t - n_logs;
                const double lam = std::max(0.0, mu / pe.slacks[j] + y);
                w.exact_ineq_duals(j) = lam;
                w.exact_Z += lam * ones[t].second;
            }
        }
        for (int m = 0; m < p; ++m) w.exact_Z += nu_all(m) * eqm[m];
        w.has_exact_duals = true;
    }
    w.ok = true;
    return w;
}

NewtonWork elim_newton(const Compiled& c, const ConicProblem& prob, const VecR& x, double mu,
                       const PointEval& pe) {
    NewtonWork w;
    const auto& vars = c.src->vars;
    const auto& pinfo = vars[c.elim_var];
    const int d = pinfo.dim;
    const int la = c.elim_lmi_a, lb = c.elim_lmi_b;

    ObjEval obj = eval_objective(c, x, true);
    if (!obj.ok) return w;
    std::vector<MatC> S;
    const VecR g_full = merit_gradient(c, x, mu, pe, obj, S);

    auto in_P = [&](int k) { return k >= pinfo.offset && k < pinfo.offset + pinfo.coords; };

    // Residual free coordinates.
    std::vector<int> rcoords;
    for (int k : c.coord_of_free)
        if (!in_P(k)) rcoords.push_back(k);
    const int nr = static_cast<int>(rcoords.size());
    std::vector<int> rindex(c.n, -1);
    for (int i = 0; i < nr; ++i) rindex[rcoords[i]] = i;

    VecR g_r(nr);
    for (int i = 0; i < nr; ++i) g_r(i) = g_full(rcoords[i]);

    // P-space gradient as a matrix: mu(S_a + S_b) - sum (mu/s_j) A_j.
    MatC G_P = mu * (S[la] + S[lb]);
    // Scalar inequalities touching P.
    struct IneqP {
        int idx;
        MatC A;                                   // P-part as a matrix
        std::vector<std::pair<int, double>> rest; // residual coords
    };
    std::vector<IneqP> ineqs_p;
    for (std::size_t j = 0; j < c.ineqs.size(); ++j) {
        std::vector<std::pair<int, double>> rest;
        bool touches = false;
        for (auto& [k, cf] : c.ineqs[j].terms) {
            if (in_P(k)) touches = true;
            else if (c.free_of_coord[k] >= 0) rest.emplace_back(k, cf);
        }
        if (touches) {
            MatC A = row_to_matrix(pinfo, c.ineqs[j].terms);
            G_P -= (mu / pe.slacks[j]) * A;
            ineqs_p.push_back({static_cast<int>(j), std::move(A), std::move(rest)});
        }
    }

    std::vector<std::pair<double, MatC>> rank_ones;
    for (const auto& ip : ineqs_p)
        rank_ones.emplace_back(mu / (pe.slacks[ip.idx] * pe.slacks[ip.idx]), ip.A);

    ElimKernel ker;
    ker.build(pe.lmi_vals[la], pe.lmi_vals[lb], mu, rank_ones);

    // ----- residual-block Q (= -Hessian restricted to residual coords) -----
    MatR Q = MatR::Zero(nr, nr);
    if (obj.dense_hess) {
        for (int a = 0; a < nr; ++a)
            for (int b = 0; b < nr; ++b) Q(a, b) -= obj.hess(rcoords[a], rcoords[b]);
    } else {
        for (std::size_t t = 0; t < c.obj_logs.size(); ++t) {
            const auto& lt = c.obj_logs[t];
            const double av = obj.log_args[t];
            VecR v = VecR::Zero(nr);
            for (auto& [k, cf] : lt.arg.terms)
                if (rindex[k] >= 0) v(rindex[k]) += cf;
            Q.selfadjointView<Eigen::Lower>().rankUpdate(v, lt.w / (av * av));
        }
    }
    for (std::size_t j = 0; j < c.ineqs.size(); ++j) {
        const double s = pe.slacks[j];
        VecR v = VecR::Zero(nr);
        for (auto& [k, cf] : c.ineqs[j].terms)
            if (rindex[k] >= 0) v(rindex[k]) += cf;
        Q.selfadjointView<Eigen::Lower>().rankUpdate(v, mu / (s * s));
    }
    Q = Q.selfadjointView<Eigen::Lower>();
    for (std::size_t m = 0; m < c.lmis.size(); ++m) {
        // host LMIs enter through the stable reduced form below
        if (static_cast<int>(m) == la || static_cast<int>(m) == lb) continue;
        const auto& l = c.lmis[m];
        std::vector<int> freel;
        for (int k : l.coords)
            if (rindex[k] >= 0) freel.push_back(k);
        for (std::size_t a = 0; a < freel.size(); ++a) {
            const auto& bk = l.basis.at(freel[a]);
            const int fa = rindex[freel[a]];
            for (std::size_t b = a; b < freel.size(); ++b) {
                const auto& bj = l.basis.at(freel[b]);
                const int fb = rindex[freel[b]];
                const double h = mu * pair_entry(bk, bj, S[m]);
                Q(fa, fb) += h;
                if (fa != fb) Q(fb, fa) += h;
            }
        }
    }

    // ----- border columns: D_j = mu sum_l S_l B_j S_l + ineq cross terms ----
    // Border coords: residual coords present in the two host LMIs or in
    // inequalities that touch P.
    std::vector<int> border;
    {
        std::vector<char> mark(c.n, 0);
        for (int host : {la, lb})
            for (int k : c.lmis[host].coords)
                if (rindex[k] >= 0 && !mark[k]) { mark[k] = 1; border.push_back(k); }
        for (const auto& ip : ineqs_p)
            for (auto& [k, cf] : ip.rest)
                if (rindex[k] >= 0 && !mark[k]) { mark[k] = 1; border.push_back(k); }
    }

    const MatC u_P = ker.full_solve(G_P);
    // lookup tables: Y_l = S_l u_P S_l
    MatC Ya = S[la] * u_P * S[la];
    MatC Yb = S[lb] * u_P * S[lb];
    const double A_dot_uP_cache = 0; (void)A_dot_uP_cache;

    VecR rhs = g_r;
    // subtract <D_j, u_P> for border coords
    std::vector<double> ip_dot_uP(ineqs_p.size());
    for (std::size_t t = 0; t < ineqs_p.size(); ++t)
        ip_dot_uP[t] = (ineqs_p[t].A.array().conjugate() * u_P.array()).sum().real();
    for (int k : border) {
        double acc = 0;
        for (int host : {la, lb}) {
            const auto it = c.lmis[host].basis.find(k);
            if (it == c.lmis[host].basis.end()) continue;
            const MatC& Y = (host == la) ? Ya : Yb;
            for (const auto& t : it->second) acc += mu * (t.v * Y(t.c, t.r)).real();
        }
        for (std::size_t t = 0; t < ineqs_p.size(); ++t) {
            const auto& ip = ineqs_p[t];
            for (auto& [kk, cf] : ip.rest)
                if (kk == k)
                    acc += (mu / (pe.slacks[ip.idx] * pe.slacks[ip.idx])) * cf * ip_dot_uP[t];
        }
        rhs(rindex[k]) -= acc;
    }

    // Reduced-block assembly over the border coordinates. The naive form
    // Q_RR - D^T Kfull^{-1} D cancels catastrophically when the eliminated
    // block nears its boundary (both sides blow up like 1/mu); instead use
    //   K_host - K_host (K_a + K_b)^{-1} K_host' = (K_a^{-1} + K_b^{-1})^{-1}
    // whose kernel involves only the bounded LMI values. With the signed
    // stack Bhat_j = B_j^{(a)} - B_j^{(b)} every host combination collapses
    // to  reduced_ij = mu <Bhat_i, PS(Bhat_j)> (plus small-rank inequality
    // corrections handled through the Woodbury core).
    const int nb = static_cast<int>(border.size());
    {
        ElimKernel ps;
        ps.build(S[la], S[lb], 1.0, {});

        const int r1 = static_cast<int>(rank_ones.size());
        std::vector<MatC> ZA_a(r1), ZA_b(r1); // lookup tables for K^{-1}A_j
        for (int j = 0; j < r1; ++j) {
            ZA_a[j] = S[la] * ker.wood_base[j] * S[la];
            ZA_b[j] = S[lb] * ker.wood_base[j] * S[lb];
        }

        // signed triplet stacks per border coordinate
        struct SignedTriplet {
            int r, c;
            cplx v; // + for host a, - for host b
        };
        std::vector<std::vector<SignedTriplet>> bhat(nb);
        for (int bj = 0; bj < nb; ++bj) {
            const int kj = border[bj];
            if (const auto it = c.lmis[la].basis.find(kj); it != c.lmis[la].basis.end())
                for (const auto& t : it->second) bhat[bj].push_back({t.r, t.c, t.v});
            if (const auto it = c.lmis[lb].basis.find(kj); it != c.lmis[lb].basis.end())
                for (const auto& t : it->second) bhat[bj].push_back({t.r, t.c, -t.v});
        }

        // inequality coupling pieces
        MatR Qm = MatR::Zero(nb, r1); // q_i(m) = rho_m alpha_m(i)
        MatR Tm = MatR::Zero(nb, r1); // t_i(m) = <a_m, K^{-1} Dtilde_i>
        for (int t = 0; t < r1; ++t) {
            const auto& ip = ineqs_p[t];
            const double rho = rank_ones[t].first;
            for (auto& [kk, cf] : ip.rest) {
                // border index of kk
                for (int bi = 0; bi < nb; ++bi)
                    if (border[bi] == kk) Qm(bi, t) += rho * cf;
            }
            for (int bi = 0; bi < nb; ++bi) {
                double acc = 0;
                const int ki = border[bi];
                if (const auto it = c.lmis[la].basis.find(ki); it != c.lmis[la].basis.end())
                    for (const auto& tt : it->second)
                        acc += mu * (tt.v * ZA_a[t](tt.c, tt.r)).real();
                if (const auto it = c.lmis[lb].basis.find(ki); it != c.lmis[lb].basis.end())
                    for (const auto& tt : it->second)
                        acc += mu * (tt.v * ZA_b[t](tt.c, tt.r)).real();
                Tm(bi, t) = acc;
            }
        }
        MatR Gm(r1, r1);
        for (int j = 0; j < r1; ++j)
            for (int k = 0; k < r1; ++k)
                Gm(j, k) = (rank_ones[j].second.array().conjugate() *
                            ker.wood_base[k].array()).sum().real();

        // stable host-pair block via the parallel-sum kernel
        MatC Bj(d, d), Xj(d, d);
        MatR red = MatR::Zero(nb, nb);
        for (int bj = 0; bj < nb; ++bj) {
            Bj.setZero();
            for (const auto& t : bhat[bj]) Bj(t.r, t.c) += t.v;
            Xj = ps.k_solve(Bj);
            for (int bi = 0; bi < nb; ++bi) {
                double acc = 0;
                for (const auto& t : bhat[bi]) acc += (t.v * Xj(t.c, t.r)).real();
                red(bi, bj) = mu * acc;
            }
        }
        // inequality corrections: -Tm Qm' - Qm Tm' - Qm Gm Qm' + Phi core^{-1} Phi'
        if (r1 > 0) {
            red -= Tm * Qm.transpose();
            red -= Qm * Tm.transpose();
            red -= Qm * Gm * Qm.transpose();
            const MatR phi = Tm + Qm * Gm;
            red += phi * ker.wood_ldlt.solve(phi.transpose()).eval();
        }
        red = 0.5 * (red + red.transpose());
        for (int bi = 0; bi < nb; ++bi)
            for (int bj = 0; bj < nb; ++bj) Q(rindex[border[bi]], rindex[border[bj]]) += red(bi, bj);
    }

    VecR d_r, nu;
    if (!solve_spd_with_eq(Q, rhs, c.gen_eqs, rindex, d_r, nu)) return w;

    // Back-substitute the eliminated block.
    MatC dMa = MatC::Zero(d, d), dMb = MatC::Zero(d, d);
    for (int k : border) {
        const double step = d_r(rindex[k]);
        if (step == 0.0) continue;
        for (int host : {la, lb}) {
            const auto it = c.lmis[host].basis.find(k);
            if (it == c.lmis[host].basis.end()) continue;
            MatC& dM = (host == la) ? dMa : dMb;
            for (const auto& t : it->second) dM(t.r, t.c) += step * t.v;
        }
    }
    MatC B = G_P - mu * (S[la] * dMa * S[la]) - mu * (S[lb] * dMb * S[lb]);
    for (std::size_t t = 0; t < ineqs_p.size(); ++t) {
        const auto& ip = ineqs_p[t];
        double along = 0;
        for (auto& [kk, cf] : ip.rest)
            if (rindex[kk] >= 0) along += cf * d_r(rindex[kk]);
        if (along != 0.0)
            B -= (mu / (pe.slacks[ip.idx] * pe.slacks[ip.idx])) * along * ip.A;
    }
    const MatC dP = ker.full_solve(B);

    w.dx = VecR::Zero(c.n);
    for (int i = 0; i < nr; ++i) w.dx(rcoords[i]) = d_r(i);
    VecR xtmp = VecR::Zero(c.n);
    prob.pack_hermitian(xtmp, VarRef{c.elim_var}, dP);
    for (int k = pinfo.offset; k < pinfo.offset + pinfo.coords; ++k) w.dx(k) = xtmp(k);

    w.decrement2 = g_r.dot(d_r) + (G_P.array().conjugate() * dP.array()).sum().real();
    w.eq_multipliers = nu;
    w.ok = true;
    return w;
}

// ---------------------------------------------------------------------------
// Centering and path following
// ---------------------------------------------------------------------------

struct CenterResult {
    VecR x;
    int newton_steps = 0;
    bool stalled = false;
    bool malformed = false;
    bool centered = false;
    VecR eq_multipliers;
    double last_decrement2 = 0;
    VecR exit_dx; // Newton direction at the returned point
    bool has_exact_duals = false;
    MatC exact_Z;
    VecR exact_ineq_duals;
};

CenterResult center(const Compiled& c, const ConicProblem& prob, VecR x, double mu,
                    double decrement_tol, int step_budget, bool use_elim, std::ostream* log,
                    const std::function<bool(const VecR&)>& early_stop = {}) {
    CenterResult res;
    res.eq_multipliers = VecR::Zero(static_cast<int>(c.gen_eqs.size()));
    res.exit_dx = VecR::Zero(c.n);
    PointEval pe = eval_point(c, x, mu);
    for (int it = 0; it < step_budget; ++it) {
        if (!pe.feasible) break;
        if (early_stop && early_stop(x)) break;
        NewtonWork nw = (use_elim && c.solo)          ? solo_newton(c, prob, x, mu, pe)
                        : (use_elim && c.elim_var >= 0) ? elim_newton(c, prob, x, mu, pe)
                                                        : dense_newton(c, x, mu, pe);
        if (!nw.ok) {
            res.stalled = true;
            break;
        }
        if (nw.obj_curvature > 1e-8 * (1.0 + std::abs(pe.objective))) {
            res.malformed = true;
            break;
        }
        res.eq_multipliers = nw.eq_multipliers;
        res.last_decrement2 = nw.decrement2;
        res.exit_dx = nw.dx;
        res.has_exact_duals = nw.has_exact_duals;
        if (nw.has_exact_duals) {
            res.exact_Z = nw.exact_Z;
            res.exact_ineq_duals = nw.exact_ineq_duals;
        }
        ++res.newton_steps;
        if (nw.decrement2 <= 2.0 * decrement_tol) {
            if (log) *log << "  centered: mu=" << mu << " dec2=" << nw.decrement2 << "\n";
            res.centered = true;
            break;
        }
        // step-length cap from inequality slacks
        double alpha = 1.0;
        for (std::size_t j = 0; j < c.ineqs.size(); ++j) {
            double along = 0;
            for (auto& [k, cf] : c.ineqs[j].terms) along += cf * nw.dx(k);
            if (along > 0) alpha = std::min(alpha, 0.99 * pe.slacks[j] / along);
        }
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            VecR xt = x + alpha * nw.dx;
            PointEval pt = eval_point(c, xt, mu);
            // strict improvement: zero-progress steps at the numerical noise
            // floor must fall through to the stall exit
            if (pt.feasible && pt.merit > pe.merit + 0.01 * alpha * nw.decrement2) {
                x = std::move(xt);
                pe = std::move(pt);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (log) *log << "  newton: mu=" << mu << " merit=" << pe.merit
                      << " dec2=" << nw.decrement2 << " alpha=" << alpha << "\n";
        if (!accepted) {
            res.stalled = true;
            break;
        }
        if (pe.merit > 1e12 * (1.0 + std::abs(pe.objective))) {
            // unbounded centering: the feasible set recedes along the step
            res.stalled = true;
            break;
        }
    }
    res.x = std::move(x);
    return res;
}

VecR neutral_start(const Compiled& c) {
    VecR x = VecR::Zero(c.n);
    for (int k = 0; k < c.n; ++k)
        if (c.is_fixed[k]) x(k) = c.fixed_value(k);
    if (!c.gen_eqs.empty()) {
        const int nf = static_cast<int>(c.coord_of_free.size());
        const int p = static_cast<int>(c.gen_eqs.size());
        MatR A = MatR::Zero(p, nf);
        VecR b(p);
        for (int r = 0; r < p; ++r) {
            double rhs = c.gen_eqs[r].rhs - c.gen_eqs[r].constant;
            for (auto& [k, cf] : c.gen_eqs[r].terms) {
                if (c.is_fixed[k]) rhs -= cf * c.fixed_value(k);
                else A(r, c.free_of_coord[k]) += cf;
            }
            b(r) = rhs;
        }
        const VecR xf = A.completeOrthogonalDecomposition().solve(b);
        for (int f = 0; f < nf; ++f) x(c.coord_of_free[f]) = xf(f);
    }
    return x;
}

double max_violation(const Compiled& c, const VecR& x, int* which) {
    double worst = -kInf;
    int idx = -1;
    int counter = 0;
    for (const auto& r : c.ineqs) {
        const double v = row_value(r, x) - r.rhs;
        if (v > worst) { worst = v; idx = counter; }
        ++counter;
    }
    for (const auto& l : c.lmis) {
        Eigen::SelfAdjointEigenSolver<MatC> es(lmi_value(l, x), Eigen::EigenvaluesOnly);
        const double v = -es.eigenvalues().minCoeff();
        if (v > worst) { worst = v; idx = counter; }
        ++counter;
    }
    if (which) *which = idx;
    return worst;
}

// Fills duals/KKT numbers of a barrier point into the solution. The dual
// candidates are first-order corrected along the final Newton direction,
// which removes the large multiplier error of the plain mu*M^{-1} estimate
// near degenerate boundary optima.
void finalize(const Compiled& c, const ConicProblem& prob, ConicSolution& sol, double mu,
              const VecR& eq_nu, const VecR* newton_dx = nullptr,
              const CenterResult* exact = nullptr) {
    const VecR& x = sol.x;
    if (exact && exact->has_exact_duals && c.lmis.size() == 1) {
        sol.lmi_duals.assign(1, exact->exact_Z);
        sol.ineq_duals = exact->exact_ineq_duals;
        sol.eq_duals = eq_nu;
        sol.mu_final = mu;
        sol.objective = eval_objective(c, x, false).value;
        sol.kkt = check_kkt(prob, sol);
        return;
    }
    sol.ineq_duals.resize(static_cast<int>(c.ineqs.size()));
    for (std::size_t j = 0; j < c.ineqs.size(); ++j) {
        const double s = c.ineqs[j].rhs - row_value(c.ineqs[j], x);
        double lam = mu / s;
        if (newton_dx) {
            double along = 0;
            for (auto& [k, cf] : c.ineqs[j].terms) along += cf * (*newton_dx)(k);
            lam += mu * along / (s * s);
        }
        sol.ineq_duals(static_cast<int>(j)) = std::max(0.0, lam);
    }
    sol.lmi_duals.clear();
    for (const auto& l : c.lmis) {
        Eigen::LLT<MatC> llt(lmi_value(l, x));
        MatC S = llt.solve(MatC::Identity(l.dim, l.dim));
        MatC Z = mu * S;
        if (newton_dx) {
            MatC dm = MatC::Zero(l.dim, l.dim);
            for (int k : l.coords) {
                const double step = (*newton_dx)(k);
                if (step == 0.0) continue;
                for (const auto& t : l.basis.at(k)) dm(t.r, t.c) += step * t.v;
            }
            Z.noalias() -= mu * (S * dm * S);
        }
        sol.lmi_duals.push_back(std::move(Z));
    }
    sol.eq_duals = eq_nu;
    sol.mu_final = mu;
    ObjEval o = eval_objective(c, x, false);
    sol.objective = o.value;
    sol.kkt = check_kkt(prob, sol);
}

Compiled compile_full(const ConicProblem& p, bool detect_elim) {
    Compiled c = compile(p);
    if (detect_elim) detect_elimination(p, c);
    return c;
}

struct LogSink {
    std::ofstream file;
    std::ostream* stream = nullptr;
    LogSink(const SolveOptions& opts) {
        if (!opts.log_iterates) return;
        if (!opts.log_path.empty()) {
            file.open(opts.log_path, std::ios::app);
            stream = &file;
        } else {
            stream = &std::cerr;
        }
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

ConicSolution phase1_feasible(const ConicProblem& p, const SolveOptions& opts) {
    // Augmented problem: maximize -s subject to M_k(x) + s I >= 0,
    // e_j(x) - s <= rhs_j, plus -s <= 1 to keep it bounded.
    ConicProblem aug;
    auto& ai = aug.impl();
    const auto& im = p.impl();
    ai.vars = im.vars;
    ai.total_coords = im.total_coords;
    ai.lmis = im.lmis;
    ai.ineqs = im.ineqs;
    ai.eqs = im.eqs;
    const VarRef s = aug.add_scalar();
    const int s_coord = aug.coord_scalar(s);
    for (std::size_t k = 0; k < ai.lmis.size(); ++k)
        aug.lmi_add_scalar_matrix(static_cast<int>(k), s,
                                  MatC::Identity(ai.lmis[k].dim, ai.lmis[k].dim));
    for (auto& [e, rhs] : ai.ineqs) e.add(s_coord, -1.0);
    {
        LinExpr cap;
        cap.add(s_coord, -1.0);
        ai.ineqs.emplace_back(cap, 1.0);
    }
    LinExpr obj;
    obj.add(s_coord, -1.0);
    aug.obj_add_linear(obj);

    Compiled c = compile_full(aug, opts.use_elimination);
    LogSink log(opts);

    VecR x0 = neutral_start(c);
    Compiled corig = compile(p);
    {
        VecR xorig = x0.head(im.total_coords);
        x0(s_coord) = std::max(0.0, max_violation(corig, xorig, nullptr)) + 1.0;
    }

    ConicSolution sol;
    sol.x = x0;
    const double margin = opts.phase1_margin;
    double mu = opts.mu0;
    int steps = 0;
    auto early = [&](const VecR& xc) { return xc(s_coord) <= -8.0 * margin; };
    VecR eq_nu = VecR::Zero(static_cast<int>(c.gen_eqs.size()));
    while (steps < opts.max_iter) {
        CenterResult cr = center(c, aug, sol.x, mu, 0.25 * mu + 1e-14,
                                 opts.max_iter - steps, opts.use_elimination, log.stream, early);
        steps += cr.newton_steps;
        sol.x = cr.x;
        eq_nu = cr.eq_multipliers;
        if (sol.x(s_coord) <= -8.0 * margin) break;
        if (cr.malformed) break;
        if (mu * c.nu_total <= 0.5 * margin) break;
        mu *= opts.mu_factor;
    }
    sol.iterations = steps;
    const double s_star = sol.x(s_coord);
    if (s_star <= -margin) {
        sol.status = SolveStatus::optimal;
        VecR xr = sol.x.head(im.total_coords);
        sol.x = xr;
        sol.infeasibility = s_star;
        finalize(corig, p, sol, mu, VecR::Zero(static_cast<int>(corig.gen_eqs.size())));
        sol.status = SolveStatus::optimal; // finalize computed KKT for report only
    } else if (steps >= opts.max_iter) {
        sol.status = SolveStatus::iteration_cap;
        sol.infeasibility = s_star;
    } else {
        sol.status = SolveStatus::infeasible;
        sol.infeasibility = s_star;
        VecR xr = sol.x.head(im.total_coords);
        int which = -1;
        max_violation(corig, xr, &which);
        sol.most_violated = which;
        sol.x = xr;
    }
    return sol;
}

ConicSolution solve_barrier(const ConicProblem& p, const SolveOptions& opts) {
    Compiled c = compile_full(p, opts.use_elimination);
    LogSink log(opts);

    ConicSolution sol;
    int steps = 0;

    // Start point: user-supplied if strictly feasible, else phase 1. Any
    // strictly interior margin suffices for the barrier; the first centering
    // stage pulls the iterate inward.
    VecR x;
    bool have_start = false;
    if (p.impl().start) {
        x = *p.impl().start;
        bool eq_ok = true;
        for (int k = 0; k < c.n; ++k)
            if (c.is_fixed[k] && std::abs(x(k) - c.fixed_value(k)) > 1e-9) eq_ok = false;
        for (const auto& r : c.gen_eqs)
            if (std::abs(row_value(r, x) - r.rhs) > 1e-9) eq_ok = false;
        if (eq_ok && max_violation(c, x, nullptr) < -1e-12) have_start = true;
    }
    if (!have_start) {
        ConicSolution f = phase1_feasible(p, opts);
        steps += f.iterations;
        if (f.status == SolveStatus::infeasible) return f;
        if (f.status == SolveStatus::iteration_cap) {
            f.status = SolveStatus::iteration_cap;
            return f;
        }
        x = f.x;
    }

    double mu = opts.mu0;
    VecR eq_nu = VecR::Zero(static_cast<int>(c.gen_eqs.size()));
    bool malformed = false;
    bool gap_reached = false;
    double objective_now = eval_objective(c, x, false).value;
    while (true) {
        CenterResult cr = center(c, p, x, mu, 1e-2 * mu + 1e-15,
                                 std::max(1, opts.max_iter - steps), opts.use_elimination,
                                 log.stream);
        steps += cr.newton_steps;
        x = cr.x;
        if (cr.eq_multipliers.size() == eq_nu.size()) eq_nu = cr.eq_multipliers;
        if (cr.malformed) {
            malformed = true;
            break;
        }
        objective_now = eval_objective(c, x, false).value;
        sol.outer_objectives.push_back(objective_now);
        const double gap = mu * c.nu_total;
        if (gap <= 0.1 * opts.tol * (1.0 + std::abs(objective_now))) {
            gap_reached = true;
            break;
        }
        if (steps >= opts.max_iter) break;
        mu *= opts.mu_factor;
    }

    // Final polish: center tightly at the terminal barrier level so the
    // corrected dual candidates are accurate.
    bool centered = false;
    VecR final_dx = VecR::Zero(c.n);
    CenterResult fin;
    if (!malformed) {
        fin = center(c, p, x, mu, 1e-15 * (1.0 + std::abs(objective_now)),
                     std::max(1, std::min(20, 10 + opts.max_iter - steps)),
                     opts.use_elimination, log.stream);
        steps += fin.newton_steps;
        x = fin.x;
        if (fin.eq_multipliers.size() == eq_nu.size()) eq_nu = fin.eq_multipliers;
        centered = fin.centered || std::abs(fin.last_decrement2) <=
                                       1e-10 * (1.0 + std::abs(objective_now));
        // a noise-level direction would only pollute the dual correction
        if (fin.last_decrement2 > 0) final_dx = fin.exit_dx;
        if (fin.malformed) malformed = true;
    }

    sol.x = x;
    sol.iterations = steps;
    finalize(c, p, sol, mu, eq_nu, &final_dx, &fin);
    const double scale = 1.0 + std::abs(sol.objective);
    // with an exact dual certificate the stationarity number itself is the
    // centering evidence
    const bool center_ok = centered || fin.has_exact_duals;
    if (malformed) {
        sol.status = SolveStatus::malformed;
    } else if (gap_reached && center_ok && sol.kkt.gap <= opts.tol * scale * 1.001 &&
               sol.kkt.stationarity <= opts.tol * scale &&
               sol.kkt.eq_residual <= 10 * opts.tol && sol.kkt.ineq_violation <= 10 * opts.tol &&
               sol.kkt.lmi_violation <= 10 * opts.tol) {
        sol.status = SolveStatus::optimal;
    } else {
        sol.status = SolveStatus::iteration_cap;
    }
    return sol;
}

ConicSolution solve_barrier(const ConicProblem& p, double tol, int max_iter) {
    SolveOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return solve_barrier(p, o);
}

std::pair<VecR, VecR> newton_direction_pair(const ConicProblem& p, const VecR& x, double mu) {
    Compiled cd = compile_full(p, false);
    Compiled cf = compile_full(p, true);
    PointEval pe_d = eval_point(cd, x, mu);
    PointEval pe_f = eval_point(cf, x, mu);
    if (!pe_d.feasible || !pe_f.feasible)
        throw InvalidInput("newton_direction_pair: point not strictly feasible");
    NewtonWork wd = dense_newton(cd, x, mu, pe_d);
    NewtonWork wf = cf.solo              ? solo_newton(cf, p, x, mu, pe_f)
                    : cf.elim_var >= 0 ? elim_newton(cf, p, x, mu, pe_f)
                                       : dense_newton(cf, x, mu, pe_f);
    if (!wd.ok || !wf.ok) throw InvalidInput("newton_direction_pair: newton failure");
    return {wd.dx, wf.dx};
}

KktReport check_kkt(const ConicProblem& p, const ConicSolution& s) {
    Compiled c = compile(p);
    KktReport r;
    const VecR& x = s.x;

    for (int k = 0; k < c.n; ++k)
        if (c.is_fixed[k]) r.eq_residual = std::max(r.eq_residual, std::abs(x(k) - c.fixed_value(k)));
    for (const auto& row : c.gen_eqs)
        r.eq_residual = std::max(r.eq_residual, std::abs(row_value(row, x) - row.rhs));
    for (const auto& row : c.ineqs)
        r.ineq_violation = std::max(r.ineq_violation, row_value(row, x) - row.rhs);
    for (const auto& l : c.lmis) {
        Eigen::SelfAdjointEigenSolver<MatC> es(lmi_value(l, x), Eigen::EigenvaluesOnly);
        r.lmi_violation = std::max(r.lmi_violation, -es.eigenvalues().minCoeff());
    }

    // Stationarity: grad f - sum lambda_j a_j + sum adj(Z_k) - A_eq^T nu,
    // restricted to free coordinates.
    ObjEval o = eval_objective(c, x, true);
    VecR st = o.grad;
    double gap = 0;
    if (s.ineq_duals.size() == static_cast<int>(c.ineqs.size())) {
        for (std::size_t j = 0; j < c.ineqs.size(); ++j) {
            const double lam = s.ineq_duals(static_cast<int>(j));
            for (auto& [k, cf] : c.ineqs[j].terms) st(k) -= lam * cf;
            gap += lam * (c.ineqs[j].rhs - row_value(c.ineqs[j], x));
        }
    }
    if (s.lmi_duals.size() == c.lmis.size()) {
        for (std::size_t m = 0; m < c.lmis.size(); ++m) {
            const auto& l = c.lmis[m];
            const MatC& Z = s.lmi_duals[m];
            for (int k : l.coords) {
                double acc = 0;
                for (const auto& t : l.basis.at(k)) acc += (t.v * Z(t.c, t.r)).real();
                st(k) += acc;
            }
            gap += (Z.array().conjugate() * lmi_value(l, x).array()).sum().real();
        }
    }
    if (s.eq_duals.size() == static_cast<int>(c.gen_eqs.size())) {
        for (std::size_t m = 0; m < c.gen_eqs.size(); ++m)
            for (auto& [k, cf] : c.gen_eqs[m].terms) st(k) -= s.eq_duals(static_cast<int>(m)) * cf;
    }
    for (int k : c.coord_of_free) r.stationarity = std::max(r.stationarity, std::abs(st(k)));
    r.gap = gap;
    return r;
}

} // namespace irsva::conic
