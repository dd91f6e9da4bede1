#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "ssflab/errors.hpp"
#include "ssflab/funcalc.hpp"
#include "ssflab/numkernel.hpp"
#include "ssflab/operators.hpp"

namespace ssflab {

// trace(A B) without forming the product.
inline cplx trace_product(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows() || a.rows() != b.cols())
        fail(ErrorKind::DimensionMismatch, "trace_product: shapes do not close a cycle");
    cplx s = 0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * b(j, i);
    return s;
}

// First divided difference f[zeta, tau].  Away from the diagonal this is the
// plain quotient; within 1e-6 of it (relative to the point sizes) the
// quotient cancels catastrophically, so the polynomial part switches to the
// exact monomial double sum and each simple pole to its closed form
// -res / ((zeta - p)(tau - p)).
inline cplx divided_difference_eval(const AnalyticFunction& f, cplx zeta, cplx tau) {
    if (f.kind() == AnalyticFunction::Kind::Sampled)
        fail(ErrorKind::InvalidArgument, "divided difference needs a closed form");
    for (const cplx& p : f.poles()) {
        if (std::abs(zeta - p) <= 1e-12 * (1.0 + std::abs(p)) ||
            std::abs(tau - p) <= 1e-12 * (1.0 + std::abs(p)))
            fail(ErrorKind::PoleAtInput, "divided difference evaluated at a pole");
    }
    const double sep = std::abs(zeta - tau);
    if (sep > 1e-6 * (1.0 + std::abs(zeta) + std::abs(tau)))
        return (f(zeta) - f(tau)) / (zeta - tau);

    const auto& a = f.coeffs();
    cplx total = 0;
    if (a.size() > 1) {
        const std::size_t d = a.size() - 1;
        std::vector<cplx> zp(d), tp(d);
        zp[0] = tp[0] = 1;
        for (std::size_t j = 1; j < d; ++j) {
            zp[j] = zp[j - 1] * zeta;
            tp[j] = tp[j - 1] * tau;
        }
        for (std::size_t k = 1; k <= d; ++k) {
            if (a[k] == cplx(0, 0)) continue;
            cplx inner = 0;
            for (std::size_t j = 0; j < k; ++j) inner += zp[j] * tp[k - 1 - j];
            total += a[k] * inner;
        }
    }
    for (std::size_t i = 0; i < f.poles().size(); ++i)
        total -= f.residues()[i] / ((zeta - f.poles()[i]) * (tau - f.poles()[i]));
    return total;
}

// Separated-variable form of the divided difference of a polynomial of
// degree d:  f[z, w] = sum_{j<d} phi_j(z) psi_j(w)  with  phi_j(z) = z^j
// and  psi_j(w) = sum_{k>j} a_k w^{k-1-j}.
struct HaagerupRep {
    std::vector<AnalyticFunction> left;   // phi_j
    std::vector<AnalyticFunction> right;  // psi_j
};

inline HaagerupRep haagerup_rep_poly(const AnalyticFunction& f) {
    if (f.kind() != AnalyticFunction::Kind::Poly)
        fail(ErrorKind::InvalidArgument, "separated factorization requires a polynomial");
    const auto& a = f.coeffs();
    const std::size_t d = f.degree();
    HaagerupRep rep;
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<cplx> mono(j + 1, cplx(0, 0));
        mono[j] = 1;
        rep.left.push_back(AnalyticFunction::polynomial(std::move(mono)));
        std::vector<cplx> tail(a.begin() + std::ptrdiff_t(j) + 1, a.end());
        rep.right.push_back(AnalyticFunction::polynomial(std::move(tail)));
    }
    return rep;
}

// Double-operator-integral transformer applied to an increment K:
//   sum_j phi_j(T1) K psi_j(T0)  +  sum_poles -res (T1 - p)^{-1} K (T0 - p)^{-1}.
// Evaluation order is fixed (powers of T1 on the left, psi factors built by
// downward recursion) so results are bit-reproducible.
inline Matrix doi_apply(const AnalyticFunction& f, const Contraction& t1,
                        const Contraction& t0, const Matrix& k) {
    if (f.kind() == AnalyticFunction::Kind::Sampled)
        fail(ErrorKind::InvalidArgument, "doi_apply needs a closed form");
    if (t1.dim() != t0.dim() || k.rows() != t1.dim() || k.cols() != t0.dim())
        fail(ErrorKind::DimensionMismatch, "doi_apply: operand shapes disagree");
    k.require_finite("doi_apply");

    const std::size_t n = t1.dim();
    Matrix acc(n, n);
    const auto& a = f.coeffs();
    const std::size_t d = a.size() - 1;
    if (d >= 1) {
        std::vector<Matrix> psi(d);
        psi[d - 1] = a[d] * Matrix::identity(n);
        for (std::size_t j = d - 1; j-- > 0;)
            psi[j] = a[j + 1] * Matrix::identity(n) + t0.matrix() * psi[j + 1];
        Matrix power = Matrix::identity(n);
        for (std::size_t j = 0; j < d; ++j) {
            if (j > 0) power = power * t1.matrix();
            acc += power * (k * psi[j]);
        }
    }
    for (std::size_t i = 0; i < f.poles().size(); ++i) {
        const cplx p = f.poles()[i];
        Matrix r1 = inverse(t1.matrix() - p * Matrix::identity(n));
        Matrix r0 = inverse(t0.matrix() - p * Matrix::identity(n));
        acc -= f.residues()[i] * (r1 * (k * r0));
    }
    return acc;
}

// Residual of the increment identity
//   f(T1) - f(T0) = transformer applied to (T1 - T0).
inline double verify_increment(const AnalyticFunction& f, const Contraction& t1,
                               const Contraction& t0) {
    Matrix lhs = direct_eval_matrix(f, t1.matrix()) - direct_eval_matrix(f, t0.matrix());
    Matrix rhs = doi_apply(f, t1, t0, t1.matrix() - t0.matrix());
    return operator_norm(lhs - rhs);
}

// Residual of the diagonal trace identity
//   trace(transformer at (T, T) applied to K) = trace(K f'(T)),
// with the right side assembled termwise to avoid forming f'(T).
inline double doi_trace_check(const AnalyticFunction& f, const Contraction& t,
                              const Matrix& k) {
    const cplx lhs = doi_apply(f, t, t, k).trace();
    const std::size_t n = t.dim();
    const auto& a = f.coeffs();
    cplx rhs = 0;
    Matrix power = Matrix::identity(n);
    for (std::size_t m = 1; m < a.size(); ++m) {
        if (m > 1) power = power * t.matrix();
        if (a[m] == cplx(0, 0)) continue;
        rhs += a[m] * double(m) * trace_product(k, power);
    }
    for (std::size_t i = 0; i < f.poles().size(); ++i) {
        Matrix r = inverse(t.matrix() - f.poles()[i] * Matrix::identity(n));
        rhs -= f.residues()[i] * trace_product(k, r * r);
    }
    return std::abs(lhs - rhs);
}

// Central difference of t -> f(T0 + t * direction) at t = 0.  Steps below
// 1e-7 are refused: the subtraction noise would exceed the truncation gain.
inline Matrix path_derivative(const AnalyticFunction& f, const Contraction& t0,
                              const Matrix& direction, double h) {
    if (!(h > 0) || !std::isfinite(h))
        fail(ErrorKind::InvalidArgument, "path_derivative: step must be positive");
    if (h < 1e-7)
        fail(ErrorKind::StepTooSmall, "step below 1e-7 cannot beat roundoff");
    if (direction.rows() != t0.dim() || direction.cols() != t0.dim())
        fail(ErrorKind::DimensionMismatch, "path_derivative: direction shape");
    Matrix plus = direct_eval_matrix(f, t0.matrix() + h * direction);
    Matrix minus = direct_eval_matrix(f, t0.matrix() - h * direction);
    return (plus - minus) * cplx(1.0 / (2.0 * h), 0);
}

struct PathDerivativeOrder {
    double error_h;     // central-difference error at step h
    double error_half;  // error at step h/2
    double order;       // observed convergence order, log2 of the ratio
};

// Convergence certificate: compare the central difference at h and h/2
// against the diagonal transformer value; a second-order scheme halves the
// step and quarters the error.
inline PathDerivativeOrder path_derivative_order(const AnalyticFunction& f,
                                                 const Contraction& t0,
                                                 const Matrix& direction, double h) {
    Matrix exact = doi_apply(f, t0, t0, direction);
    const double e1 = operator_norm(path_derivative(f, t0, direction, h) - exact);
    const double e2 = operator_norm(path_derivative(f, t0, direction, h / 2.0) - exact);
    PathDerivativeOrder out{e1, e2, 0.0};
    if (e2 > 1e-300) out.order = std::log2(e1 / e2);
    return out;
}

// Worst-case increment-to-increment ratio certified by the coefficients:
// telescoping powers of contractions give sum k |a_k|, and each pole term
// |res| / (|p| - 1)^2 via the Neumann bound on the resolvents.
inline double lipschitz_bound(const AnalyticFunction& f) {
    if (f.kind() == AnalyticFunction::Kind::Sampled)
        fail(ErrorKind::InvalidArgument, "lipschitz_bound needs a closed form");
    double b = 0;
    const auto& a = f.coeffs();
    for (std::size_t k = 1; k < a.size(); ++k) b += double(k) * std::abs(a[k]);
    for (std::size_t i = 0; i < f.poles().size(); ++i) {
        const double gap = std::abs(f.poles()[i]) - 1.0;
        b += std::abs(f.residues()[i]) / (gap * gap);
    }
    return b;
}

inline double lipschitz_ratio(const AnalyticFunction& f, const Contraction& t1,
                              const Contraction& t0) {
    Matrix diff = t1.matrix() - t0.matrix();
    const double dn = operator_norm(diff);
    if (dn <= 1e-14)
        fail(ErrorKind::InvalidArgument, "operators coincide to working precision");
    Matrix inc = direct_eval_matrix(f, t1.matrix()) - direct_eval_matrix(f, t0.matrix());
    return operator_norm(inc) / dn;
}

struct MomentMeasure {
    std::vector<cplx> moments;  // trace(K T^m), m = 0, 1, ...
    double s1_bound;            // trace norm of K, which dominates |moments[m]|
};

inline MomentMeasure moment_measure(const Contraction& t, const Matrix& k,
                                    std::size_t count) {
    if (k.rows() != t.dim() || k.cols() != t.dim())
        fail(ErrorKind::DimensionMismatch, "moment_measure: shapes disagree");
    MomentMeasure mm;
    mm.s1_bound = trace_norm(k);
    mm.moments.reserve(count);
    Matrix power = Matrix::identity(t.dim());
    for (std::size_t m = 0; m < count; ++m) {
        if (m > 0) power = power * t.matrix();
        mm.moments.push_back(trace_product(k, power));
    }
    return mm;
}

struct TransformerBound {
    double row;  // operator norm of sum_j phi_j(T1) phi_j(T1)*
    double col;  // operator norm of sum_j psi_j(T0)* psi_j(T0)
    double bound() const { return std::sqrt(row * col); }
};

// Row-column certificate: stacking the phi factors into a block row and the
// psi factors into a block column shows the transformer norm is at most
// sqrt(row * col) times the increment norm, for any T1, T0.
inline TransformerBound transformer_bound(const AnalyticFunction& f,
                                          const Contraction& t1,
                                          const Contraction& t0) {
    if (f.kind() != AnalyticFunction::Kind::Poly)
        fail(ErrorKind::InvalidArgument, "transformer_bound requires a polynomial");
    HaagerupRep rep = haagerup_rep_poly(f);
    const std::size_t n = t1.dim();
    Matrix row(n, n), col(n, n);
    for (std::size_t j = 0; j < rep.left.size(); ++j) {
        Matrix a = poly_eval_matrix(rep.left[j], t1.matrix());
        Matrix b = poly_eval_matrix(rep.right[j], t0.matrix());
        row += a * a.adjoint();
        col += b.adjoint() * b;
    }
    return TransformerBound{operator_norm(row), operator_norm(col)};
}

}  // namespace ssflab
