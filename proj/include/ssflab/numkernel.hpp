#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ssflab/errors.hpp"

namespace ssflab {

using cplx = std::complex<double>;

// Dense row-major complex matrix.  Sized for desk-scale experiments
// (dimensions in the tens), so everything is the textbook O(n^3) algorithm
// with no blocking.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, cplx(0, 0)) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(const std::vector<cplx>& d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<cplx>> rows) {
        Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != m.cols_)
                fail(ErrorKind::DimensionMismatch, "ragged initializer rows");
            std::size_t j = 0;
            for (cplx v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    Matrix adjoint() const {
        Matrix m(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
        return m;
    }

    cplx trace() const {
        require_square("trace");
        cplx t = 0;
        for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius_norm() const {
        double s = 0;
        for (const cplx& v : a_) s += std::norm(v);
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0;
        for (const cplx& v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const {
        for (const cplx& v : a_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o, "operator+=");
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        require_same_shape(o, "operator-=");
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }

    Matrix& operator*=(cplx s) {
        for (cplx& v : a_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator-(const Matrix& a) {
        Matrix m = a;
        return m *= cplx(-1, 0);
    }
    friend Matrix operator*(Matrix a, cplx s) { return a *= s; }
    friend Matrix operator*(cplx s, Matrix a) { return a *= s; }
    friend Matrix operator*(Matrix a, double s) { return a *= cplx(s, 0); }
    friend Matrix operator*(double s, Matrix a) { return a *= cplx(s, 0); }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_)
            fail(ErrorKind::DimensionMismatch,
                 "multiply " + shape_str(a) + " by " + shape_str(b));
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                cplx aik = a(i, k);
                if (aik == cplx(0, 0)) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    void require_finite(const char* where) const {
        if (!all_finite())
            fail(ErrorKind::InvalidArgument, std::string(where) + ": non-finite entry");
    }

    void require_square(const char* where) const {
        if (!is_square())
            fail(ErrorKind::DimensionMismatch, std::string(where) + ": matrix not square");
    }

private:
    void require_same_shape(const Matrix& o, const char* where) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            fail(ErrorKind::DimensionMismatch,
                 std::string(where) + ": " + shape_str(*this) + " vs " + shape_str(o));
    }

    static std::string shape_str(const Matrix& m) {
        return std::to_string(m.rows_) + "x" + std::to_string(m.cols_);
    }

    std::size_t rows_, cols_;
    std::vector<cplx> a_;
};

// P*A = L*U with partial pivoting.  pivot[i] is the source row of row i of
// P*A; sign is the permutation parity.
struct LuFactorization {
    Matrix lower;
    Matrix upper;
    std::vector<std::size_t> pivot;
    int sign = 1;
};

namespace detail {

struct LuRaw {
    Matrix lu;                        // L below the diagonal (unit), U on and above
    std::vector<std::size_t> pivot;
    int sign = 1;
    bool singular = false;
};

// Row-equilibrated partial pivoting: the pivot row maximizes |a_ip| relative
// to its row's max-abs, and the singularity cutoff is relative to the
// largest row scale of the input.
inline LuRaw lu_raw(const Matrix& a) {
    a.require_square("lu_factor");
    a.require_finite("lu_factor");
    const std::size_t n = a.rows();
    LuRaw r;
    r.lu = a;
    r.pivot.resize(n);
    std::iota(r.pivot.begin(), r.pivot.end(), std::size_t{0});

    std::vector<double> scale(n, 0.0);
    double max_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) scale[i] = std::max(scale[i], std::abs(a(i, j)));
        max_scale = std::max(max_scale, scale[i]);
    }
    const double cutoff = 1e-14 * max_scale;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = k;
        double best_mag = -1.0;
        for (std::size_t i = k; i < n; ++i) {
            double s = scale[r.pivot[i]] > 0 ? scale[r.pivot[i]] : 1.0;
            double mag = std::abs(r.lu(i, k)) / s;
            if (mag > best_mag) {
                best_mag = mag;
                best = i;
            }
        }
        if (best != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(r.lu(k, j), r.lu(best, j));
            std::swap(r.pivot[k], r.pivot[best]);
            r.sign = -r.sign;
        }
        const cplx pivot = r.lu(k, k);
        if (std::abs(pivot) <= cutoff || max_scale == 0.0) {
            r.singular = true;
            return r;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            cplx m = r.lu(i, k) / pivot;
            r.lu(i, k) = m;
            if (m == cplx(0, 0)) continue;
            for (std::size_t j = k + 1; j < n; ++j) r.lu(i, j) -= m * r.lu(k, j);
        }
    }
    return r;
}

}  // namespace detail

inline LuFactorization lu_factor(const Matrix& a) {
    detail::LuRaw r = detail::lu_raw(a);
    if (r.singular)
        fail(ErrorKind::SingularToTolerance, "pivot below 1e-14 of max row scale");
    const std::size_t n = a.rows();
    LuFactorization f;
    f.lower = Matrix::identity(n);
    f.upper = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (j < i)
                f.lower(i, j) = r.lu(i, j);
            else
                f.upper(i, j) = r.lu(i, j);
        }
    f.pivot = r.pivot;
    f.sign = r.sign;
    return f;
}

// Determinant via LU; a factorization that hits the singularity cutoff maps
// to an exact 0 rather than an error, since downstream callers treat
// singularity as a legitimate value.
inline cplx det(const Matrix& a) {
    detail::LuRaw r = detail::lu_raw(a);
    if (r.singular) return cplx(0, 0);
    cplx d = static_cast<double>(r.sign);
    for (std::size_t i = 0; i < a.rows(); ++i) d *= r.lu(i, i);
    return d;
}

// Solve A X = B by forward/back substitution on the LU factors.
inline Matrix solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        fail(ErrorKind::DimensionMismatch, "solve: row counts differ");
    b.require_finite("solve");
    detail::LuRaw r = detail::lu_raw(a);
    if (r.singular)
        fail(ErrorKind::SingularToTolerance, "solve: matrix singular to tolerance");
    const std::size_t n = a.rows();
    const std::size_t k = b.cols();
    Matrix x(n, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) x(i, j) = b(r.pivot[i], j);
    // L y = P b
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < i; ++p) {
            cplx m = r.lu(i, p);
            if (m == cplx(0, 0)) continue;
            for (std::size_t j = 0; j < k; ++j) x(i, j) -= m * x(p, j);
        }
    // U x = y
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t p = ii + 1; p < n; ++p) {
            cplx m = r.lu(ii, p);
            if (m == cplx(0, 0)) continue;
            for (std::size_t j = 0; j < k; ++j) x(ii, j) -= m * x(p, j);
        }
        cplx piv = r.lu(ii, ii);
        for (std::size_t j = 0; j < k; ++j) x(ii, j) /= piv;
    }
    return x;
}

inline Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

struct HermitianEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // columns, orthonormal; A Q = Q diag(values)
};

// Cyclic Jacobi with complex rotations.  Input is symmetrized to
// (A + A*)/2; asymmetry beyond 1e-12 * ||A|| is an error rather than
// something to silently average away.
inline HermitianEigen hermitian_eigen(const Matrix& a_in) {
    a_in.require_square("hermitian_eigen");
    a_in.require_finite("hermitian_eigen");
    const std::size_t n = a_in.rows();
    const double scale = a_in.frobenius_norm();
    if ((a_in - a_in.adjoint()).frobenius_norm() > 1e-12 * std::max(scale, 1e-300))
        fail(ErrorKind::NotHermitian, "asymmetry exceeds 1e-12 of norm");

    Matrix a = 0.5 * (a_in + a_in.adjoint());
    Matrix q = Matrix::identity(n);

    auto off_norm = [&]() {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += std::norm(a(i, j));
        return std::sqrt(s);
    };

    const double target = 1e-13 * std::max(scale, 1e-300);
    for (int sweep = 0; sweep < 100 && off_norm() > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t qq = p + 1; qq < n; ++qq) {
                const cplx apq = a(p, qq);
                const double b = std::abs(apq);
                if (b <= 1e-300) continue;
                const cplx u = apq / b;  // phase of the off-diagonal entry
                const double app = a(p, p).real();
                const double aqq = a(qq, qq).real();
                const double tau = (aqq - app) / (2.0 * b);
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // Columns: col_p' = c col_p - s conj(u) col_q ; col_q' = s u col_p + c col_q
                for (std::size_t i = 0; i < n; ++i) {
                    cplx aip = a(i, p), aiq = a(i, qq);
                    a(i, p) = c * aip - s * std::conj(u) * aiq;
                    a(i, qq) = s * u * aip + c * aiq;
                    cplx qip = q(i, p), qiq = q(i, qq);
                    q(i, p) = c * qip - s * std::conj(u) * qiq;
                    q(i, qq) = s * u * qip + c * qiq;
                }
                // Rows (J* from the left).
                for (std::size_t j = 0; j < n; ++j) {
                    cplx apj = a(p, j), aqj = a(qq, j);
                    a(p, j) = c * apj - s * u * aqj;
                    a(qq, j) = s * std::conj(u) * apj + c * aqj;
                }
            }
        }
    }
    if (off_norm() > target)
        fail(ErrorKind::InvalidArgument, "jacobi sweep limit reached without convergence");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    HermitianEigen e;
    e.values.resize(n);
    e.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        e.values[j] = a(order[j], order[j]).real();
        for (std::size_t i = 0; i < n; ++i) e.vectors(i, j) = q(i, order[j]);
    }
    return e;
}

// Square root of a PSD Hermitian matrix.  Eigenvalues in [-1e-10, 0) * scale
// are treated as roundoff and clamped; below -1e-8 * scale is NotPSD.
inline Matrix psd_sqrt(const Matrix& a) {
    HermitianEigen e = hermitian_eigen(a);
    const std::size_t n = a.rows();
    double top = 0.0;
    for (double v : e.values) top = std::max(top, std::abs(v));
    const double s = std::max(1.0, top);
    std::vector<cplx> roots(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = e.values[i];
        if (v < -1e-8 * s)
            fail(ErrorKind::NotPSD, "eigenvalue " + std::to_string(v) + " below tolerance");
        roots[i] = std::sqrt(std::max(v, 0.0));
    }
    return e.vectors * Matrix::diagonal(roots) * e.vectors.adjoint();
}

inline double operator_norm(const Matrix& a) {
    a.require_finite("operator_norm");
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    if (a.max_abs() == 0.0) return 0.0;
    Matrix h = a.adjoint() * a;
    HermitianEigen e = hermitian_eigen(h);
    double top = e.values.empty() ? 0.0 : e.values.back();
    return std::sqrt(std::max(top, 0.0));
}

// Trace norm (sum of singular values) via the spectrum of A*A.
inline double trace_norm(const Matrix& a) {
    a.require_finite("trace_norm");
    if (a.rows() == 0 || a.cols() == 0 || a.max_abs() == 0.0) return 0.0;
    Matrix h = a.adjoint() * a;
    HermitianEigen e = hermitian_eigen(h);
    double s = 0;
    for (double v : e.values) s += std::sqrt(std::max(v, 0.0));
    return s;
}

}  // namespace ssflab
