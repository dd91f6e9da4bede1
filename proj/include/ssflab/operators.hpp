#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ssflab/errors.hpp"
#include "ssflab/numkernel.hpp"
#include "ssflab/rng.hpp"

namespace ssflab {

namespace detail {

// Smallest LU pivot magnitude relative to the largest entry, 0 if the
// factorization hits its singularity cutoff.  Used to decide whether a
// matrix is invertible comfortably rather than barely.
inline double min_pivot_ratio(const Matrix& a) {
    LuRaw r = lu_raw(a);
    if (r.singular) return 0.0;
    const double scale = a.max_abs();
    if (scale == 0.0) return 0.0;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.rows(); ++i) m = std::min(m, std::abs(r.lu(i, i)));
    return m / scale;
}

}  // namespace detail

// A matrix certified to have operator norm at most 1 (within 1e-10).  The
// certificate is computed once at construction; "strict" leaves an 1e-8
// margin so downstream contour choices have room.
class Contraction {
public:
    const Matrix& matrix() const { return t_; }
    double norm() const { return norm_; }
    bool strict() const { return norm_ <= 1.0 - 1e-8; }
    std::size_t dim() const { return t_.rows(); }

private:
    Contraction(Matrix t, double norm) : t_(std::move(t)), norm_(norm) {}
    friend Contraction check_contraction(const Matrix&);

    Matrix t_;
    double norm_;
};

inline Contraction check_contraction(const Matrix& t) {
    t.require_square("check_contraction");
    t.require_finite("check_contraction");
    const double nm = operator_norm(t);
    if (nm > 1.0 + 1e-10)
        fail(ErrorKind::NotContraction,
             "operator norm " + std::to_string(nm) + " exceeds 1");
    return Contraction(t, std::min(nm, 1.0));
}

// A matrix certified to have positive-semidefinite imaginary part
// (L - L*)/2i, within -1e-10.  "strict" means the smallest eigenvalue of
// that part clears 1e-8.
class MDissipative {
public:
    const Matrix& matrix() const { return l_; }
    double im_min() const { return im_min_; }
    bool strict() const { return im_min_ >= 1e-8; }
    std::size_t dim() const { return l_.rows(); }

private:
    MDissipative(Matrix l, double im_min) : l_(std::move(l)), im_min_(im_min) {}
    friend MDissipative check_dissipative(const Matrix&);

    Matrix l_;
    double im_min_;
};

inline MDissipative check_dissipative(const Matrix& l) {
    l.require_square("check_dissipative");
    l.require_finite("check_dissipative");
    Matrix im = (l - l.adjoint()) * cplx(0, -0.5);
    HermitianEigen e = hermitian_eigen(im);
    const double lo = e.values.empty() ? 0.0 : e.values.front();
    if (lo < -1e-10)
        fail(ErrorKind::NotDissipative,
             "imaginary part has eigenvalue " + std::to_string(lo));
    return MDissipative(l, lo);
}

// L = i (I - T)(I + T)^{-1}.  Fails when -1 sits in the spectrum of T to
// within 1e-10, since the image matrix is then meaningless at double
// precision.
inline MDissipative cayley_T_to_L(const Contraction& t) {
    const std::size_t n = t.dim();
    Matrix ipt = Matrix::identity(n) + t.matrix();
    if (detail::min_pivot_ratio(ipt) < 1e-10)
        fail(ErrorKind::KernelAtMinusOne,
             "I + T is singular to within 1e-10 of its scale");
    Matrix l = cplx(0, 1) * ((Matrix::identity(n) - t.matrix()) * inverse(ipt));
    return check_dissipative(l);
}

// T = (iI - L)(iI + L)^{-1}.  For a dissipative L the base point -i is at
// distance >= 1 from the spectrum, so the inverse always exists; a pivot
// failure still maps to the same error kind for uniform reporting.
inline Contraction cayley_L_to_T(const MDissipative& l) {
    const std::size_t n = l.dim();
    Matrix ipl = cplx(0, 1) * Matrix::identity(n) + l.matrix();
    if (detail::min_pivot_ratio(ipl) < 1e-12)
        fail(ErrorKind::KernelAtMinusOne, "iI + L is singular to tolerance");
    Matrix t = (cplx(0, 1) * Matrix::identity(n) - l.matrix()) * inverse(ipl);
    return check_contraction(t);
}

enum class MoebiusDir { DiskToHalfplane, HalfplaneToDisk };

// tau = i (1 - lambda) / (1 + lambda) and its inverse
// lambda = (i - tau) / (i + tau).  The unit circle goes to the real line,
// the exterior of the disk to the lower half-plane.
inline cplx moebius(cplx z, MoebiusDir dir) {
    if (dir == MoebiusDir::DiskToHalfplane) {
        if (std::abs(z + cplx(1, 0)) <= 1e-14 * (1.0 + std::abs(z)))
            fail(ErrorKind::PoleAtInput, "map has its pole at -1");
        return cplx(0, 1) * (cplx(1, 0) - z) / (cplx(1, 0) + z);
    }
    if (std::abs(z + cplx(0, 1)) <= 1e-14 * (1.0 + std::abs(z)))
        fail(ErrorKind::PoleAtInput, "map has its pole at -i");
    return (cplx(0, 1) - z) / (cplx(0, 1) + z);
}

// Boundary restriction of the disk-to-half-plane map: e^{i theta} goes to
// tan(theta/2), with the pole at theta = pi.
inline double boundary_to_line(double theta) {
    const double c = std::cos(theta / 2.0);
    if (std::abs(c) <= 1e-12)
        fail(ErrorKind::PoleAtInput, "boundary angle at the pole of the map");
    return std::sin(theta / 2.0) / c;
}

// Residual of the two-chart resolvent identity
//   (L - tau)^{-1} = -(1+lambda)/(2i) I - (1+lambda)^2/(2i) (T - lambda)^{-1}
// with L the Cayley image of T and tau the Moebius image of lambda.
inline double resolvent_identity_check(const Contraction& t, cplx lambda) {
    MDissipative l = cayley_T_to_L(t);
    const cplx tau = moebius(lambda, MoebiusDir::DiskToHalfplane);
    const std::size_t n = t.dim();
    Matrix id = Matrix::identity(n);
    Matrix lhs = inverse(l.matrix() - tau * id);
    const cplx w = (cplx(1, 0) + lambda) / cplx(0, 2);
    Matrix rhs = -w * id - (w * (cplx(1, 0) + lambda)) * inverse(t.matrix() - lambda * id);
    return operator_norm(lhs - rhs);
}

struct RotatedPair {
    cplx rotation;      // unimodular factor applied to both matrices
    Contraction first;  // rotation * T1
    Contraction second;  // rotation * T0
};

// Pick a 64th root of unity kappa, in seed-shuffled order, such that both
// I + kappa*T1 and I + kappa*T0 are invertible with LU pivots at least
// 1e-10 of scale.  Rotating a pair by a common unimodular factor leaves all
// trace statistics intact while moving -1 off both spectra.
inline RotatedPair rotate_pair(const Contraction& t1, const Contraction& t0,
                               std::uint64_t seed) {
    if (t1.dim() != t0.dim())
        fail(ErrorKind::DimensionMismatch, "rotate_pair: dimensions differ");
    const std::size_t n = t1.dim();
    const double two_pi = 6.28318530717958647692;

    std::vector<cplx> candidates(64);
    for (int k = 0; k < 64; ++k) candidates[k] = std::polar(1.0, two_pi * k / 64.0);
    CounterRng rng(seed, /*stream=*/11);
    for (std::size_t i = candidates.size() - 1; i > 0; --i)
        std::swap(candidates[i], candidates[rng.below(i + 1)]);

    Matrix id = Matrix::identity(n);
    for (const cplx& kappa : candidates) {
        if (detail::min_pivot_ratio(id + kappa * t1.matrix()) < 1e-10) continue;
        if (detail::min_pivot_ratio(id + kappa * t0.matrix()) < 1e-10) continue;
        return RotatedPair{kappa, check_contraction(kappa * t1.matrix()),
                           check_contraction(kappa * t0.matrix())};
    }
    fail(ErrorKind::ExhaustedAttempts,
         "all 64 unimodular rotation candidates leave I + kappa T near-singular");
}

struct RegularizedPair {
    Matrix replacement;     // original plus a small bump supported on the kernel
    double s1_change;       // trace norm of (replacement - original)
    std::size_t kernel_dim;
};

// Replace a contraction that annihilates part of the space by one that is
// injective: map an orthonormal kernel basis onto a co-kernel basis with
// geometrically decaying weights 2^{-1}, 2^{-2}, ...  The bump is supported
// entirely on kernel x co-kernel, so the action elsewhere is untouched and
// the trace-norm cost is at most 1.
inline RegularizedPair regularize_pair(const Contraction& t0) {
    const Matrix& a = t0.matrix();
    const std::size_t n = t0.dim();
    // Kernel detection goes through the Gram matrix, which squares singular
    // values into roundoff: a true zero resurfaces as sqrt(machine noise),
    // about 1e-8 of scale.  The cutoff sits above that resolution floor.
    const double cutoff = 3e-8 * std::max(1.0, t0.norm());

    HermitianEigen right = hermitian_eigen(a.adjoint() * a);  // kernel side
    HermitianEigen left = hermitian_eigen(a * a.adjoint());   // co-kernel side
    std::vector<std::size_t> ker, coker;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::sqrt(std::max(right.values[i], 0.0)) <= cutoff) ker.push_back(i);
        if (std::sqrt(std::max(left.values[i], 0.0)) <= cutoff) coker.push_back(i);
    }
    if (ker.empty())
        fail(ErrorKind::KernelNotPresent,
             "smallest singular value clears the kernel cutoff");
    if (ker.size() != coker.size())
        fail(ErrorKind::InvalidArgument,
             "kernel and co-kernel dimensions disagree numerically");

    Matrix bump(n, n);
    for (std::size_t j = 0; j < ker.size(); ++j) {
        const double w = std::pow(2.0, -double(j + 1));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                bump(r, c) += w * left.vectors(r, coker[j]) *
                              std::conj(right.vectors(c, ker[j]));
    }

    RegularizedPair out;
    out.replacement = a + bump;
    out.s1_change = trace_norm(bump);
    out.kernel_dim = ker.size();
    return out;
}

struct DilationResult {
    Matrix unitary;  // acts on (degree + 1) stacked copies of the base space
    int degree;
    std::size_t block_dim;
};

// Block unitary whose upper-left corner reproduces T^k for all k up to the
// requested degree, and provably not one power further.  Layout on
// (degree+1) blocks: row 0 holds T and the defect of T*, row 1 holds the
// defect of T and -T*, and rows 2..degree shift the middle blocks down.
inline DilationResult egervary_dilation(const Contraction& t, int degree) {
    if (degree < 1) fail(ErrorKind::InvalidArgument, "dilation degree must be >= 1");
    const std::size_t n = t.dim();
    const Matrix& a = t.matrix();
    Matrix id = Matrix::identity(n);
    Matrix defect = psd_sqrt(id - a.adjoint() * a);
    Matrix codefect = psd_sqrt(id - a * a.adjoint());

    const std::size_t m = std::size_t(degree + 1) * n;
    Matrix u(m, m);
    auto put = [&](std::size_t bi, std::size_t bj, const Matrix& blk, cplx s) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) u(bi * n + i, bj * n + j) = s * blk(i, j);
    };
    put(0, 0, a, cplx(1, 0));
    put(0, std::size_t(degree), codefect, cplx(1, 0));
    put(1, 0, defect, cplx(1, 0));
    put(1, std::size_t(degree), a.adjoint(), cplx(-1, 0));
    for (int j = 2; j <= degree; ++j)
        put(std::size_t(j), std::size_t(j - 1), id, cplx(1, 0));

    return DilationResult{std::move(u), degree, n};
}

struct UnitaryEigen {
    std::vector<cplx> values;  // unimodular; ordered by the real-part pass
    Matrix vectors;            // orthonormal columns with U Q = Q diag(values)
};

// Eigendecomposition of a unitary via its two Hermitian parts: diagonalize
// (U + U*)/2, then break any real-part tie by diagonalizing (U - U*)/2i
// inside the tied block.  Both parts commute with U, so the joint basis
// diagonalizes U itself.
inline UnitaryEigen unitary_eigen(const Matrix& u) {
    u.require_square("unitary_eigen");
    const std::size_t n = u.rows();
    if (operator_norm(u.adjoint() * u - Matrix::identity(n)) > 1e-8)
        fail(ErrorKind::NotUnitary, "U*U deviates from the identity beyond 1e-8");

    Matrix h1 = 0.5 * (u + u.adjoint());
    Matrix h2 = cplx(0, -0.5) * (u - u.adjoint());
    HermitianEigen e1 = hermitian_eigen(h1);
    Matrix q = e1.vectors;

    const double gap = 1e-8;
    std::size_t start = 0;
    while (start < n) {
        std::size_t stop = start + 1;
        while (stop < n && e1.values[stop] - e1.values[stop - 1] <= gap) ++stop;
        const std::size_t k = stop - start;
        if (k > 1) {
            Matrix qc(n, k);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < k; ++j) qc(i, j) = q(i, start + j);
            HermitianEigen e2 = hermitian_eigen(qc.adjoint() * (h2 * qc));
            Matrix rotated = qc * e2.vectors;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < k; ++j) q(i, start + j) = rotated(i, j);
        }
        start = stop;
    }

    UnitaryEigen out;
    out.vectors = q;
    out.values.resize(n);
    Matrix uq = u * q;
    for (std::size_t j = 0; j < n; ++j) {
        cplx v = 0;
        for (std::size_t i = 0; i < n; ++i) v += std::conj(q(i, j)) * uq(i, j);
        out.values[j] = v;
    }
    return out;
}

// Haar-ish random unitary: fill with unit-disk entries, then two passes of
// modified Gram-Schmidt over the columns.
inline Matrix random_unitary(std::size_t n, std::uint64_t seed) {
    if (n == 0) fail(ErrorKind::InvalidArgument, "random_unitary: empty dimension");
    CounterRng rng(seed, /*stream=*/7);
    Matrix q(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (int attempt = 0;; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) q(i, j) = rng.unit_disk();
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t p = 0; p < j; ++p) {
                    cplx coef = 0;
                    for (std::size_t i = 0; i < n; ++i) coef += std::conj(q(i, p)) * q(i, j);
                    for (std::size_t i = 0; i < n; ++i) q(i, j) -= coef * q(i, p);
                }
            }
            double nrm = 0;
            for (std::size_t i = 0; i < n; ++i) nrm += std::norm(q(i, j));
            nrm = std::sqrt(nrm);
            if (nrm > 1e-8) {
                for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
                break;
            }
            if (attempt > 32)
                fail(ErrorKind::ExhaustedAttempts, "random_unitary: degenerate draws");
        }
    }
    return q;
}

enum class ContractionKind { Strict, BoundaryTouching };

// Seeded contraction generator.  Strict draws are rescaled to norm 0.9
// exactly; boundary-touching draws hide a unimodular 1x1 block inside an
// otherwise strict matrix behind a random change of basis, so the norm is 1
// but the matrix has no obvious structure.
inline Contraction random_contraction(std::size_t n, ContractionKind kind,
                                      std::uint64_t seed) {
    if (n == 0) fail(ErrorKind::InvalidArgument, "random_contraction: empty dimension");
    CounterRng rng(seed, /*stream=*/3);
    if (kind == ContractionKind::Strict) {
        Matrix a(n, n);
        for (int attempt = 0;; ++attempt) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.unit_disk();
            const double nm = operator_norm(a);
            if (nm > 1e-8) {
                a *= cplx(0.9 / nm, 0);
                break;
            }
            if (attempt > 32)
                fail(ErrorKind::ExhaustedAttempts, "random_contraction: degenerate draws");
        }
        return check_contraction(a);
    }

    Matrix a(n, n);
    a(0, 0) = std::polar(1.0, rng.uniform(0.0, 6.28318530717958647692));
    if (n > 1) {
        Matrix s(n - 1, n - 1);
        for (int attempt = 0;; ++attempt) {
            for (std::size_t i = 0; i + 1 < n; ++i)
                for (std::size_t j = 0; j + 1 < n; ++j) s(i, j) = rng.unit_disk();
            const double nm = operator_norm(s);
            if (nm > 1e-8) {
                s *= cplx(0.8 / nm, 0);
                break;
            }
            if (attempt > 32)
                fail(ErrorKind::ExhaustedAttempts, "random_contraction: degenerate draws");
        }
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = 0; j + 1 < n; ++j) a(i + 1, j + 1) = s(i, j);
    }
    Matrix u = random_unitary(n, seed ^ 0x9e3779b97f4a7c15ULL);
    return check_contraction(u.adjoint() * (a * u));
}

// Seeded strictly dissipative generator: Hermitian part from a symmetrized
// draw, imaginary part a normalized Gram matrix pushed up by 0.3 I.
inline MDissipative random_strict_dissipative(std::size_t n, std::uint64_t seed) {
    if (n == 0) fail(ErrorKind::InvalidArgument, "random_strict_dissipative: empty dimension");
    CounterRng rng(seed, /*stream=*/5);
    Matrix g(n, n), b(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            g(i, j) = rng.unit_disk();
            b(i, j) = rng.unit_disk();
        }
    Matrix h = 0.5 * (g + g.adjoint());
    Matrix p = b.adjoint() * b;
    const double pn = operator_norm(p);
    if (pn > 1.0) p *= cplx(1.0 / pn, 0);
    p += 0.3 * Matrix::identity(n);
    return check_dissipative(h + cplx(0, 1) * p);
}

}  // namespace ssflab
