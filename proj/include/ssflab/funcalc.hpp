#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "ssflab/errors.hpp"
#include "ssflab/numkernel.hpp"

namespace ssflab {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Boundary grids and Fourier series on the circle
// ---------------------------------------------------------------------------

// Uniform samples on the circle of the given radius; theta_k = 2 pi k / N.
struct BoundaryGrid {
    std::size_t size = 0;
    double radius = 1.0;
    std::vector<cplx> values;

    BoundaryGrid(std::size_t n, double r) : size(n), radius(r), values(n, cplx(0, 0)) {
        if (n < 16 || (n & (n - 1)) != 0)
            fail(ErrorKind::InvalidArgument,
                 "grid size must be a power of two >= 16, got " + std::to_string(n));
        if (!(r >= 1.0))
            fail(ErrorKind::InvalidArgument, "grid radius must be >= 1");
    }

    double theta(std::size_t k) const { return 2.0 * kPi * double(k) / double(size); }
    cplx node(std::size_t k) const { return std::polar(radius, theta(k)); }
};

// Coefficients in FFT natural order; frequencies m in [-N/2, N/2).
struct FourierSeries {
    std::size_t grid_size = 0;
    std::vector<cplx> coeff;

    long min_freq() const { return -long(grid_size) / 2; }
    long max_freq() const { return long(grid_size) / 2 - 1; }

    cplx at(long m) const {
        if (m < min_freq() || m > max_freq()) return cplx(0, 0);
        return coeff[m >= 0 ? std::size_t(m) : std::size_t(m + long(grid_size))];
    }

    cplx& ref(long m) {
        return coeff[m >= 0 ? std::size_t(m) : std::size_t(m + long(grid_size))];
    }
};

namespace detail {

// Radix-2 iterative FFT.  Twiddles come from std::polar per butterfly level
// index rather than a running product, trading a few trig calls for
// uniformly small roundoff; grids here never exceed a few thousand points.
inline void fft_inplace(std::vector<cplx>& v, bool inverse) {
    const std::size_t n = v.size();
    if (n == 0 || (n & (n - 1)) != 0)
        fail(ErrorKind::InvalidArgument, "fft length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
    const double dir = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double step = dir * 2.0 * kPi / double(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx w = std::polar(1.0, step * double(k));
                cplx u = v[i + k];
                cplx t = w * v[i + k + len / 2];
                v[i + k] = u + t;
                v[i + k + len / 2] = u - t;
            }
        }
    }
}

}  // namespace detail

// g_hat(m) = (1/N) sum_k g(theta_k) e^{-i m theta_k}.
inline FourierSeries fourier_transform_grid(const BoundaryGrid& g) {
    FourierSeries fs;
    fs.grid_size = g.size;
    fs.coeff = g.values;
    detail::fft_inplace(fs.coeff, false);
    for (cplx& c : fs.coeff) c /= double(g.size);
    return fs;
}

// g(theta_k) = sum_m g_hat(m) e^{i m theta_k}; exact inverse of the forward
// transform up to roundoff.
inline BoundaryGrid inverse_fourier(const FourierSeries& fs, double radius) {
    BoundaryGrid g(fs.grid_size, radius);
    g.values = fs.coeff;
    detail::fft_inplace(g.values, true);
    return g;
}

enum class RieszPart { Plus, Minus };  // Plus keeps m >= 0, Minus keeps m < 0

inline FourierSeries riesz_project(const FourierSeries& fs, RieszPart part) {
    FourierSeries out = fs;
    for (long m = out.min_freq(); m <= out.max_freq(); ++m) {
        bool keep = (part == RieszPart::Plus) ? (m >= 0) : (m < 0);
        if (!keep) out.ref(m) = cplx(0, 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Analytic functions on a neighborhood of the closed unit disk
// ---------------------------------------------------------------------------

// Three flavors: polynomial, rational with simple poles off the closed disk,
// and an opaque sampled callable (no derivative, no serialization).
class AnalyticFunction {
public:
    enum class Kind { Poly, Rational, Sampled };

    static AnalyticFunction polynomial(std::vector<cplx> coeffs) {
        while (coeffs.size() > 1 && coeffs.back() == cplx(0, 0)) coeffs.pop_back();
        if (coeffs.empty()) coeffs.push_back(cplx(0, 0));
        AnalyticFunction f;
        f.kind_ = Kind::Poly;
        f.coeffs_ = std::move(coeffs);
        return f;
    }

    static AnalyticFunction rational(std::vector<cplx> poles, std::vector<cplx> residues,
                                     std::vector<cplx> poly) {
        if (poles.size() != residues.size())
            fail(ErrorKind::InvalidArgument, "rational: pole/residue count mismatch");
        for (const cplx& p : poles)
            if (std::abs(p) < 1.0 + 1e-6)
                fail(ErrorKind::InvalidArgument,
                     "rational: pole within 1e-6 of the closed unit disk");
        AnalyticFunction f = polynomial(std::move(poly));
        f.kind_ = Kind::Rational;
        f.poles_ = std::move(poles);
        f.residues_ = std::move(residues);
        return f;
    }

    static AnalyticFunction sampled(std::function<cplx(cplx)> fn) {
        AnalyticFunction f;
        f.kind_ = Kind::Sampled;
        f.fn_ = std::move(fn);
        return f;
    }

    Kind kind() const { return kind_; }
    std::size_t degree() const { return coeffs_.empty() ? 0 : coeffs_.size() - 1; }
    const std::vector<cplx>& coeffs() const { return coeffs_; }
    const std::vector<cplx>& poles() const { return poles_; }
    const std::vector<cplx>& residues() const { return residues_; }

    cplx operator()(cplx z) const {
        if (kind_ == Kind::Sampled) return fn_(z);
        cplx acc = 0;
        for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * z + coeffs_[k];
        for (std::size_t i = 0; i < poles_.size(); ++i) acc += residues_[i] / (z - poles_[i]);
        return acc;
    }

    // Closed-form derivative.  Rational derivatives have double poles, which
    // the simple-pole representation cannot carry, so they come back as an
    // exact pointwise evaluator.
    AnalyticFunction derivative() const {
        if (kind_ == Kind::Sampled)
            fail(ErrorKind::InvalidArgument, "derivative of a sampled function");
        std::vector<cplx> dc;
        for (std::size_t k = 1; k < coeffs_.size(); ++k) dc.push_back(double(k) * coeffs_[k]);
        if (kind_ == Kind::Poly) return polynomial(std::move(dc));
        AnalyticFunction dp = polynomial(std::move(dc));
        std::vector<cplx> poles = poles_;
        std::vector<cplx> residues = residues_;
        return sampled([dp, poles, residues](cplx z) {
            cplx acc = dp(z);
            for (std::size_t i = 0; i < poles.size(); ++i) {
                cplx d = z - poles[i];
                acc -= residues[i] / (d * d);
            }
            return acc;
        });
    }

    // Sum of |a_k| over the polynomial part plus |residues|; the natural
    // scale for trace-formula tolerances.
    double coeff_abs_sum() const {
        double s = 0;
        for (const cplx& a : coeffs_) s += std::abs(a);
        for (const cplx& r : residues_) s += std::abs(r);
        return s;
    }

    double sup_on_circle(double r, std::size_t grid_n) const {
        double m = 0;
        for (std::size_t k = 0; k < grid_n; ++k) {
            double th = 2.0 * kPi * double(k) / double(grid_n);
            m = std::max(m, std::abs((*this)(std::polar(r, th))));
        }
        return m;
    }

private:
    Kind kind_ = Kind::Poly;
    std::vector<cplx> coeffs_{cplx(0, 0)};
    std::vector<cplx> poles_;
    std::vector<cplx> residues_;
    std::function<cplx(cplx)> fn_;
};

// Horner evaluation of the polynomial part on a matrix argument.
inline Matrix poly_eval_matrix(const AnalyticFunction& f, const Matrix& t) {
    t.require_square("poly_eval_matrix");
    if (f.kind() == AnalyticFunction::Kind::Sampled)
        fail(ErrorKind::InvalidArgument, "poly_eval_matrix needs coefficients");
    const std::size_t n = t.rows();
    const auto& c = f.coeffs();
    Matrix acc = c.back() * Matrix::identity(n);
    for (std::size_t k = c.size() - 1; k-- > 0;) {
        acc = acc * t;
        for (std::size_t i = 0; i < n; ++i) acc(i, i) += c[k];
    }
    return acc;
}

// Closed-form f(T) for polynomial and rational kinds: Horner plus resolvent
// terms.  This is the independent route against which the contour calculus
// is checked.
inline Matrix direct_eval_matrix(const AnalyticFunction& f, const Matrix& t) {
    if (f.kind() == AnalyticFunction::Kind::Sampled)
        fail(ErrorKind::InvalidArgument, "direct_eval_matrix needs a closed form");
    Matrix acc = poly_eval_matrix(AnalyticFunction::polynomial(f.coeffs()), t);
    for (std::size_t i = 0; i < f.poles().size(); ++i) {
        Matrix shifted = t - f.poles()[i] * Matrix::identity(t.rows());
        acc += f.residues()[i] * inverse(shifted);
    }
    return acc;
}

inline double default_contour_radius(const Matrix& t) {
    double norm = operator_norm(t);
    return 1.0 + std::max(0.1, (1.0 - norm) / 2.0);
}

// f(T) = (2 pi i)^-1 \oint f(l) (l - T)^-1 dl over |l| = r, trapezoid with N
// nodes.  The pre-checks keep the contour strictly between the spectrum and
// any poles of f.
inline Matrix cauchy_funcalc(const AnalyticFunction& f, const Matrix& t, double r = 0.0,
                             std::size_t n_nodes = 256) {
    t.require_square("cauchy_funcalc");
    if (r == 0.0) r = default_contour_radius(t);
    double norm = operator_norm(t);
    if (r <= norm + 1e-6)
        fail(ErrorKind::ContourTooTight,
             "contour radius " + std::to_string(r) + " vs operator norm " + std::to_string(norm));
    for (const cplx& p : f.poles())
        if (std::abs(p) <= r + 1e-9)
            fail(ErrorKind::ContourTooTight, "pole on or inside the contour");

    BoundaryGrid contour(n_nodes, r);
    const std::size_t n = t.rows();
    Matrix acc(n, n);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        cplx l = contour.node(k);
        Matrix res = solve(l * Matrix::identity(n) - t, Matrix::identity(n));
        acc += (f(l) * l) * res;
    }
    return acc * (1.0 / double(n_nodes));
}

// Von Neumann witness: ||f(T)|| minus the boundary sup of |f|; for a
// contraction this should never be meaningfully positive.
inline double von_neumann_gap(const AnalyticFunction& f, const Matrix& t,
                              std::size_t grid_n = 4096) {
    Matrix ft = cauchy_funcalc(f, t);
    return operator_norm(ft) - f.sup_on_circle(1.0, grid_n);
}

// ---------------------------------------------------------------------------
// Real-line grids and half-plane Poisson integrals
// ---------------------------------------------------------------------------

struct RealGrid {
    std::vector<double> nodes;    // strictly ascending
    std::vector<double> weights;  // quadrature weights; empty means plain trapezoid
};

// Symmetric log-spaced grid: +-10^u with u uniform between log10(t_min) and
// log10(t_max).  The weights realize the trapezoid rule in the u coordinate
// (dt = |t| ln10 du), which is spectrally accurate for integrands analytic
// in u -- every kernel used here qualifies -- so only the truncation tails
// and the tiny central panel across 0 contribute error.
inline RealGrid make_symmetric_log_grid(double t_min, double t_max, std::size_t per_side) {
    if (!(0.0 < t_min && t_min < t_max) || per_side < 2)
        fail(ErrorKind::InvalidArgument, "log grid needs 0 < t_min < t_max and >= 2 points");
    const double ln10 = std::log(10.0);
    const double u0 = std::log10(t_min);
    const double u1 = std::log10(t_max);
    const double du = (u1 - u0) / double(per_side - 1);
    RealGrid g;
    g.nodes.resize(2 * per_side);
    g.weights.resize(2 * per_side);
    for (std::size_t j = 0; j < per_side; ++j) {
        double u = u0 + du * double(j);
        double t = std::pow(10.0, u);
        double w = du * (j == 0 || j + 1 == per_side ? 0.5 : 1.0) * ln10 * t;
        g.nodes[per_side + j] = t;
        g.weights[per_side + j] = w;
        g.nodes[per_side - 1 - j] = -t;
        g.weights[per_side - 1 - j] = w;
    }
    // Linear panel across the origin between -t_min and +t_min.
    g.weights[per_side - 1] += t_min;
    g.weights[per_side] += t_min;
    return g;
}

template <typename V>
inline V trapezoid(const RealGrid& g, const std::vector<V>& values) {
    if (values.size() != g.nodes.size())
        fail(ErrorKind::DimensionMismatch, "trapezoid: node/value count mismatch");
    V acc{};
    if (!g.weights.empty()) {
        for (std::size_t i = 0; i < values.size(); ++i) acc += values[i] * g.weights[i];
        return acc;
    }
    for (std::size_t i = 0; i + 1 < g.nodes.size(); ++i)
        acc += (values[i] + values[i + 1]) * (0.5 * (g.nodes[i + 1] - g.nodes[i]));
    return acc;
}

// (1/pi) * Im z * integral of boundary(t) / ((t - Re z)^2 + (Im z)^2) dt.
// The boundary data must visibly decay by the grid edges; otherwise the
// truncated integral silently loses mass, so that is an error.
inline double poisson_halfplane(const RealGrid& g, const std::vector<double>& boundary,
                                cplx z) {
    if (boundary.size() != g.nodes.size())
        fail(ErrorKind::DimensionMismatch, "poisson_halfplane: grid/value mismatch");
    const double y = z.imag();
    const double x = z.real();
    if (y < 1e-3)
        fail(ErrorKind::InvalidArgument, "poisson_halfplane: Im z must be >= 1e-3");
    double max_abs = 0;
    for (double v : boundary) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs > 0.0 &&
        std::max(std::abs(boundary.front()), std::abs(boundary.back())) > 1e-4 * max_abs)
        fail(ErrorKind::InsufficientDecay, "boundary data has not decayed at the grid edges");

    std::vector<double> integrand(boundary.size());
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        double d = g.nodes[i] - x;
        integrand[i] = boundary[i] * y / (d * d + y * y);
    }
    return trapezoid(g, integrand) / kPi;
}

}  // namespace ssflab
