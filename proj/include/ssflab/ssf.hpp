#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ssflab/funcalc.hpp"
#include "ssflab/operators.hpp"

namespace ssflab {

inline const cplx kTwoPiI(0.0, 2.0 * kPi);

// ---------------------------------------------------------------------------
// Perturbation determinants
// ---------------------------------------------------------------------------

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b, const char* where) {
    if (a != b)
        fail(ErrorKind::DimensionMismatch,
             std::string(where) + ": " + std::to_string(a) + " vs " + std::to_string(b));
}

inline cplx pert_det(const Matrix& a1, const Matrix& a0, cplx point) {
    Matrix id = Matrix::identity(a0.rows());
    Matrix resolvent = solve(a0 - point * id, id);
    return det(id + (a1 - a0) * resolvent);
}

}  // namespace detail

// det(I + (T1 - T0)(T0 - lambda)^{-1}); equals det(T1 - lambda)/det(T0 - lambda).
inline cplx pert_det_disk(const Contraction& t1, const Contraction& t0, cplx lambda) {
    detail::require_same_dim(t1.dim(), t0.dim(), "pert_det_disk");
    return detail::pert_det(t1.matrix(), t0.matrix(), lambda);
}

inline cplx pert_det_halfplane(const MDissipative& l1, const MDissipative& l0, cplx tau) {
    detail::require_same_dim(l1.dim(), l0.dim(), "pert_det_halfplane");
    return detail::pert_det(l1.matrix(), l0.matrix(), tau);
}

// Relative defect of the cocycle identity d(t2/t1) * d(t1/t0) = d(t2/t0).
inline double chain_rule_check(const Contraction& t2, const Contraction& t1,
                               const Contraction& t0, cplx lambda) {
    cplx d21 = pert_det_disk(t2, t1, lambda);
    cplx d10 = pert_det_disk(t1, t0, lambda);
    cplx d20 = pert_det_disk(t2, t0, lambda);
    return std::abs(d21 * d10 - d20) / std::max(std::abs(d20), 1e-300);
}

// ---------------------------------------------------------------------------
// Continuous logarithms along sampled curves
// ---------------------------------------------------------------------------

struct UnwrappedLog {
    std::vector<cplx> values;
    double closure_defect = 0;  // argument mismatch after one full turn
};

// Continuous branch of log along a closed sampled curve, anchored at the
// principal value of the first sample.  The samples must be dense enough that
// consecutive argument increments stay below pi; a 2*pi*k mismatch after the
// full turn means the curve winds around zero and has no continuous log.
inline UnwrappedLog principal_log_closed_curve(const std::vector<cplx>& samples) {
    if (samples.size() < 2)
        fail(ErrorKind::InvalidArgument, "need at least two samples along the curve");
    for (const cplx& s : samples)
        if (!(std::abs(s) > 1e-300))
            fail(ErrorKind::ContourTooTight, "determinant vanishes on the contour");

    UnwrappedLog out;
    out.values.resize(samples.size());
    out.values[0] = std::log(samples[0]);
    double prev = out.values[0].imag();
    for (std::size_t k = 1; k < samples.size(); ++k) {
        double raw = std::arg(samples[k]);
        double adjusted = raw + 2.0 * kPi * std::round((prev - raw) / (2.0 * kPi));
        out.values[k] = cplx(std::log(std::abs(samples[k])), adjusted);
        prev = adjusted;
    }
    double raw0 = std::arg(samples[0]);
    double back = raw0 + 2.0 * kPi * std::round((prev - raw0) / (2.0 * kPi));
    out.closure_defect = back - out.values[0].imag();
    if (std::abs(out.closure_defect) > 1e-6) {
        long winding = std::lround(out.closure_defect / (2.0 * kPi));
        fail(ErrorKind::WindingNonzero,
             "curve winds " + std::to_string(winding) + " times around zero");
    }
    return out;
}

struct LogdetCurve {
    BoundaryGrid grid;       // log of the perturbation determinant at the nodes
    double closure_defect;   // residual argument mismatch of the closed curve
};

// log det(I + (T1-T0)(T0 - zeta)^{-1}) along |zeta| = radius.  Sampling runs at
// four-fold resolution so the unwrapping sees small argument steps, then the
// branch is pinned by forcing the circle average of the imaginary part to
// zero (the determinant tends to 1 at infinity, so the true curve has no
// constant term) and decimated back to the requested grid.
inline LogdetCurve logdet_on_circle(const Contraction& t1, const Contraction& t0,
                                    std::size_t grid_n, double radius) {
    detail::require_same_dim(t1.dim(), t0.dim(), "logdet_on_circle");
    BoundaryGrid fine(4 * grid_n, radius);
    std::vector<cplx> samples(fine.size);
    for (std::size_t k = 0; k < fine.size; ++k)
        samples[k] = pert_det_disk(t1, t0, fine.node(k));

    UnwrappedLog u = principal_log_closed_curve(samples);
    double mean = 0;
    for (const cplx& v : u.values) mean += v.imag();
    mean /= double(u.values.size());
    long shift = std::lround(mean / (2.0 * kPi));
    if (shift != 0)
        for (cplx& v : u.values) v -= cplx(0.0, 2.0 * kPi * double(shift));

    LogdetCurve out{BoundaryGrid(grid_n, radius), u.closure_defect};
    for (std::size_t k = 0; k < grid_n; ++k) out.grid.values[k] = u.values[4 * k];
    return out;
}

// ---------------------------------------------------------------------------
// Spectral shift results
// ---------------------------------------------------------------------------

enum class SsfDomain { Disk, Halfplane };

// Analytic:     xi = -log(det)/(2 pi i) on the circle (complex-valued)
// RealArgument: -arg(det)/pi, sharing every negative Fourier coefficient
// Flattened:    real rebalancing that keeps only the negative frequencies
// Omega:        boundary density on the real line (half-plane chart)
enum class SsfRepresentative { Analytic, RealArgument, Flattened, Omega };

struct SsfResiduals {
    double mass_residual = 0;    // disk: first-moment identity; line: reference trace check
    double winding_closure = 0;  // disk: curve closure defect; line: worst edge argument
};

struct SsfResult {
    SsfDomain domain = SsfDomain::Disk;
    SsfRepresentative representative = SsfRepresentative::Analytic;
    double radius = 1.0;             // disk: circle carrying the values; line: 0 = real axis
    std::vector<double> nodes;       // angles in [0, 2 pi) or real abscissae
    std::vector<double> weights;     // quadrature weights (half-plane only)
    std::vector<cplx> values;
    std::vector<cplx> neg_fourier;   // xi_hat(-1), xi_hat(-2), ... (disk only)
    SsfResiduals residuals;
};

// Canonical shift for a pair of contractions.  Strict pairs are evaluated
// directly on the unit circle.  Pairs touching the boundary are evaluated on
// shrinking outer circles and Richardson-extrapolated toward radius one; their
// Fourier data instead comes exactly from the outermost circle, where
// coefficients scale by radius^m and no extrapolation error enters.
inline SsfResult ssf_canonical(const Contraction& t1, const Contraction& t0,
                               std::size_t grid_n = 1024, std::size_t coeff_count = 32) {
    detail::require_same_dim(t1.dim(), t0.dim(), "ssf_canonical");
    SsfResult out;
    out.domain = SsfDomain::Disk;
    out.representative = SsfRepresentative::Analytic;
    out.radius = 1.0;

    std::vector<cplx> boundary_log;
    std::vector<cplx> coeff_log;
    double coeff_radius = 1.0;
    double defect = 0;
    if (t1.strict() && t0.strict()) {
        LogdetCurve c = logdet_on_circle(t1, t0, grid_n, 1.0);
        boundary_log = std::move(c.grid.values);
        coeff_log = boundary_log;
        defect = std::abs(c.closure_defect);
    } else {
        LogdetCurve c0 = logdet_on_circle(t1, t0, grid_n, 1.1);
        LogdetCurve c1 = logdet_on_circle(t1, t0, grid_n, 1.05);
        LogdetCurve c2 = logdet_on_circle(t1, t0, grid_n, 1.025);
        defect = std::max({std::abs(c0.closure_defect), std::abs(c1.closure_defect),
                           std::abs(c2.closure_defect)});
        boundary_log.resize(grid_n);
        for (std::size_t k = 0; k < grid_n; ++k) {
            cplx r1a = 2.0 * c1.grid.values[k] - c0.grid.values[k];
            cplx r1b = 2.0 * c2.grid.values[k] - c1.grid.values[k];
            boundary_log[k] = (4.0 * r1b - r1a) / 3.0;
        }
        coeff_radius = 1.1;
        coeff_log = std::move(c0.grid.values);
    }

    out.nodes.resize(grid_n);
    out.values.resize(grid_n);
    for (std::size_t k = 0; k < grid_n; ++k) {
        out.nodes[k] = 2.0 * kPi * double(k) / double(grid_n);
        out.values[k] = -boundary_log[k] / kTwoPiI;
    }

    coeff_count = std::max<std::size_t>(1, std::min(coeff_count, grid_n / 2 - 1));
    BoundaryGrid cg(grid_n, coeff_radius);
    cg.values = std::move(coeff_log);
    FourierSeries fs = fourier_transform_grid(cg);
    out.neg_fourier.resize(coeff_count);
    double rpow = 1.0;
    for (std::size_t m = 1; m <= coeff_count; ++m) {
        rpow *= coeff_radius;
        out.neg_fourier[m - 1] = -(rpow * fs.at(-long(m))) / kTwoPiI;
    }

    cplx mass = kTwoPiI * out.neg_fourier[0];
    out.residuals.mass_residual = std::abs(mass - (t1.matrix() - t0.matrix()).trace());
    out.residuals.winding_closure = defect;
    return out;
}

namespace detail {

// xi_hat(-m) = radius^m * (FFT coefficient at -m) for values sampled on the
// circle of the given radius.
inline std::vector<cplx> neg_coeffs_from_values(const std::vector<cplx>& values,
                                                double radius, std::size_t count) {
    BoundaryGrid g(values.size(), radius);
    g.values = values;
    FourierSeries fs = fourier_transform_grid(g);
    std::vector<cplx> out(count);
    double rpow = 1.0;
    for (std::size_t m = 1; m <= count; ++m) {
        rpow *= radius;
        out[m - 1] = rpow * fs.at(-long(m));
    }
    return out;
}

inline void require_disk_analytic(const SsfResult& s, const char* where) {
    if (s.domain != SsfDomain::Disk || s.representative != SsfRepresentative::Analytic)
        fail(ErrorKind::InvalidArgument,
             std::string(where) + " needs the analytic disk representative");
}

}  // namespace detail

// -arg(det)/pi = 2 Re xi; real-valued and with the same negative Fourier
// coefficients as the analytic representative (the added conjugate series
// only carries non-negative frequencies).
inline SsfResult real_argument_representative(const SsfResult& s) {
    detail::require_disk_analytic(s, "real_argument_representative");
    SsfResult out = s;
    out.representative = SsfRepresentative::RealArgument;
    for (std::size_t k = 0; k < s.values.size(); ++k)
        out.values[k] = cplx(2.0 * s.values[k].real(), 0.0);
    out.neg_fourier = detail::neg_coeffs_from_values(out.values, s.radius,
                                                     s.neg_fourier.size());
    return out;
}

// Real rebalancing: keep the negative-frequency half and mirror it, so the
// result is real while xi - xi_flat extends analytically into the disk.
inline std::vector<double> flatten_values(const std::vector<cplx>& xi) {
    BoundaryGrid g(xi.size(), 1.0);
    g.values = xi;
    FourierSeries fs = fourier_transform_grid(g);
    FourierSeries mirrored;
    mirrored.grid_size = fs.grid_size;
    mirrored.coeff.assign(fs.grid_size, cplx(0, 0));
    mirrored.ref(0) = fs.at(0).real();
    mirrored.ref(mirrored.min_freq()) = fs.at(mirrored.min_freq()).real();
    for (long m = 1; m < long(fs.grid_size) / 2; ++m) {
        mirrored.ref(-m) = fs.at(-m);
        mirrored.ref(m) = std::conj(fs.at(-m));
    }
    BoundaryGrid flat = inverse_fourier(mirrored, 1.0);
    std::vector<double> out(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) out[k] = flat.values[k].real();
    return out;
}

inline SsfResult flatten_representative(const SsfResult& s) {
    detail::require_disk_analytic(s, "flatten_representative");
    SsfResult out = s;
    out.representative = SsfRepresentative::Flattened;
    std::vector<double> flat = flatten_values(s.values);
    for (std::size_t k = 0; k < flat.size(); ++k) out.values[k] = cplx(flat[k], 0.0);
    out.neg_fourier = detail::neg_coeffs_from_values(out.values, s.radius,
                                                     s.neg_fourier.size());
    return out;
}

// Mean of Im(xi) * log(1 + |Im(xi)|) over the nodes: a size functional that is
// finite exactly when the imaginary part has the borderline integrability the
// shift class allows.
inline double zygmund_functional(const std::vector<cplx>& xi) {
    if (xi.empty()) fail(ErrorKind::InvalidArgument, "empty sample set");
    double acc = 0;
    for (const cplx& v : xi) acc += v.imag() * std::log1p(std::abs(v.imag()));
    return acc / double(xi.size());
}

// ---------------------------------------------------------------------------
// Trace formulas on the disk
// ---------------------------------------------------------------------------

// |trace((T1-lambda)^{-1} - (T0-lambda)^{-1}) + contour integral of
// xi(zeta)/(zeta-lambda)^2|; zero for every representative when |lambda| > 1,
// because the representatives differ by boundary values of functions analytic
// inside the contour.
inline double verify_resolvent_trace(const SsfResult& s, const Contraction& t1,
                                     const Contraction& t0, cplx lambda) {
    if (s.domain != SsfDomain::Disk)
        fail(ErrorKind::InvalidArgument, "verify_resolvent_trace needs a disk result");
    if (std::abs(lambda) < s.radius + 0.01)
        fail(ErrorKind::InvalidArgument, "evaluation point must lie outside the contour");
    const std::size_t n = s.values.size();
    cplx quad = 0;
    for (std::size_t k = 0; k < n; ++k) {
        cplx zeta = std::polar(s.radius, s.nodes[k]);
        cplx d = zeta - lambda;
        quad += s.values[k] * cplx(0, 1) * zeta / (d * d);
    }
    quad *= 2.0 * kPi / double(n);

    Matrix id = Matrix::identity(t1.dim());
    cplx tr = (inverse(t1.matrix() - lambda * id) - inverse(t0.matrix() - lambda * id)).trace();
    return std::abs(tr + quad);
}

// trace((T1-lambda)^{-1} - (T0-lambda)^{-1}) reconstructed from the stored
// coefficients alone: sum over m of m * (-2 pi i xi_hat(-m)) * lambda^{-m-1}.
// Truncation decays like |lambda|^{-count}, so keep |lambda| comfortably > 1.
inline cplx resolvent_trace_estimate(const SsfResult& s, cplx lambda) {
    if (s.domain != SsfDomain::Disk)
        fail(ErrorKind::InvalidArgument, "resolvent_trace_estimate needs a disk result");
    if (!(std::abs(lambda) > 1.0))
        fail(ErrorKind::InvalidArgument, "series converges only outside the unit circle");
    cplx inv = 1.0 / lambda;
    cplx power = inv * inv;  // lambda^{-m-1} starting at m = 1
    cplx acc = 0;
    for (std::size_t m = 1; m <= s.neg_fourier.size(); ++m) {
        acc += double(m) * (-kTwoPiI * s.neg_fourier[m - 1]) * power;
        power *= inv;
    }
    return acc;
}

struct FunctionTraceCheck {
    double quadrature_residual;   // against the contour integral of f' * xi
    double coefficient_residual;  // against 2 pi i * sum m b_m xi_hat(-m)
};

// trace(f(T1) - f(T0)) tested two ways; b_m are the Taylor coefficients of f
// at the origin (poles contribute -res/p^{m+1}).
inline FunctionTraceCheck verify_function_trace(const SsfResult& s, const Contraction& t1,
                                                const Contraction& t0,
                                                const AnalyticFunction& f) {
    if (s.domain != SsfDomain::Disk)
        fail(ErrorKind::InvalidArgument, "verify_function_trace needs a disk result");
    if (f.kind() == AnalyticFunction::Kind::Sampled)
        fail(ErrorKind::InvalidArgument, "function trace needs a closed-form symbol");
    const std::size_t count = s.neg_fourier.size();
    if (f.kind() == AnalyticFunction::Kind::Poly && f.degree() > count)
        fail(ErrorKind::InvalidArgument,
             "polynomial degree exceeds the stored coefficient count");

    cplx lhs = (direct_eval_matrix(f, t1.matrix()) - direct_eval_matrix(f, t0.matrix())).trace();

    AnalyticFunction fp = f.derivative();
    const std::size_t n = s.values.size();
    cplx quad = 0;
    for (std::size_t k = 0; k < n; ++k) {
        cplx zeta = std::polar(s.radius, s.nodes[k]);
        quad += fp(zeta) * s.values[k] * cplx(0, 1) * zeta;
    }
    quad *= 2.0 * kPi / double(n);

    cplx series = 0;
    for (std::size_t m = 1; m <= count; ++m) {
        cplx b = m < f.coeffs().size() ? f.coeffs()[m] : cplx(0, 0);
        for (std::size_t i = 0; i < f.poles().size(); ++i)
            b -= f.residues()[i] / std::pow(f.poles()[i], double(m + 1));
        series += kTwoPiI * double(m) * b * s.neg_fourier[m - 1];
    }
    return {std::abs(lhs - quad), std::abs(lhs - series)};
}

// ---------------------------------------------------------------------------
// Half-plane chart
// ---------------------------------------------------------------------------

namespace detail {

struct LineLog {
    std::vector<cplx> values;
    double edge_arg;  // worst |Im log det| at the two ends of the grid
};

// Continuous log of the perturbation determinant along the horizontal line
// Im = -height, anchored at the left edge where the argument is O(1/|x|).
inline LineLog logdet_on_line(const MDissipative& l1, const MDissipative& l0,
                              const std::vector<double>& nodes, double height) {
    std::vector<cplx> samples(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        samples[k] = pert_det_halfplane(l1, l0, cplx(nodes[k], -height));

    LineLog out;
    out.values.resize(samples.size());
    for (const cplx& sm : samples)
        if (!(std::abs(sm) > 1e-300))
            fail(ErrorKind::ContourTooTight, "determinant vanishes on the evaluation line");
    out.values[0] = std::log(samples[0]);
    double prev = out.values[0].imag();
    for (std::size_t k = 1; k < samples.size(); ++k) {
        double raw = std::arg(samples[k]);
        double adjusted = raw + 2.0 * kPi * std::round((prev - raw) / (2.0 * kPi));
        out.values[k] = cplx(std::log(std::abs(samples[k])), adjusted);
        prev = adjusted;
    }
    out.edge_arg = std::max(std::abs(out.values.front().imag()),
                            std::abs(out.values.back().imag()));
    if (out.edge_arg > 0.5 * kPi)
        fail(ErrorKind::WindingNonzero,
             "boundary argument fails to settle at the grid edges");
    return out;
}

}  // namespace detail

// Boundary density omega(x) = -(1/pi) Im log det(...) taken from within the
// lower half-plane, normalized so that log det(tau) equals the Cauchy
// integral of omega/(t - tau) there.  Strict pairs evaluate on the axis
// directly; pairs whose spectrum touches the axis are evaluated at heights
// 0.1, 0.05, 0.025 below it and Richardson-extrapolated (the extrapolation
// cannot converge within ~height of a jump of omega, which the residual
// fields reflect honestly).
inline SsfResult ssf_halfplane(const MDissipative& l1, const MDissipative& l0,
                               const RealGrid& grid) {
    detail::require_same_dim(l1.dim(), l0.dim(), "ssf_halfplane");
    if (grid.nodes.size() < 2 || grid.weights.size() != grid.nodes.size())
        fail(ErrorKind::InvalidArgument, "need a weighted evaluation grid");

    std::vector<double> omega(grid.nodes.size());
    double edge = 0;
    if (l1.strict() && l0.strict()) {
        detail::LineLog line = detail::logdet_on_line(l1, l0, grid.nodes, 0.0);
        for (std::size_t k = 0; k < omega.size(); ++k)
            omega[k] = -line.values[k].imag() / kPi;
        edge = line.edge_arg;
    } else {
        detail::LineLog a = detail::logdet_on_line(l1, l0, grid.nodes, 0.1);
        detail::LineLog b = detail::logdet_on_line(l1, l0, grid.nodes, 0.05);
        detail::LineLog c = detail::logdet_on_line(l1, l0, grid.nodes, 0.025);
        edge = std::max({a.edge_arg, b.edge_arg, c.edge_arg});
        for (std::size_t k = 0; k < omega.size(); ++k) {
            double wa = -a.values[k].imag() / kPi;
            double wb = -b.values[k].imag() / kPi;
            double wc = -c.values[k].imag() / kPi;
            double r1a = 2.0 * wb - wa;
            double r1b = 2.0 * wc - wb;
            omega[k] = (4.0 * r1b - r1a) / 3.0;
        }
    }

    SsfResult out;
    out.domain = SsfDomain::Halfplane;
    out.representative = SsfRepresentative::Omega;
    out.radius = 0.0;
    out.nodes = grid.nodes;
    out.weights = grid.weights;
    out.values.resize(omega.size());
    for (std::size_t k = 0; k < omega.size(); ++k) out.values[k] = cplx(omega[k], 0.0);
    out.residuals.winding_closure = edge;

    // reference trace check at tau = -2i
    const cplx tau(0.0, -2.0);
    cplx quad = 0;
    for (std::size_t k = 0; k < omega.size(); ++k) {
        cplx d = grid.nodes[k] - tau;
        quad += grid.weights[k] * omega[k] / (d * d);
    }
    Matrix id = Matrix::identity(l1.dim());
    cplx tr = (inverse(l1.matrix() - tau * id) - inverse(l0.matrix() - tau * id)).trace();
    out.residuals.mass_residual = std::abs(tr + quad);
    return out;
}

// |trace((L1-tau)^{-1} - (L0-tau)^{-1}) + integral of omega(t)/(t-tau)^2 dt|
// for tau in the open lower half-plane.
inline double verify_halfplane_trace(const SsfResult& s, const MDissipative& l1,
                                     const MDissipative& l0, cplx tau) {
    if (s.domain != SsfDomain::Halfplane)
        fail(ErrorKind::InvalidArgument, "verify_halfplane_trace needs a line result");
    if (!(tau.imag() <= -0.1))
        fail(ErrorKind::InvalidArgument, "evaluation point must satisfy Im tau <= -0.1");
    detail::require_same_dim(l1.dim(), l0.dim(), "verify_halfplane_trace");
    cplx quad = 0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        cplx d = s.nodes[k] - tau;
        quad += s.weights[k] * s.values[k] / (d * d);
    }
    Matrix id = Matrix::identity(l1.dim());
    cplx tr = (inverse(l1.matrix() - tau * id) - inverse(l0.matrix() - tau * id)).trace();
    return std::abs(tr + quad);
}

// ---------------------------------------------------------------------------
// Rank-one accumulation model
// ---------------------------------------------------------------------------

namespace detail {

inline void require_positive(const std::vector<double>& alphas) {
    if (alphas.empty()) fail(ErrorKind::InvalidArgument, "empty coupling sequence");
    for (double a : alphas)
        if (!(a > 0.0)) fail(ErrorKind::InvalidArgument, "couplings must be positive");
}

}  // namespace detail

// eta(t) = sum of (1/2) log(1 + a^2/t^2): boundary modulus data of the model.
inline double rank_one_eta(const std::vector<double>& alphas, double t) {
    detail::require_positive(alphas);
    if (t == 0.0) fail(ErrorKind::InvalidArgument, "eta diverges at zero");
    double s = 0;
    for (double a : alphas) s += 0.5 * std::log1p((a / t) * (a / t));
    return s;
}

// Conjugate datum: sum of arctan(a/t) with the odd principal branch.
inline double rank_one_arg(const std::vector<double>& alphas, double t) {
    detail::require_positive(alphas);
    double s = 0;
    for (double a : alphas) s += std::atan(a / t);
    return s;
}

// Product determinant of the model pair (diag(i a_n) against zero).
inline cplx rank_one_product_det(const std::vector<double>& alphas, cplx tau) {
    detail::require_positive(alphas);
    if (!(std::abs(tau) > 1e-300)) fail(ErrorKind::PoleAtInput, "pole of the model at zero");
    cplx acc = 1.0;
    for (double a : alphas) acc *= 1.0 - cplx(0, a) / tau;
    return acc;
}

inline std::vector<double> geometric_alphas(double q, std::size_t count) {
    if (!(0.0 < q && q < 1.0) || count == 0)
        fail(ErrorKind::InvalidArgument, "need 0 < q < 1 and a nonempty sequence");
    std::vector<double> out(count);
    double a = 1.0;
    for (std::size_t n = 0; n < count; ++n) {
        a *= q;
        out[n] = a;
    }
    return out;
}

// Slowly decaying study sequence 1/((n+2) log^2(n+2)): summable couplings
// whose log-weighted sum still diverges.
inline std::vector<double> harmonic_log_alphas(std::size_t count) {
    if (count == 0) fail(ErrorKind::InvalidArgument, "need a nonempty sequence");
    std::vector<double> out(count);
    for (std::size_t n = 0; n < count; ++n) {
        double m = double(n + 2);
        double lg = std::log(m);
        out[n] = 1.0 / (m * lg * lg);
    }
    return out;
}

struct RankOneCriterion {
    double log_weight_sum;  // sum of a * log(1/a): the summability criterion
    double s_value;         // sum of a * log((1+a^2)/a^2)
    double alpha_sum;
};

inline RankOneCriterion rank_one_criterion(const std::vector<double>& alphas) {
    detail::require_positive(alphas);
    RankOneCriterion out{0, 0, 0};
    for (double a : alphas) {
        out.log_weight_sum += a * std::log(1.0 / a);
        out.s_value += a * std::log((1.0 + a * a) / (a * a));
        out.alpha_sum += a;
    }
    return out;
}

struct IntegralCheck {
    double integral;
    double target;
    double residual;  // relative
};

// integral of eta over the line against its exact mass pi * sum(a).
inline IntegralCheck rank_one_eta_mass(const std::vector<double>& alphas,
                                       const RealGrid& grid) {
    std::vector<double> vals(grid.nodes.size());
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = rank_one_eta(alphas, grid.nodes[k]);
    IntegralCheck out{};
    out.integral = trapezoid(grid, vals);
    out.target = 0;
    for (double a : alphas) out.target += kPi * a;
    out.residual = std::abs(out.integral - out.target) / out.target;
    return out;
}

// integral of |sum arctan(a/t)| / (1 + t^2): comparable from both sides with
// the weighted log sums in RankOneCriterion.
inline double rank_one_weighted_arg_integral(const std::vector<double>& alphas,
                                             const RealGrid& grid) {
    std::vector<double> vals(grid.nodes.size());
    for (std::size_t k = 0; k < vals.size(); ++k) {
        double t = grid.nodes[k];
        vals[k] = std::abs(rank_one_arg(alphas, t)) / (1.0 + t * t);
    }
    return trapezoid(grid, vals);
}

// Relative deviation between the product determinant and
// exp((i/pi) integral eta/(t-z) dt) at a point of the open lower half-plane;
// the exponential form holds there and only there.  Relative, because the
// product modulus grows like prod(1 + a/|z|) toward the boundary while every
// factor keeps modulus >= 1 below the axis.
inline double rank_one_exp_rep_check(const std::vector<double>& alphas, cplx z,
                                     const RealGrid& grid) {
    if (!(z.imag() <= -1e-2))
        fail(ErrorKind::InvalidArgument, "representation point must satisfy Im z <= -0.01");
    std::vector<cplx> vals(grid.nodes.size());
    for (std::size_t k = 0; k < vals.size(); ++k) {
        double t = grid.nodes[k];
        vals[k] = rank_one_eta(alphas, t) / (t - z);
    }
    cplx integral = trapezoid(grid, vals);
    cplx rebuilt = std::exp(cplx(0, 1) / kPi * integral);
    cplx product = rank_one_product_det(alphas, z);
    return std::abs(product - rebuilt) / std::max(std::abs(product), 1e-300);
}

// Chart map for real eigenvalues: lambda in (-1, 1) on the disk side goes to
// the coupling (1 - lambda)/(1 + lambda), the imaginary part of the Cayley
// image.  Degenerates at both endpoints.
inline double cayley_corollary_map(double lambda) {
    if (std::abs(lambda - 1.0) <= 1e-12 || std::abs(lambda + 1.0) <= 1e-12)
        fail(ErrorKind::EigenvalueAtPlusMinusOne, "chart map degenerates at +-1");
    return (1.0 - lambda) / (1.0 + lambda);
}

// ---------------------------------------------------------------------------
// Outer-factor checks for ordered dissipative splits
// ---------------------------------------------------------------------------

// det(I + i V (B - z)^{-1}); contractive in the upper half-plane whenever
// 0 <= V <= -Im B.
inline cplx outer_determinant(const Matrix& b, const Matrix& v_plus, cplx z) {
    b.require_square("outer_determinant");
    detail::require_same_dim(b.rows(), v_plus.rows(), "outer_determinant");
    Matrix id = Matrix::identity(b.rows());
    return det(id + cplx(0, 1) * v_plus * solve(b - z * id, id));
}

// B with Im B <= -0.3 I, produced as the adjoint of a strictly dissipative draw.
inline Matrix random_accumulative(std::size_t n, std::uint64_t seed) {
    return random_strict_dissipative(n, seed).matrix().adjoint();
}

// Random V with 0 <= V <= -Im B: conjugate a PSD contraction by (-Im B)^{1/2}.
inline Matrix random_ordered_split(const Matrix& b, std::uint64_t seed) {
    b.require_square("random_ordered_split");
    const std::size_t n = b.rows();
    Matrix m = (b.adjoint() - b) * cplx(0, -0.5);  // -Im B
    Matrix mh = psd_sqrt(m);
    Matrix q = random_unitary(n, seed ^ 0x5851f42d4c957f2dULL);
    CounterRng rng(seed, 17);
    std::vector<cplx> d(n);
    for (cplx& u : d) u = rng.uniform();
    Matrix v = mh * (q * Matrix::diagonal(d) * q.adjoint()) * mh;
    return 0.5 * (v + v.adjoint());
}

struct OuterChecks {
    double modulus_excess;    // max over samples of |w(z)| - 1
    double schur_defect;      // most negative eigenvalue of I - W*W, sign-flipped
    double re_defect;         // max over samples of 1 - min eig Re W_minus
    double poisson_residual;  // log|w| against its boundary Poisson integral
};

// Contractivity and positivity checks for the split factors, plus the
// harmonic-extension identity for log|w| at an interior point.
inline OuterChecks outer_rep_check(const Matrix& b, const Matrix& v_plus,
                                   const RealGrid& grid) {
    b.require_square("outer_rep_check");
    detail::require_same_dim(b.rows(), v_plus.rows(), "outer_rep_check");
    const std::size_t n = b.rows();
    Matrix id = Matrix::identity(n);
    Matrix m = (b.adjoint() - b) * cplx(0, -0.5);  // -Im B
    Matrix vh = 0.5 * (v_plus + v_plus.adjoint());

    const double scale = std::max(1.0, operator_norm(m));
    if (hermitian_eigen(vh).values.front() < -1e-9 * scale)
        fail(ErrorKind::OrderViolation, "split has a negative part");
    if (hermitian_eigen(m - vh).values.front() < -1e-9 * scale)
        fail(ErrorKind::OrderViolation, "split exceeds the dissipative part");

    Matrix vhalf = psd_sqrt(vh);
    Matrix c = b + cplx(0, 1) * vh;

    const cplx samples[8] = {cplx(0.3, 0.4),  cplx(-1.1, 0.6), cplx(2.0, 1.5),
                             cplx(-2.5, 0.35), cplx(0.0, 2.0),  cplx(1.2, 0.9),
                             cplx(-0.4, 1.8),  cplx(3.5, 0.5)};
    OuterChecks out{-1e300, 0, -1e300, 0};
    for (cplx z : samples) {
        Matrix r = solve(b - z * id, id);
        cplx w = det(id + cplx(0, 1) * vh * r);
        out.modulus_excess = std::max(out.modulus_excess, std::abs(w) - 1.0);

        Matrix wp = id + cplx(0, 1) * vhalf * r * vhalf;
        double min_schur = hermitian_eigen(id - wp.adjoint() * wp).values.front();
        out.schur_defect = std::max(out.schur_defect, std::max(0.0, -min_schur));

        Matrix wm = id - cplx(0, 1) * vhalf * solve(c - z * id, id) * vhalf;
        double min_re = hermitian_eigen(0.5 * (wm + wm.adjoint())).values.front();
        out.re_defect = std::max(out.re_defect, 1.0 - min_re);
    }

    std::vector<double> boundary(grid.nodes.size());
    for (std::size_t k = 0; k < boundary.size(); ++k)
        boundary[k] = std::log(std::abs(outer_determinant(b, vh, grid.nodes[k])));
    const cplx z0(0.7, 0.8);
    double direct = std::log(std::abs(outer_determinant(b, vh, z0)));
    out.poisson_residual = std::abs(direct - poisson_halfplane(grid, boundary, z0));
    return out;
}

// ---------------------------------------------------------------------------
// Transport between the charts
// ---------------------------------------------------------------------------

// trace((L1-tau)^{-1} - (L0-tau)^{-1}) = -(1+lambda)^2/(2i) * trace of the
// disk-side resolvent difference, with L = Cayley(T) and tau = moebius(lambda).
inline double cross_domain_trace_residual(const Contraction& t1, const Contraction& t0,
                                          cplx lambda) {
    detail::require_same_dim(t1.dim(), t0.dim(), "cross_domain_trace_residual");
    MDissipative l1 = cayley_T_to_L(t1);
    MDissipative l0 = cayley_T_to_L(t0);
    cplx tau = moebius(lambda, MoebiusDir::DiskToHalfplane);
    Matrix id = Matrix::identity(t1.dim());
    cplx trace_disk =
        (inverse(t1.matrix() - lambda * id) - inverse(t0.matrix() - lambda * id)).trace();
    cplx trace_line =
        (inverse(l1.matrix() - tau * id) - inverse(l0.matrix() - tau * id)).trace();
    cplx w = cplx(1, 0) + lambda;
    return std::abs(trace_line + (w * w / cplx(0, 2)) * trace_disk);
}

}  // namespace ssflab
