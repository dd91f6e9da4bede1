#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ssflab/funcalc.hpp"
#include "ssflab/numkernel.hpp"
#include "ssflab/ssf.hpp"

namespace ssflab {

using nlohmann::json;

// Shortest digit string that round-trips a double exactly; used everywhere a
// number lands in a report so identical values always print identically.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline const json& require_field(const json& j, const char* name, const char* where) {
    auto it = j.find(name);
    if (it == j.end())
        fail(ErrorKind::ParseError, std::string(where) + ": missing field '" + name + "'");
    return *it;
}

inline double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(ErrorKind::ParseError, where + ": expected a number");
    return j.get<double>();
}

// true for any integral JSON number >= 0, however the parser stored it
inline bool is_count(const json& j) {
    if (j.is_number_unsigned()) return true;
    return j.is_number_integer() && j.get<long long>() >= 0;
}

inline cplx as_complex(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2)
        fail(ErrorKind::ParseError, where + ": expected a [re, im] pair");
    return cplx(as_number(j[0], where + "[0]"), as_number(j[1], where + "[1]"));
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json complex_array_to_json(const std::vector<cplx>& v) {
    json out = json::array();
    for (const cplx& z : v) out.push_back(complex_to_json(z));
    return out;
}

inline std::vector<cplx> complex_array_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) fail(ErrorKind::ParseError, where + ": expected an array");
    std::vector<cplx> out;
    out.reserve(j.size());
    for (std::size_t k = 0; k < j.size(); ++k)
        out.push_back(as_complex(j[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix JSON: {"rows": r, "cols": c, "data": [[re, im], ...]} in row-major
// order.  Double precision survives the roundtrip bit for bit.
// ---------------------------------------------------------------------------

inline json matrix_to_json(const Matrix& m) {
    json data = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            data.push_back(detail::complex_to_json(m(i, j)));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorKind::ParseError, "matrix: expected an object");
    const json& jr = detail::require_field(j, "rows", "matrix");
    const json& jc = detail::require_field(j, "cols", "matrix");
    const json& jd = detail::require_field(j, "data", "matrix");
    if (!detail::is_count(jr) || !detail::is_count(jc))
        fail(ErrorKind::ParseError, "matrix: rows/cols must be non-negative integers");
    const std::size_t rows = jr.get<std::size_t>();
    const std::size_t cols = jc.get<std::size_t>();
    if (rows == 0 || cols == 0) fail(ErrorKind::ParseError, "matrix: empty shape");
    if (!jd.is_array() || jd.size() != rows * cols)
        fail(ErrorKind::ParseError,
             "matrix: data must hold rows*cols = " + std::to_string(rows * cols) +
                 " entries, got " + std::to_string(jd.size()));
    Matrix m(rows, cols);
    for (std::size_t k = 0; k < rows * cols; ++k)
        m(k / cols, k % cols) = detail::as_complex(jd[k], "matrix data[" + std::to_string(k) + "]");
    m.require_finite("matrix_from_json");
    return m;
}

inline void save_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::InvalidArgument, "cannot open for writing: " + path);
    out << matrix_to_json(m).dump(2) << '\n';
}

inline Matrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::ParseError, "cannot open: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::ParseError, path + ": " + e.what());
    }
    return matrix_from_json(j);
}

// ---------------------------------------------------------------------------
// AnalyticFunction JSON: {"kind": "poly"|"rational", "coeffs": ...} with
// "poles"/"residues" for the rational kind.  Sampled functions have no
// closed form to serialize.
// ---------------------------------------------------------------------------

inline json function_to_json(const AnalyticFunction& f) {
    switch (f.kind()) {
        case AnalyticFunction::Kind::Poly:
            return json{{"kind", "poly"}, {"coeffs", detail::complex_array_to_json(f.coeffs())}};
        case AnalyticFunction::Kind::Rational:
            return json{{"kind", "rational"},
                        {"coeffs", detail::complex_array_to_json(f.coeffs())},
                        {"poles", detail::complex_array_to_json(f.poles())},
                        {"residues", detail::complex_array_to_json(f.residues())}};
        case AnalyticFunction::Kind::Sampled:
            break;
    }
    fail(ErrorKind::InvalidArgument, "sampled functions cannot be serialized");
}

inline AnalyticFunction function_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorKind::ParseError, "function: expected an object");
    const json& jk = detail::require_field(j, "kind", "function");
    if (!jk.is_string()) fail(ErrorKind::ParseError, "function kind: expected a string");
    const std::string kind = jk.get<std::string>();
    std::vector<cplx> coeffs = detail::complex_array_from_json(
        detail::require_field(j, "coeffs", "function"), "function coeffs");
    if (kind == "poly") return AnalyticFunction::polynomial(std::move(coeffs));
    if (kind == "rational") {
        std::vector<cplx> poles = detail::complex_array_from_json(
            detail::require_field(j, "poles", "function"), "function poles");
        std::vector<cplx> residues = detail::complex_array_from_json(
            detail::require_field(j, "residues", "function"), "function residues");
        return AnalyticFunction::rational(std::move(poles), std::move(residues),
                                          std::move(coeffs));
    }
    fail(ErrorKind::ParseError, "function kind: expected 'poly' or 'rational', got '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Spectral shift curves
// ---------------------------------------------------------------------------

inline const char* ssf_domain_name(SsfDomain d) {
    return d == SsfDomain::Disk ? "disk" : "halfplane";
}

inline const char* ssf_representative_name(SsfRepresentative r) {
    switch (r) {
        case SsfRepresentative::Analytic:     return "analytic";
        case SsfRepresentative::RealArgument: return "real_argument";
        case SsfRepresentative::Flattened:    return "flattened";
        case SsfRepresentative::Omega:        return "omega";
    }
    return "unknown";
}

// Plot-ready dump: one row per node.  Disk curves list the angle, half-plane
// curves the real abscissa.
inline void write_ssf_csv(const SsfResult& s, std::ostream& out) {
    out << (s.domain == SsfDomain::Disk ? "theta" : "t") << ",re_value,im_value,representative\n";
    const char* rep = ssf_representative_name(s.representative);
    for (std::size_t k = 0; k < s.values.size(); ++k)
        out << format_double(s.nodes[k]) << ',' << format_double(s.values[k].real()) << ','
            << format_double(s.values[k].imag()) << ',' << rep << '\n';
}

inline json ssf_to_json(const SsfResult& s) {
    json out{{"domain", ssf_domain_name(s.domain)},
             {"representative", ssf_representative_name(s.representative)},
             {"radius", s.radius},
             {"nodes", s.nodes},
             {"values", detail::complex_array_to_json(s.values)},
             {"neg_fourier", detail::complex_array_to_json(s.neg_fourier)},
             {"residuals",
              json{{"mass_residual", s.residuals.mass_residual},
                   {"winding_closure", s.residuals.winding_closure}}}};
    if (!s.weights.empty()) out["weights"] = s.weights;
    return out;
}

}  // namespace ssflab
