// Acceptance gate: every release-blocking property on one page.
//
//   acceptance <ssf-lab-binary> <reference-config.json> <output-dir>
//
// Prints one PASS/FAIL line per criterion with the worst observed residual
// and the pinned tolerance; exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ssflab/doi.hpp"
#include "ssflab/experiments.hpp"
#include "ssflab/operators.hpp"
#include "ssflab/rng.hpp"
#include "ssflab/ssf.hpp"

using namespace ssflab;

namespace {

struct Criterion {
    double worst = 0;
    double tolerance = 0;
    std::string note;

    void observe(double residual) {
        if (residual > worst) worst = residual;
    }
    bool pass() const { return worst <= tolerance; }
};

int g_index = 0;
bool g_all_pass = true;

void report(const char* name, const std::function<Criterion()>& body) {
    ++g_index;
    Criterion c;
    std::string error;
    try {
        c = body();
    } catch (const std::exception& e) {
        error = e.what();
    }
    const bool ok = error.empty() && c.pass();
    if (!ok) g_all_pass = false;
    if (!error.empty()) {
        std::printf("[FAIL] %2d. %s: exception: %s\n", g_index, name, error.c_str());
        return;
    }
    std::printf("[%s] %2d. %s: max residual %.3e (tolerance %.1e)%s%s\n",
                ok ? "PASS" : "FAIL", g_index, name, c.worst, c.tolerance,
                c.note.empty() ? "" : " ", c.note.c_str());
}

Matrix random_square(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    CounterRng rng(seed, stream);
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.unit_disk();
    return m;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 4) {
        std::fprintf(stderr, "usage: %s <ssf-lab-binary> <reference-config> <output-dir>\n",
                     argv[0]);
        return 2;
    }
    const std::string ssf_lab = argv[1];
    const std::string reference_config = argv[2];
    const std::string out_dir = argv[3];
    std::filesystem::create_directories(out_dir);

    report("determinant-ratio identity, 200 pairs, 8 points", [] {
        Criterion c;
        c.tolerance = 1e-9;
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 2 + trial % 7;  // up to 8
            const ContractionKind kind =
                trial % 2 == 0 ? ContractionKind::Strict : ContractionKind::BoundaryTouching;
            Contraction t1 = random_contraction(n, kind, 100 + trial);
            Contraction t0 = random_contraction(n, ContractionKind::Strict, 9000 + trial);
            Matrix id = Matrix::identity(n);
            CounterRng rng(300 + trial, 5);
            for (int k = 0; k < 8; ++k) {
                cplx lambda = std::polar(rng.uniform(1.1, 2.5), rng.uniform(0.0, 2.0 * kPi));
                cplx delta = pert_det_disk(t1, t0, lambda);
                cplx det0 = det(t0.matrix() - lambda * id);
                cplx det1 = det(t1.matrix() - lambda * id);
                c.observe(std::abs(delta * det0 - det1) / std::abs(det1));
            }
        }
        return c;
    });

    report("resolvent trace formula, 50 strict pairs, grid 1024", [] {
        Criterion c;
        c.tolerance = 1e-7;
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 2 + trial % 5;  // up to 6
            Contraction t1 = random_contraction(n, ContractionKind::Strict, 1100 + trial);
            Contraction t0 = random_contraction(n, ContractionKind::Strict, 8200 + trial);
            SsfResult s = ssf_canonical(t1, t0, 1024, 32);
            CounterRng rng(1300 + trial, 7);
            for (int k = 0; k < 8; ++k) {
                cplx lambda = std::polar(rng.uniform(1.1, 2.5), rng.uniform(0.0, 2.0 * kPi));
                c.observe(verify_resolvent_trace(s, t1, t0, lambda));
            }
        }
        return c;
    });

    report("function trace formula and mass identity, 50 strict pairs", [] {
        Criterion c;
        c.tolerance = 1.0;  // residuals are pre-divided by their own scale
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 2 + trial % 5;
            Contraction t1 = random_contraction(n, ContractionKind::Strict, 2100 + trial);
            Contraction t0 = random_contraction(n, ContractionKind::Strict, 7300 + trial);
            CounterRng rng(2300 + trial, 9);
            std::vector<cplx> coeffs(2 + rng.below(8));  // degree <= 8
            for (cplx& a : coeffs) a = rng.unit_disk();
            AnalyticFunction f = AnalyticFunction::polynomial(coeffs);

            SsfResult s = ssf_canonical(t1, t0, 1024, 32);
            FunctionTraceCheck ft = verify_function_trace(s, t1, t0, f);
            const double scale = 1e-7 * (1.0 + f.coeff_abs_sum());
            c.observe(ft.quadrature_residual / scale);
            c.observe(ft.coefficient_residual / scale);
            c.observe(s.residuals.mass_residual / 1e-8);
        }
        return c;
    });

    report("doi increment, trace, and order-2 path derivative", [] {
        Criterion c;
        c.tolerance = 1.0;
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 2 + trial % 3;  // up to 4
            Contraction t1 = random_contraction(n, ContractionKind::Strict, 3100 + trial);
            Contraction t0 = random_contraction(n, ContractionKind::Strict, 6400 + trial);
            CounterRng rng(3300 + trial, 11);
            std::vector<cplx> coeffs(4 + rng.below(5));  // degree 3..7
            for (cplx& a : coeffs) a = rng.unit_disk();
            AnalyticFunction f = AnalyticFunction::polynomial(coeffs);

            c.observe(verify_increment(f, t1, t0) / 1e-9);
            Matrix k = random_square(n, 3500 + trial, 13);
            c.observe(doi_trace_check(f, t1, k) / 1e-9);

            Matrix g = random_square(n, 3700 + trial, 15);
            Matrix direction = 0.25 * (g + g.adjoint());
            PathDerivativeOrder ord = path_derivative_order(f, t0, direction, 1e-4);
            c.observe(ord.error_h / 1e-7);
            c.observe(std::abs(ord.order - 2.0) / 0.35);
        }
        return c;
    });

    report("dilation moments k <= 6, 50 contractions", [] {
        Criterion c;
        c.tolerance = 1e-9;
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 2 + trial % 3;  // up to 4
            const ContractionKind kind =
                trial % 2 == 0 ? ContractionKind::Strict : ContractionKind::BoundaryTouching;
            Contraction t = random_contraction(n, kind, 4100 + trial);
            DilationResult dil = egervary_dilation(t, 6);
            Matrix upower = Matrix::identity(dil.unitary.rows());
            Matrix tpower = Matrix::identity(n);
            for (int k = 1; k <= 6; ++k) {
                upower = upower * dil.unitary;
                tpower = tpower * t.matrix();
                Matrix corner(n, n);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) corner(i, j) = upower(i, j);
                c.observe(operator_norm(corner - tpower));
            }
        }
        return c;
    });

    report("rank-one model: eta mass, exp-representation, criterion sum", [] {
        Criterion c;
        c.tolerance = 1.0;
        std::vector<double> alphas = geometric_alphas(0.5, 20);

        RealGrid mass_grid = make_symmetric_log_grid(1e-8, 1e6, 2000);
        c.observe(rank_one_eta_mass(alphas, mass_grid).residual / 1e-4);

        RealGrid rep_grid = make_symmetric_log_grid(1e-12, 1e4, 9000);
        const cplx samples[16] = {
            {0.0, -0.01},  {0.25, -0.01}, {-0.3, -0.015}, {0.8, -0.05},
            {-1.1, -0.06}, {1.5, -0.08},  {-0.5, -0.05},  {2.2, -0.35},
            {-2.8, -0.4},  {0.15, -0.02}, {-0.1, -0.012}, {1.0, -0.5},
            {-1.8, -1.2},  {0.6, -2.0},   {3.0, -0.6},    {-0.9, -0.25}};
        for (cplx z : samples)
            c.observe(rank_one_exp_rep_check(alphas, z, rep_grid) / 1e-5);

        const double target = 2.0 * std::log(2.0);
        c.observe(std::abs(rank_one_criterion(alphas).log_weight_sum - target) / 1e-4);
        return c;
    });

    report("real flattening: imaginary part, frequency defect, worked example", [] {
        Criterion c;
        c.tolerance = 1.0;
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 2 + trial % 4;
            Contraction t1 = random_contraction(n, ContractionKind::Strict, 5100 + trial);
            Contraction t0 = random_contraction(n, ContractionKind::Strict, 4200 + trial);
            SsfResult s = ssf_canonical(t1, t0, 1024, 32);
            SsfResult flat = flatten_representative(s);
            std::vector<cplx> defect(s.values.size());
            for (std::size_t k = 0; k < s.values.size(); ++k) {
                c.observe(std::abs(flat.values[k].imag()) / 1e-9);
                defect[k] = s.values[k] - flat.values[k];
            }
            BoundaryGrid dg(defect.size(), 1.0);
            dg.values = defect;
            FourierSeries fs = fourier_transform_grid(dg);
            for (long m = 1; m <= 16; ++m) c.observe(std::abs(fs.at(-m)) / 1e-8);
        }

        // xi = i e^{-i theta} flattens to 2 sin(theta)
        BoundaryGrid g(256, 1.0);
        std::vector<cplx> xi(256);
        for (std::size_t k = 0; k < 256; ++k)
            xi[k] = cplx(0, 1) * std::exp(cplx(0, -g.theta(k)));
        std::vector<double> flat = flatten_values(xi);
        for (std::size_t k = 0; k < 256; ++k)
            c.observe(std::abs(flat[k] - 2.0 * std::sin(g.theta(k))) / 1e-10);
        return c;
    });

    report("outer-factor bounds and determinant chain rule", [] {
        Criterion c;
        c.tolerance = 1.0;
        RealGrid grid = make_symmetric_log_grid(1e-3, 1e3, 1200);
        for (int trial = 0; trial < 12; ++trial) {
            Matrix b = random_accumulative(4, 6100 + trial);
            Matrix v = random_ordered_split(b, 6300 + trial);
            OuterChecks oc = outer_rep_check(b, v, grid);
            c.observe(std::max(0.0, oc.modulus_excess) / 1e-9);
            c.observe(oc.schur_defect / 1e-9);
            c.observe(std::max(0.0, oc.re_defect) / 1e-9);
            c.observe(oc.poisson_residual / 2e-4);
        }
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 2 + trial % 4;
            Contraction t2 = random_contraction(n, ContractionKind::Strict, 6500 + trial);
            Contraction t1 = random_contraction(n, ContractionKind::Strict, 6600 + trial);
            Contraction t0 = random_contraction(n, ContractionKind::Strict, 6700 + trial);
            CounterRng rng(6800 + trial, 17);
            for (int k = 0; k < 4; ++k) {
                cplx lambda = std::polar(rng.uniform(1.2, 2.2), rng.uniform(0.0, 2.0 * kPi));
                c.observe(chain_rule_check(t2, t1, t0, lambda) / 1e-9);
            }
        }
        return c;
    });

    report("cayley transport: resolvent identity and half-plane trace", [] {
        Criterion c;
        c.tolerance = 1.0;
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 2 + trial % 4;
            Contraction t = random_contraction(n, ContractionKind::Strict, 7100 + trial);
            CounterRng rng(7300 + trial, 19);
            for (int k = 0; k < 3; ++k) {
                cplx lambda = std::polar(rng.uniform(1.2, 2.5), rng.uniform(0.0, 2.0 * kPi));
                const double inflate = (1.0 + std::abs(lambda)) * (1.0 + std::abs(lambda));
                c.observe(resolvent_identity_check(t, lambda) / (1e-9 * inflate));
            }
        }
        RealGrid grid = make_symmetric_log_grid(1e-4, 1e4, 1200);
        for (int trial = 0; trial < 8; ++trial) {
            const std::size_t n = 2 + trial % 3;
            Contraction t1 = random_contraction(n, ContractionKind::Strict, 7500 + trial);
            Contraction t0 = random_contraction(n, ContractionKind::Strict, 7700 + trial);
            MDissipative l1 = cayley_T_to_L(t1);
            MDissipative l0 = cayley_T_to_L(t0);
            SsfResult s = ssf_halfplane(l1, l0, grid);
            c.observe(s.residuals.mass_residual / 1e-6);
            CounterRng rng(7900 + trial, 21);
            for (int k = 0; k < 4; ++k) {
                cplx tau(rng.uniform(-3.0, 3.0), rng.uniform(-2.0, -0.35));
                c.observe(verify_halfplane_trace(s, l1, l0, tau) / 1e-6);
            }
        }
        return c;
    });

    report("cli regression: reference config, exit 0, byte-stable csv",
           [&ssf_lab, &reference_config, &out_dir] {
               Criterion c;
               c.tolerance = 0.5;  // binary outcome: 0 clean, 1 broken
               const std::string run1 = out_dir + "/reference_run1.csv";
               const std::string run2 = out_dir + "/reference_run2.csv";
               const std::string base = "\"" + ssf_lab + "\" all --config \"" +
                                        reference_config + "\"";
               const auto start = std::chrono::steady_clock::now();
               const int status1 = std::system((base + " --out \"" + run1 + "\"").c_str());
               const int status2 = std::system((base + " --out \"" + run2 + "\"").c_str());
               const double seconds =
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                       .count();
               const std::string bytes1 = read_file(run1);
               const std::string bytes2 = read_file(run2);
               const bool ok = status1 == 0 && status2 == 0 && !bytes1.empty() &&
                               bytes1 == bytes2 && seconds <= 300.0;
               if (!ok) c.observe(1.0);
               char note[96];
               std::snprintf(note, sizeof note, "(two runs in %.1f s, %zu bytes each)",
                             seconds, bytes1.size());
               c.note = note;
               return c;
           });

    if (!g_all_pass) {
        std::printf("acceptance: FAILURES PRESENT\n");
        return 1;
    }
    std::printf("acceptance: all criteria pass\n");
    return 0;
}
