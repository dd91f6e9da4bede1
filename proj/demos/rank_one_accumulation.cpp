// Walkthrough: the rank-one accumulation model.  A summable sequence of
// couplings a_n yields boundary data eta(t) = sum (1/2) log(1 + a_n^2/t^2);
// whether a shift function exists is governed by sum a_n log(1/a_n).

#include <cstdio>
#include <complex>
#include <vector>

#include "ssflab/ssf.hpp"

using namespace ssflab;

static void describe(const char* name, const std::vector<double>& alphas) {
    RankOneCriterion crit = rank_one_criterion(alphas);
    std::printf("%-22s  terms %4zu  sum(a) %.6f  sum(a log 1/a) %.6f\n", name,
                alphas.size(), crit.alpha_sum, crit.log_weight_sum);
}

int main() {
    std::printf("coupling sequences and the summability criterion\n");
    describe("geometric q=1/2", geometric_alphas(0.5, 20));
    describe("geometric q=1/3", geometric_alphas(1.0 / 3.0, 15));
    describe("harmonic-log 100", harmonic_log_alphas(100));
    describe("harmonic-log 10000", harmonic_log_alphas(10000));
    std::printf("(the harmonic-log criterion column keeps growing: no real shift there)\n\n");

    const std::vector<double> alphas = geometric_alphas(0.5, 20);

    // mass of eta against the closed form pi * sum(a)
    RealGrid grid = make_symmetric_log_grid(1e-8, 1e6, 2000);
    IntegralCheck mass = rank_one_eta_mass(alphas, grid);
    std::printf("integral of eta = %.9f, target pi*sum(a) = %.9f (rel. residual %.2e)\n",
                mass.integral, mass.target, mass.residual);

    // the determinant as an exponential of the boundary data, checked below
    // the real axis where the representation holds
    RealGrid rep_grid = make_symmetric_log_grid(1e-12, 1e4, 9000);
    for (cplx z : {cplx(0.0, -0.01), cplx(1.5, -0.08), cplx(-1.8, -1.2)}) {
        cplx product = rank_one_product_det(alphas, z);
        double rel = rank_one_exp_rep_check(alphas, z, rep_grid);
        std::printf("z = (%5.2f, %5.2f): |det| = %.6e, exp-rep rel. defect %.2e\n", z.real(),
                    z.imag(), std::abs(product), rel);
    }
    return 0;
}
