#pragma once

#include <complex>
#include <cstdint>
#include <cmath>

namespace ssflab {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), so experiment rows are reproducible no matter how many draws
// other trials consumed.  The mixer is the splitmix64 finalizer applied to
// a Weyl sequence over the keyed counter.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)))), counter_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + 0x9e3779b97f4a7c15ULL * (++counter_);
        return mix(z);
    }

    // Uniform in [0, 1) with 53 significant bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform on the closed unit disk (rejection-free via sqrt radius).
    std::complex<double> unit_disk() {
        const double pi = 3.14159265358979323846;
        double r = std::sqrt(uniform());
        double phi = uniform(0.0, 2.0 * pi);
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    // Uniform on the unit circle.
    std::complex<double> unit_circle() {
        const double pi = 3.14159265358979323846;
        double phi = uniform(0.0, 2.0 * pi);
        return {std::cos(phi), std::sin(phi)};
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace ssflab
