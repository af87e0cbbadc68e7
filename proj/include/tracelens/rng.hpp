#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tracelens {

// Deterministic random source. std::mt19937_64 has a standard-mandated
// output sequence, and the transforms below avoid std::*_distribution,
// whose results vary between standard library implementations. Same seed,
// same stream, on every toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0, 1), 53-bit mantissa.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Unit-rate exponential via inversion.
    double exponential() {
        return -std::log1p(-uniform());
    }

    // Index draw from non-negative weights summing to roughly one.
    // Falls back to the last positive weight when rounding leaves
    // the cumulative sum short of the draw.
    int categorical(const double* w, int n) {
        double u = uniform();
        double acc = 0.0;
        int last_positive = -1;
        for (int i = 0; i < n; ++i) {
            if (w[i] > 0.0) last_positive = i;
            acc += w[i];
            if (u < acc) return i;
        }
        return last_positive >= 0 ? last_positive : n - 1;
    }

    // Symmetric Dirichlet(1): normalized exponentials.
    void dirichlet(double* out, int n) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            out[i] = exponential();
            sum += out[i];
        }
        for (int i = 0; i < n; ++i) out[i] /= sum;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace tracelens
