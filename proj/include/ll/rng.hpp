#pragma once

#include <cstdint>
#include <cmath>
#include <string>
#include <string_view>

namespace ll {

// Deterministic RNG used everywhere in the library.  xoshiro256++ core with
// splitmix64 seeding, plus hand-rolled samplers so that streams are
// bit-identical across standard libraries and platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
        have_gauss_ = false;
    }

    // Stream splitting: child k of a seeded stream is an independent,
    // reproducible generator.  Used to derive replica seeds from a master
    // seed: child(master, k) for replica k.
    static uint64_t child_seed(uint64_t master, uint64_t k) {
        uint64_t x = master ^ (0x9e3779b97f4a7c15ULL + k * 0xbf58476d1ce4e5b9ULL);
        x = splitmix64(x);
        return splitmix64(x);
    }
    static uint64_t child_seed(uint64_t master, std::string_view name) {
        uint64_t h = 1469598103934665603ULL;  // FNV-1a over the test name
        for (unsigned char c : name) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return child_seed(master, h);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in (0,1); never returns 0 or 1.
    double uniform() {
        uint64_t u = next_u64() >> 11;  // 53 bits
        double v = (static_cast<double>(u) + 0.5) * 0x1.0p-53;
        return v;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    uint64_t uniform_index(uint64_t n) {  // 0..n-1, tiny modulo bias is fine here
        return next_u64() % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller, cached pair.
    double gauss() {
        if (have_gauss_) {
            have_gauss_ = false;
            return cached_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_gauss_ = true;
        return r * std::cos(a);
    }

    double exponential() { return -std::log(uniform()); }

    // Gamma(shape, scale=1), Marsaglia-Tsang; valid for any shape > 0.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = gauss();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

    // Poisson by inversion (small mean) or PTRS rejection (large mean).
    uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 30.0) {
            double l = std::exp(-mean), p = 1.0;
            uint64_t k = 0;
            do {
                ++k;
                p *= uniform();
            } while (p > l);
            return k - 1;
        }
        // PTRS (Hoermann).
        double b = 0.931 + 2.53 * std::sqrt(mean);
        double a = -0.059 + 0.02483 * b;
        double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            double u = uniform() - 0.5;
            double v = uniform();
            double us = 0.5 - std::fabs(u);
            double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<uint64_t>(k);
            if (k < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * std::log(mean) - mean - std::lgamma(k + 1.0)) {
                return static_cast<uint64_t>(k);
            }
        }
    }

    // Noncentral chi-squared (dof, noncentrality), exact via Poisson mixing.
    double noncentral_chi_squared(double dof, double noncentrality) {
        uint64_t j = poisson(0.5 * noncentrality);
        return chi_squared(dof + 2.0 * static_cast<double>(j));
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4];
    bool have_gauss_;
    double cached_ = 0.0;
};

}  // namespace ll
