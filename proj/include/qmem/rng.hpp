#pragma once

#include <cmath>
#include <cstdint>

namespace qmem {

/// splitmix64 step; used only to expand seeds into engine state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256** seeded from a (base seed, stream index) pair.
///
/// Every trial owns its own stream keyed by trial index, so batches are
/// bit-for-bit reproducible for any worker count, and the samplers below
/// are fixed algorithms so results do not depend on the standard library.
class TrialRng {
public:
    TrialRng(std::uint64_t base_seed, std::uint64_t stream) {
        std::uint64_t sm = base_seed;
        splitmix64(sm);
        sm ^= 0xa5a5a5a5a5a5a5a5ULL + stream * 0x9e3779b97f4a7c15ULL;
        for (auto& w : s_) w = splitmix64(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0,1]; safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform(); }

    /// Bose-Einstein (geometric): P(n) = nbar^n / (1+nbar)^(n+1).
    std::uint32_t bose_einstein(double nbar) {
        if (nbar <= 0.0) return 0;
        // inversion: n = floor(log(u)/log(q)), q = nbar/(1+nbar)
        const double log_q = std::log(nbar / (1.0 + nbar));
        const double x = std::log(uniform_pos()) / log_q;
        return x >= 4.0e9 ? 4000000000u : static_cast<std::uint32_t>(x);
    }

    std::uint32_t bernoulli(double p) { return uniform() < p ? 1u : 0u; }

    /// Binomial(n, p) by explicit Bernoulli draws; n is small in this model.
    std::uint32_t binomial(std::uint32_t n, double p) {
        if (p <= 0.0) return 0;
        if (p >= 1.0) return n;
        std::uint32_t k = 0;
        for (std::uint32_t i = 0; i < n; ++i) k += bernoulli(p);
        return k;
    }

    /// Poisson via multiplication of uniforms; fine for the mean <~ 50 regime.
    std::uint32_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        double prod = uniform_pos();
        std::uint32_t k = 0;
        while (prod > limit) {
            prod *= uniform_pos();
            ++k;
        }
        return k;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace qmem
