// Seeded xoshiro256** generator with Box-Muller normal draws.
// Same seed gives a bit-identical stream on any platform.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dpf {

class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& si : s_) si = splitmix64(x);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    // Independent child stream derived from this one.
    Rng split() { return Rng(next_u64() ^ 0x9e3779b97f4a7c15ULL); }

    // Serializable state (4 words + Box-Muller cache).
    struct State {
        std::array<uint64_t, 4> s;
        bool has_cache;
        double cache;
    };
    State state() const { return {s_, has_cache_, cache_}; }
    void set_state(const State& st) {
        s_ = st.s;
        has_cache_ = st.has_cache;
        cache_ = st.cache;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::array<uint64_t, 4> s_{};
    bool has_cache_ = false;
    double cache_ = 0.0;
};

}  // namespace dpf
