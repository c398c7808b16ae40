// rng.hpp — deterministic per-trajectory random streams.
//
// Each trajectory owns a stream derived from (base_seed, trajectory_index),
// so ensembles are bit-reproducible no matter how trajectories are scheduled
// across threads. The generator is xoshiro256++ seeded through splitmix64;
// normals come from a Box-Muller transform so the byte stream does not
// depend on the C++ standard library implementation.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace kelsim {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RngStream {
public:
    RngStream(std::uint64_t base_seed, std::uint64_t stream_index) {
        std::uint64_t mix = base_seed;
        (void)splitmix64(mix);
        mix ^= 0x6a09e667f3bcc909ULL + stream_index * 0x9e3779b97f4a7c15ULL;
        for (auto& word : state_) word = splitmix64(mix);
        have_spare_ = false;
        spare_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in (0, 1]; never returns 0 so log() below is safe.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; caches the second variate.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    bool have_spare_;
    double spare_;
};

}  // namespace kelsim
