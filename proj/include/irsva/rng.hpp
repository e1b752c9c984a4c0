// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 irsva contributors
//
// Deterministic counter-keyed random streams. Every consumer derives its own
// stream from (master_seed, tag, indices...), so draws never depend on the
// order in which other components consume randomness or on thread scheduling.

#pragma once

#include "irsva/types.hpp"

#include <array>
#include <cstdint>
#include <cmath>

namespace irsva {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Stream tags; fixed numeric values are part of the determinism contract.
enum class StreamTag : std::uint64_t {
    geometry = 1,
    channel = 2,        // per-link small-scale fading
    uncertainty = 3,    // learning samples of the uncertain links
    phase_init = 4,     // initial IRS phases per pair
    verify = 5,         // fresh draws for Monte-Carlo outage verification
    assignment = 6,     // random reuse permutation
    misc = 7,
};

// xoshiro256++ seeded through splitmix64 from a mixed key.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, StreamTag tag,
              std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0) {
        std::uint64_t key = master_seed;
        key ^= 0x6a09e667f3bcc909ULL + static_cast<std::uint64_t>(tag);
        key = detail::splitmix64(key);
        key ^= a * 0xd1342543de82ef95ULL + 1;
        key = detail::splitmix64(key);
        key ^= b * 0xa0761d6478bd642fULL + 1;
        key = detail::splitmix64(key);
        key ^= c * 0xe7037ed1a0b428dbULL + 1;
        std::uint64_t sm = key;
        for (auto& w : state_) w = detail::splitmix64(sm);
        have_spare_ = false;
        spare_ = 0.0;
    }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
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

    // Uniform in [0,1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (explicit, so results are identical on
    // every platform; std::normal_distribution is implementation-defined).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_uniform();
        } while (u1 <= 0.0);
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // CN(0,1): independent real/imag parts, each N(0, 1/2).
    cplx next_cn01() {
        const double s = 1.0 / std::sqrt(2.0);
        const double re = next_normal() * s;
        const double im = next_normal() * s;
        return {re, im};
    }

private:
    std::array<std::uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace irsva
