#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace afr {

// Philox4x64-10 counter-based generator
inline std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr, std::array<std::uint64_t, 2> key) {
    constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ULL, M1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ULL, W1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
        unsigned __int128 p0 = static_cast<unsigned __int128>(M0) * ctr[0];
        unsigned __int128 p1 = static_cast<unsigned __int128>(M1) * ctr[2];
        auto hi0 = static_cast<std::uint64_t>(p0 >> 64), lo0 = static_cast<std::uint64_t>(p0);
        auto hi1 = static_cast<std::uint64_t>(p1 >> 64), lo1 = static_cast<std::uint64_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

// uniform in (0,1], 53 bits
inline double to_unit(std::uint64_t x) { return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53; }

// CN(0,1) draw for (seed, trial, edge): |h|^2 ~ Exp(1), uniform phase
inline std::complex<double> rayleigh_gain(std::uint64_t seed, std::uint64_t trial, std::uint64_t edge) {
    auto r = philox4x64({trial, edge, 0, 0}, {seed, 0x6166725f66616465ULL});
    double mag = std::sqrt(-std::log(to_unit(r[0])));
    double ph = 2.0 * M_PI * to_unit(r[1]);
    return std::polar(mag, ph);
}

}  // namespace afr
