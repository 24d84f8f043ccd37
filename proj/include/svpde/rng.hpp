#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace svpde {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless: the output is a pure
/// function of (key, counter), so any draw can be regenerated independently of scheduling.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;

    explicit constexpr Philox4x32(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    constexpr Counter operator()(Counter ctr) const noexcept {
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const std::array<std::uint32_t, 2>& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }

    std::array<std::uint32_t, 2> key_;
};

/// Uniform in the open interval (0, 1) from 53 random bits.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1.0p-53;
}

/// Keyed draws: (seed, a, b, c) -> uniform / standard normal. The fourth counter word separates
/// independent streams that share the same (a, b, c) coordinates.
class KeyedNormal {
public:
    explicit constexpr KeyedNormal(std::uint64_t seed) noexcept : gen_(seed) {}

    double uniform(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t stream = 0) const noexcept {
        const auto r = gen_({a, b, c, stream});
        return to_open_unit(r[0], r[1]);
    }

    /// Box–Muller on one Philox block.
    double normal(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t stream = 0) const noexcept {
        const auto r = gen_({a, b, c, stream});
        const double u1 = to_open_unit(r[0], r[1]);
        const double u2 = to_open_unit(r[2], r[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    Philox4x32 gen_;
};

}  // namespace svpde
