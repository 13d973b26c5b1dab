#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hjbkit {

/// Philox4x32-10 counter-based bijection (Salmon et al.). Stateless: the
/// output depends only on (counter, key), so a stream can be addressed by
/// any index without replaying earlier draws.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter ctr, Key key) noexcept {
        constexpr std::uint32_t kMul0 = 0xD2511F53u;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

/// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derive a seed for sub-task `index` of a run seeded with `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ull));
}

/// Gaussian stream for one Monte Carlo path, keyed by (seed, path index).
/// Each Philox block yields two standard normals via Box-Muller.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_(path) {}

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const auto out = Philox4x32::apply(
            {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
             static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)},
            key_);
        ++block_;
        // 53-bit uniforms; u1 in (0,1] so log(u1) is finite.
        const std::uint64_t a = (std::uint64_t{out[0]} << 32 | out[1]) >> 11;
        const std::uint64_t b = (std::uint64_t{out[2]} << 32 | out[3]) >> 11;
        const double u1 = (static_cast<double>(a) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(b) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Uniform on [0,1), consuming one Philox block.
    double uniform() noexcept {
        const auto out = Philox4x32::apply(
            {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
             static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)},
            key_);
        ++block_;
        const std::uint64_t a = (std::uint64_t{out[0]} << 32 | out[1]) >> 11;
        return static_cast<double>(a) * 0x1.0p-53;
    }

private:
    Philox4x32::Key key_;
    std::uint64_t path_;
    std::uint64_t block_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace hjbkit
