#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cesim {

/// Counter-based random stream keyed by (master seed, stream name).
///
/// Every policy, trigger or generator owns a named stream derived from the
/// master seed, so draws are independent of the order in which other streams
/// are consumed. Replaying with the same seed reproduces every draw.
class RngStream {
public:
    RngStream() = default;

    RngStream(std::uint64_t master_seed, std::string_view stream_name)
        : key_(mix(master_seed ^ fnv1a(stream_name))) {}

    std::uint64_t next_u64() {
        // splitmix64 over an explicit counter
        std::uint64_t z = key_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        return mix(z);
    }

    /// Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    double next_gaussian() {
        double u1 = next_unit();
        double u2 = next_unit();
        if (u1 <= 0.0) {
            u1 = 0x1.0p-53;
        }
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::uint64_t counter() const { return counter_; }

private:
    static constexpr std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (char c : s) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace cesim
