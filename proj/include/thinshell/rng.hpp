#pragma once

// Counter-based random streams.
//
// Every stochastic quantity in the library is drawn from a stream keyed by
// (seed, purpose tag, index). A stream is a pure function of its key and a
// 64-bit counter, so results never depend on scheduling or on how many
// streams were consumed before.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace thinshell {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// FNV-1a, used for purpose tags and config hashing.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ULL) noexcept {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept {
    return mix64(mix64(seed ^ fnv1a(tag)) + mix64(index ^ 0xD1B54A32D192ED03ULL));
}

class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}
    CounterRng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept
        : key_(stream_key(seed, tag, index)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ ^ mix64(counter_));
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as an argument to log.
    double uniform_pos() noexcept { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    double exponential() noexcept { return -std::log(uniform_pos()); }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace thinshell
