#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace matepred::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stateless hash of a key tuple; the basis of every counter-based draw.
inline constexpr std::uint64_t hash_keys(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                         std::uint64_t d) noexcept {
    std::uint64_t h = splitmix64(a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return splitmix64(h ^ d);
}

/// Uniform in [0, 1) from the top 53 bits.
inline constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double counter_uniform(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                              std::uint64_t d) noexcept {
    return to_unit(hash_keys(a, b, c, d));
}

/// Box-Muller standard normal keyed on (a, b, c, d).
inline double counter_normal(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                             std::uint64_t d) noexcept {
    const std::uint64_t h = hash_keys(a, b, c, d);
    const double u1 = 1.0 - to_unit(h);  // (0, 1]
    const double u2 = to_unit(splitmix64(h ^ 0xD1B54A32D192ED03ull));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// FNV-1a over bytes, mixed once more.
inline constexpr std::uint64_t hash_string(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return splitmix64(h);
}

/// Sequential generator. Distribution mappings are hand-rolled so results do
/// not depend on the standard library's distribution implementations.
class Generator {
public:
    explicit Generator(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform() { return to_unit(engine_()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n >= 1 (rejection sampling, unbiased).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace matepred::rng
