#ifndef BPROBE_RNG_HPP
#define BPROBE_RNG_HPP

#include <cstdint>
#include <span>
#include <string>

namespace bprobe {

// SplitMix64. Used everywhere a reproducible stream is needed so that
// outputs do not depend on the standard library's distribution internals.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform double in [-1, 1).
    double next_signed() { return 2.0 * next_double() - 1.0; }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

// FNV-1a over a token-id sequence, mixed with a seed. Gives the mock model a
// stable context fingerprint.
inline std::uint64_t hash_context(std::uint64_t seed, std::span<const int> ids) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (int id : ids) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(id));
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_string(std::uint64_t seed, const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace bprobe

#endif  // BPROBE_RNG_HPP
