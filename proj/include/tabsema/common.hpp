#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tabsema {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Configuration, catalog or checkpoint mismatch.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// 64-bit FNV-1a. Stable across platforms, used for fingerprints and cache keys.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

std::string trim(std::string_view s);

/// Lowercase, replace ASCII punctuation with spaces, collapse whitespace.
std::string normalize_phrase(std::string_view s);

/// Splitmix-seeded deterministic generator with platform-independent
/// derived distributions (std::uniform_*_distribution is not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n) noexcept { return static_cast<std::size_t>(next() % n); }

    template <typename Seq>
    void shuffle(Seq& seq) noexcept {
        for (std::size_t i = seq.size(); i > 1; --i) {
            std::size_t j = below(i);
            using std::swap;
            swap(seq[i - 1], seq[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace tabsema
