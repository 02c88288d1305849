#ifndef MFED_UTIL_HPP
#define MFED_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mfed::util {

using Bytes = std::vector<std::uint8_t>;

std::string hex_encode(const std::uint8_t* data, std::size_t len);
std::string hex_encode(const Bytes& b);
Bytes hex_decode(std::string_view hex);  // throws FedError(Malformed) on bad input

std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::string base64_encode(const Bytes& b);
Bytes base64_decode(std::string_view text);  // throws FedError(Malformed) on bad input

// UTC wall-clock timestamp, ISO 8601 ("2026-08-08T12:34:56Z").
std::string now_iso8601();

// Whole-file IO. Throw FedError(Internal) on failure.
Bytes read_file(const std::filesystem::path& p);
std::string read_text_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const void* data, std::size_t len);
void write_file(const std::filesystem::path& p, const Bytes& b);
void write_text_file(const std::filesystem::path& p, std::string_view text);

// Deterministic seedable RNG (splitmix64). std:: engines are portable but the
// distributions are not; everything seeded derives from this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n).
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller.
    double gaussian();

    bool chance(double p) { return uniform() < p; }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mfed::util

#endif
