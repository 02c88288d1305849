#ifndef MFED_SHA256_HPP
#define MFED_SHA256_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "mfed/util.hpp"

namespace mfed::util {

using Digest = std::array<std::uint8_t, 32>;

// Incremental SHA-256 (FIPS 180-4). This is the federation content hash; the
// function is pinned in docs/protocol.md so checksums interoperate.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset();
    void update(const void* data, std::size_t len);
    Digest finish();

    static Digest of(const void* data, std::size_t len);
    static Digest of(const Bytes& b) { return of(b.data(), b.size()); }
    static Digest of(std::string_view s) { return of(s.data(), s.size()); }

private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> h_;
    std::uint64_t total_len_ = 0;
    std::array<std::uint8_t, 64> buf_;
    std::size_t buf_len_ = 0;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const Bytes& b);
std::string sha256_hex(std::string_view s);

// HMAC-SHA256 (RFC 2104).
Digest hmac_sha256(std::string_view key, std::string_view message);
std::string hmac_sha256_hex(std::string_view key, std::string_view message);

}  // namespace mfed::util

#endif
