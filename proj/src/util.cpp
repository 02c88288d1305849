#include "mfed/util.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "mfed/errors.hpp"

namespace mfed::util {

static const char* kHexDigits = "0123456789abcdef";

std::string hex_encode(const std::uint8_t* data, std::size_t len) {
    std::string out;
    out.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(kHexDigits[data[i] >> 4]);
        out.push_back(kHexDigits[data[i] & 0xF]);
    }
    return out;
}

std::string hex_encode(const Bytes& b) { return hex_encode(b.data(), b.size()); }

static int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

Bytes hex_decode(std::string_view hex) {
    if (hex.size() % 2 != 0) throw err_malformed("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_val(hex[2 * i]);
        int lo = hex_val(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw err_malformed("invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

static const char* kB64 =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::uint8_t* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= len; i += 3) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(kB64[(v >> 6) & 63]);
        out.push_back(kB64[v & 63]);
    }
    if (i + 1 == len) {
        std::uint32_t v = data[i] << 16;
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.append("==");
    } else if (i + 2 == len) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(kB64[(v >> 18) & 63]);
        out.push_back(kB64[(v >> 12) & 63]);
        out.push_back(kB64[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::string base64_encode(const Bytes& b) { return base64_encode(b.data(), b.size()); }

static int b64_val(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw err_malformed("base64 length not a multiple of 4");
    Bytes out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) {
            char c = text[i + k];
            if (c == '=') {
                if (i + 4 != text.size() || k < 2) throw err_malformed("misplaced base64 padding");
                ++pad;
                v <<= 6;
            } else {
                if (pad) throw err_malformed("data after base64 padding");
                int d = b64_val(c);
                if (d < 0) throw err_malformed("invalid base64 character");
                v = (v << 6) | static_cast<std::uint32_t>(d);
            }
        }
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

std::string now_iso8601() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

Bytes read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw err_internal("cannot open " + p.string());
    f.seekg(0, std::ios::end);
    auto n = f.tellg();
    f.seekg(0);
    Bytes out(static_cast<std::size_t>(n));
    if (n > 0) f.read(reinterpret_cast<char*>(out.data()), n);
    if (!f) throw err_internal("short read on " + p.string());
    return out;
}

std::string read_text_file(const std::filesystem::path& p) {
    Bytes b = read_file(p);
    return std::string(b.begin(), b.end());
}

void write_file(const std::filesystem::path& p, const void* data, std::size_t len) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw err_internal("cannot create " + p.string());
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    f.flush();
    if (!f) throw err_internal("short write on " + p.string());
}

void write_file(const std::filesystem::path& p, const Bytes& b) {
    write_file(p, b.data(), b.size());
}

void write_text_file(const std::filesystem::path& p, std::string_view text) {
    write_file(p, text.data(), text.size());
}

double Rng::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double m = std::sqrt(-2.0 * std::log(u1));
    spare_ = m * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return m * std::cos(2.0 * M_PI * u2);
}

}  // namespace mfed::util

namespace mfed {

const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::BadSecret: return "BadSecret";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::Malformed: return "Malformed";
        case ErrorCode::Oversize: return "Oversize";
        case ErrorCode::Unauthorized: return "Unauthorized";
        case ErrorCode::Internal: return "Internal";
        case ErrorCode::Conflict: return "Conflict";
    }
    return "Unknown";
}

}  // namespace mfed
