#ifndef MFED_FRAME_HPP
#define MFED_FRAME_HPP

#include <cstdint>
#include <string>
#include <string_view>

#include "mfed/util.hpp"

namespace mfed::proto {

// Registered message kinds, protocol v1. The set is closed: decode rejects
// anything else (0x50 INGEST is the site-local admin extension, see
// docs/protocol.md).
enum class Kind : std::uint8_t {
    Auth = 0x01,
    AuthOk = 0x02,
    Error = 0x03,
    CatRegister = 0x10,
    CatResolve = 0x11,
    CatList = 0x12,
    SubQuery = 0x20,
    ResultSet = 0x21,
    JobSubmit = 0x30,
    JobStatus = 0x31,
    JobResult = 0x32,
    FetchImage = 0x40,
    ImageData = 0x41,
    Ingest = 0x50,
};

bool kind_is_registered(std::uint8_t k);
const char* kind_name(Kind k);

constexpr std::size_t kMaxBody = 64ull * 1024 * 1024;  // 64 MiB
constexpr std::size_t kHeaderSize = 5;                 // 4-byte BE length + 1-byte kind

struct Frame {
    Kind kind;
    std::string body;  // UTF-8 JSON text
};

// Header (4-byte big-endian length, 1-byte kind) followed by the body,
// bit-exact. Throws FedError(Oversize) past 64 MiB.
util::Bytes encode_frame(Kind kind, std::string_view body);

// Decode outcomes distinguish "feed me more bytes" from hard failures.
enum class DecodeStatus {
    Ok,
    NeedMore,   // fewer bytes than header + declared length
    UnknownKind,
    Oversize,
    MalformedBody,  // body is not valid JSON text
};

struct DecodeResult {
    DecodeStatus status;
    Frame frame;           // valid when status == Ok
    std::size_t consumed;  // bytes consumed when status == Ok, else 0
    std::size_t needed;    // total bytes required, when status == NeedMore
};

DecodeResult decode_frame(const std::uint8_t* data, std::size_t len);
DecodeResult decode_frame(const util::Bytes& b);

}  // namespace mfed::proto

#endif
