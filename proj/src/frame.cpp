#include "mfed/frame.hpp"

#include <json.hpp>

#include "mfed/errors.hpp"

namespace mfed::proto {

bool kind_is_registered(std::uint8_t k) {
    switch (static_cast<Kind>(k)) {
        case Kind::Auth:
        case Kind::AuthOk:
        case Kind::Error:
        case Kind::CatRegister:
        case Kind::CatResolve:
        case Kind::CatList:
        case Kind::SubQuery:
        case Kind::ResultSet:
        case Kind::JobSubmit:
        case Kind::JobStatus:
        case Kind::JobResult:
        case Kind::FetchImage:
        case Kind::ImageData:
        case Kind::Ingest:
            return true;
    }
    return false;
}

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Auth: return "AUTH";
        case Kind::AuthOk: return "AUTH_OK";
        case Kind::Error: return "ERROR";
        case Kind::CatRegister: return "CAT_REGISTER";
        case Kind::CatResolve: return "CAT_RESOLVE";
        case Kind::CatList: return "CAT_LIST";
        case Kind::SubQuery: return "SUBQUERY";
        case Kind::ResultSet: return "RESULTSET";
        case Kind::JobSubmit: return "JOB_SUBMIT";
        case Kind::JobStatus: return "JOB_STATUS";
        case Kind::JobResult: return "JOB_RESULT";
        case Kind::FetchImage: return "FETCH_IMAGE";
        case Kind::ImageData: return "IMAGE_DATA";
        case Kind::Ingest: return "INGEST";
    }
    return "?";
}

util::Bytes encode_frame(Kind kind, std::string_view body) {
    if (body.size() > kMaxBody)
        throw FedError(ErrorCode::Oversize,
                       "frame body of " + std::to_string(body.size()) + " bytes exceeds 64 MiB");
    util::Bytes out;
    out.reserve(kHeaderSize + body.size());
    auto len = static_cast<std::uint32_t>(body.size());
    out.push_back(static_cast<std::uint8_t>(len >> 24));
    out.push_back(static_cast<std::uint8_t>(len >> 16));
    out.push_back(static_cast<std::uint8_t>(len >> 8));
    out.push_back(static_cast<std::uint8_t>(len));
    out.push_back(static_cast<std::uint8_t>(kind));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

DecodeResult decode_frame(const std::uint8_t* data, std::size_t len) {
    DecodeResult r{DecodeStatus::NeedMore, {}, 0, kHeaderSize};
    if (len < kHeaderSize) return r;
    std::uint32_t body_len = (std::uint32_t(data[0]) << 24) | (std::uint32_t(data[1]) << 16) |
                             (std::uint32_t(data[2]) << 8) | std::uint32_t(data[3]);
    if (body_len > kMaxBody) {
        r.status = DecodeStatus::Oversize;
        return r;
    }
    std::uint8_t kind = data[4];
    if (!kind_is_registered(kind)) {
        r.status = DecodeStatus::UnknownKind;
        return r;
    }
    if (len < kHeaderSize + body_len) {
        r.needed = kHeaderSize + body_len;
        return r;
    }
    std::string body(reinterpret_cast<const char*>(data + kHeaderSize), body_len);
    // Bodies are structured text; an empty body is permitted (it decodes as
    // "no payload" for kinds that take none).
    if (!body.empty() && !nlohmann::json::accept(body)) {
        r.status = DecodeStatus::MalformedBody;
        return r;
    }
    r.status = DecodeStatus::Ok;
    r.frame = Frame{static_cast<Kind>(kind), std::move(body)};
    r.consumed = kHeaderSize + body_len;
    return r;
}

DecodeResult decode_frame(const util::Bytes& b) { return decode_frame(b.data(), b.size()); }

}  // namespace mfed::proto
