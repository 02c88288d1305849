#include "mfed/image.hpp"

#include <cstring>

#include "mfed/errors.hpp"

using nlohmann::json;

namespace mfed::img {

void ImageVolume::check() const {
    if (width < 16 || height < 16)
        throw err_malformed("image dimensions must be at least 16x16");
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw err_malformed("pixel buffer does not match width*height");
    if (!(spacing_mm > 0)) throw err_malformed("spacing_mm must be positive");
}

void AcquisitionParams::check() const {
    if (!(detector_gain > 0)) throw err_malformed("detector_gain must be positive");
    if (!(tube_kvp > 0)) throw err_malformed("tube_kvp must be positive");
    if (!(exposure_mas > 0)) throw err_malformed("exposure_mas must be positive");
}

json AcquisitionParams::to_json() const {
    return json{{"tube_kvp", tube_kvp},
                {"exposure_mas", exposure_mas},
                {"detector_gain", detector_gain},
                {"detector_offset", detector_offset}};
}

AcquisitionParams AcquisitionParams::from_json(const json& j) {
    AcquisitionParams p;
    try {
        p.tube_kvp = j.at("tube_kvp").get<double>();
        p.exposure_mas = j.at("exposure_mas").get<double>();
        p.detector_gain = j.at("detector_gain").get<double>();
        p.detector_offset = j.at("detector_offset").get<double>();
    } catch (const json::exception& e) {
        throw err_malformed(std::string("acquisition params: ") + e.what());
    }
    return p;
}

namespace {

void put_u32_be(util::Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32_be(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_pixels_le(util::Bytes& out, const std::vector<std::uint16_t>& px) {
    out.reserve(out.size() + px.size() * 2);
    for (std::uint16_t v : px) {
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
}

std::vector<std::uint16_t> read_pixels_le(const std::uint8_t* p, std::size_t count) {
    std::vector<std::uint16_t> px(count);
    for (std::size_t i = 0; i < count; ++i)
        px[i] = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
    return px;
}

json parse_header_block(const util::Bytes& bytes, const char* magic, std::size_t& payload_off) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), magic, 4) != 0)
        throw err_malformed(std::string("missing ") + magic + " magic");
    std::uint32_t hlen = get_u32_be(bytes.data() + 4);
    if (bytes.size() < 8 + static_cast<std::size_t>(hlen))
        throw err_malformed("header block truncated");
    json header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + hlen, nullptr, false);
    if (header.is_discarded() || !header.is_object())
        throw err_malformed("header block is not a structured-text object");
    payload_off = 8 + hlen;
    return header;
}

}  // namespace

util::Bytes encode_smi(const ImageVolume& img, const AcquisitionParams& acq) {
    img.check();
    acq.check();
    json header{{"width", img.width},
                {"height", img.height},
                {"spacing_mm", img.spacing_mm},
                {"tube_kvp", acq.tube_kvp},
                {"exposure_mas", acq.exposure_mas},
                {"detector_gain", acq.detector_gain},
                {"detector_offset", acq.detector_offset}};
    std::string htext = header.dump();
    util::Bytes out;
    out.insert(out.end(), {'S', 'M', 'I', '1'});
    put_u32_be(out, static_cast<std::uint32_t>(htext.size()));
    out.insert(out.end(), htext.begin(), htext.end());
    append_pixels_le(out, img.pixels);
    return out;
}

SmiFile decode_smi(const util::Bytes& bytes) {
    std::size_t off = 0;
    json header = parse_header_block(bytes, "SMI1", off);
    SmiFile f;
    try {
        f.image.width = header.at("width").get<std::uint32_t>();
        f.image.height = header.at("height").get<std::uint32_t>();
        f.image.spacing_mm = header.value("spacing_mm", 0.1);
    } catch (const json::exception& e) {
        throw err_malformed(std::string("smi header: ") + e.what());
    }
    f.acq = AcquisitionParams::from_json(header);
    std::size_t count = static_cast<std::size_t>(f.image.width) * f.image.height;
    if (bytes.size() - off != count * 2)
        throw err_malformed("smi payload size does not match header dimensions");
    f.image.pixels = read_pixels_le(bytes.data() + off, count);
    f.image.check();
    f.acq.check();
    return f;
}

util::Bytes encode_container(const json& header, const std::vector<ImageVolume>& payloads) {
    if (!header.is_object() || !header.contains("images") || !header["images"].is_array())
        throw err_malformed("container header needs an images array");
    if (header["images"].size() != payloads.size())
        throw err_malformed("container payload count does not match header");
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        const auto& hi = header["images"][i];
        if (hi.value("width", 0u) != payloads[i].width ||
            hi.value("height", 0u) != payloads[i].height)
            throw err_malformed("container image " + std::to_string(i) +
                                " dimensions disagree with header");
    }
    std::string htext = header.dump();
    util::Bytes out;
    out.insert(out.end(), {'M', 'G', 'C', '1'});
    put_u32_be(out, static_cast<std::uint32_t>(htext.size()));
    out.insert(out.end(), htext.begin(), htext.end());
    for (const auto& img : payloads) append_pixels_le(out, img.pixels);
    return out;
}

DecodedContainer decode_container(const util::Bytes& bytes) {
    std::size_t off = 0;
    DecodedContainer c;
    c.header = parse_header_block(bytes, "MGC1", off);
    for (const char* field : {"patient_name", "patient_id", "birth_date", "study_date",
                              "study_id", "consent"}) {
        if (!c.header.contains(field) || !c.header[field].is_string())
            throw err_malformed(std::string("container header missing field: ") + field);
    }
    if (!c.header.contains("images") || !c.header["images"].is_array() ||
        c.header["images"].empty())
        throw err_malformed("container header needs a nonempty images array");

    for (const auto& hi : c.header["images"]) {
        ContainerImage ci;
        try {
            if (hi.at("bits").get<int>() != 16)
                throw err_malformed("container images must be 16-bit");
            ci.view = hi.at("view").get<std::string>();
            ci.laterality = hi.value("laterality", "U");
            ci.image.width = hi.at("width").get<std::uint32_t>();
            ci.image.height = hi.at("height").get<std::uint32_t>();
            ci.image.spacing_mm = hi.value("spacing_mm", 0.1);
        } catch (const json::exception& e) {
            throw err_malformed(std::string("container image entry: ") + e.what());
        }
        if (ci.view != "CC" && ci.view != "MLO")
            throw err_malformed("container image view must be CC or MLO");
        ci.acq = AcquisitionParams::from_json(hi);
        ci.acq.check();
        c.images.push_back(std::move(ci));
    }

    std::size_t need = 0;
    for (const auto& ci : c.images)
        need += static_cast<std::size_t>(ci.image.width) * ci.image.height * 2;
    if (bytes.size() - off != need)
        throw err_malformed("container payload size does not match header dimensions");

    const std::uint8_t* p = bytes.data() + off;
    for (auto& ci : c.images) {
        std::size_t count = static_cast<std::size_t>(ci.image.width) * ci.image.height;
        ci.image.pixels = read_pixels_le(p, count);
        ci.image.check();
        p += count * 2;
    }
    return c;
}

}  // namespace mfed::img
