#ifndef MFED_IMAGE_HPP
#define MFED_IMAGE_HPP

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "mfed/util.hpp"

namespace mfed::img {

// Row-major 16-bit pixel grid.
struct ImageVolume {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    double spacing_mm = 0.1;  // pixel pitch
    std::vector<std::uint16_t> pixels;

    std::size_t size() const { return pixels.size(); }
    std::uint16_t at(std::uint32_t x, std::uint32_t y) const { return pixels[y * width + x]; }

    void check() const;  // invariants: dims >= 16, pixels == width*height
};

// Acquisition settings the standardization transform consumes.
struct AcquisitionParams {
    double tube_kvp = 28.0;
    double exposure_mas = 100.0;
    double detector_gain = 1.0;   // g
    double detector_offset = 0.0; // b, counts

    void check() const;  // g > 0, kvp > 0, mas > 0

    nlohmann::json to_json() const;
    static AcquisitionParams from_json(const nlohmann::json& j);
};

// Node image file (.smi): "SMI1", 4-byte big-endian header length, JSON
// header (width, height, spacing_mm, acquisition params), then row-major
// little-endian 16-bit pixels. See docs/protocol.md.
util::Bytes encode_smi(const ImageVolume& img, const AcquisitionParams& acq);
struct SmiFile {
    ImageVolume image;
    AcquisitionParams acq;
};
SmiFile decode_smi(const util::Bytes& bytes);

// Study container (.mgc): "MGC1", 4-byte big-endian header length, JSON
// header block (patient identifiers, study fields, consent, per-image entries
// with bits=16), then per-image little-endian 16-bit payloads in header
// order. See docs/protocol.md.
struct ContainerImage {
    std::string view;        // CC | MLO
    std::string laterality;  // L | R | U (optional in header, default U)
    ImageVolume image;
    AcquisitionParams acq;
};

struct DecodedContainer {
    nlohmann::json header;  // the full header block
    std::vector<ContainerImage> images;
};

util::Bytes encode_container(const nlohmann::json& header,
                             const std::vector<ImageVolume>& payloads);
DecodedContainer decode_container(const util::Bytes& bytes);

}  // namespace mfed::img

#endif
