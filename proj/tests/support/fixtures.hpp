#ifndef MFED_TESTS_FIXTURES_HPP
#define MFED_TESTS_FIXTURES_HPP

#include <json.hpp>

#include "mfed/image.hpp"
#include "mfed/util.hpp"

namespace mfed::test {

inline img::ImageVolume flat_image(std::uint32_t w, std::uint32_t h, std::uint16_t value) {
    img::ImageVolume img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h, value);
    return img;
}

struct ContainerSpec {
    std::string patient_name = "DOE^JANE";
    std::string patient_id = "H12-34X";
    std::string birth_date = "1956-03-14";
    std::string study_date = "2003-05-02";
    std::string study_id = "S99001";
    std::string consent = "Y";
    std::vector<std::pair<std::string, std::string>> views = {{"CC", "L"}, {"MLO", "L"}};
    std::uint32_t size = 32;
    std::uint16_t base_value = 1200;
    img::AcquisitionParams acq;
};

// Builds a small valid .mgc container; view payloads get distinct flat levels
// so fetched bytes are distinguishable.
inline util::Bytes make_container(const ContainerSpec& spec) {
    nlohmann::json images = nlohmann::json::array();
    std::vector<img::ImageVolume> payloads;
    int k = 0;
    for (const auto& [view, laterality] : spec.views) {
        nlohmann::json hi = spec.acq.to_json();
        hi["view"] = view;
        hi["laterality"] = laterality;
        hi["width"] = spec.size;
        hi["height"] = spec.size;
        hi["bits"] = 16;
        hi["spacing_mm"] = 0.1;
        images.push_back(hi);
        payloads.push_back(
            flat_image(spec.size, spec.size, static_cast<std::uint16_t>(spec.base_value + 7 * k)));
        ++k;
    }
    nlohmann::json header{{"patient_name", spec.patient_name},
                          {"patient_id", spec.patient_id},
                          {"birth_date", spec.birth_date},
                          {"study_date", spec.study_date},
                          {"study_id", spec.study_id},
                          {"consent", spec.consent},
                          {"images", images}};
    return img::encode_container(header, payloads);
}

}  // namespace mfed::test

#endif
