#ifndef MFED_CORPUS_HPP
#define MFED_CORPUS_HPP

#include <filesystem>
#include <json.hpp>

#include "mfed/image.hpp"

namespace mfed::gen {

// Builds n synthetic study containers plus a ground-truth manifest
// (manifest.json) in out_dir. Pure function of (count, seed): re-running
// yields bit-identical files. Each study holds a CC and an MLO view of one
// breast with a planted dense region (exact pixel-count fraction recorded),
// planted 2x2 micro-calcifications, and acquisition parameters varied around
// the reference operating point.
nlohmann::json generate_corpus(std::size_t count, std::uint64_t seed,
                               const std::filesystem::path& out_dir);

// One synthetic image, exposed for imaging benchmarks: flat background at
// `level` with Gaussian noise `sigma` and `spots` planted 2x2 blocks of
// `amplitude` counts. Returns the image and the planted centers.
struct PlantedImage {
    img::ImageVolume image;
    std::vector<std::pair<double, double>> centers;
};
PlantedImage planted_spot_image(std::uint32_t width, std::uint32_t height, double level,
                                double sigma, double amplitude, std::size_t spots,
                                std::uint64_t seed);

}  // namespace mfed::gen

#endif
