#include "mfed/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mfed/errors.hpp"
#include "mfed/util.hpp"

using nlohmann::json;

namespace mfed::gen {

namespace {

constexpr std::uint32_t kImageSize = 128;
constexpr double kFattyLevel = 1000.0;
constexpr double kDenseLevel = 3000.0;
constexpr double kNoiseSigma = 30.0;
constexpr double kCalcAmplitude = 600.0;

const char* kSurnames[] = {"VANVLIET", "OKONKWO",  "GRIMALDI", "SZYMANSKI", "LINDQVIST",
                           "FERREIRA", "KOVALENKO", "MURPHY",   "JOHANSSON", "ROSSI",
                           "NOVAK",    "PAPPAS",   "GONZALEZ", "WHITFIELD", "BRENNAN",
                           "KUZNETSOV", "MORETTI",  "SANTORO",  "WALLIN",    "DUPONT"};
const char* kGivenNames[] = {"GRETA",  "AMARA",  "LUCIA",   "WANDA",  "INGRID",
                             "MARTA",  "OLENKA", "SIOBHAN", "ASTRID", "PAOLA",
                             "HANNA",  "ELENI",  "XIMENA",  "JUNE",   "NUALA",
                             "YELENA", "CHIARA", "BIANCA",  "MAJA",   "COLETTE"};
const char* kIdLetters = "GHJKMNPQRSTVWXYZ";

struct StudyTruth {
    json manifest;
    util::Bytes container;
};

StudyTruth make_study(std::size_t index, std::uint64_t seed) {
    // avalanche (seed, index) into an independent stream; a plain
    // seed + k*increment would alias splitmix64's own stepping and let
    // adjacent studies share draws
    util::Rng seeder(seed ^ (0xA0761D6478BD642Full * (index + 1)));
    util::Rng rng(seeder.next_u64());

    char patient_id[32];
    std::snprintf(patient_id, sizeof patient_id, "PAT-%c%03u-%c%03u",
                  kIdLetters[rng.below(16)], static_cast<unsigned>(index / 1000),
                  kIdLetters[rng.below(16)], static_cast<unsigned>(index % 1000));
    std::string patient_name = std::string(kSurnames[rng.below(20)]) + "^" +
                               kGivenNames[rng.below(20)];
    char birth_date[16];
    std::snprintf(birth_date, sizeof birth_date, "%04d-%02d-%02d",
                  static_cast<int>(rng.range(1935, 1979)), static_cast<int>(rng.range(1, 12)),
                  static_cast<int>(rng.range(1, 28)));
    char study_date[16];
    std::snprintf(study_date, sizeof study_date, "%04d-%02d-%02d",
                  static_cast<int>(rng.range(2002, 2004)), static_cast<int>(rng.range(1, 12)),
                  static_cast<int>(rng.range(1, 28)));
    // a per-seed tag keeps study ids from different corpora distinct, so
    // several corpora can land on one node without conflicts
    util::Rng tag_rng(seed ^ 0xC2B2AE3D27D4EB4Full);
    char study_id[16];
    std::snprintf(study_id, sizeof study_id, "S%c%c%05zu", kIdLetters[tag_rng.below(16)],
                  kIdLetters[tag_rng.below(16)], index);
    std::string laterality = rng.chance(0.5) ? "L" : "R";
    double planted_density = rng.uniform(0.2, 0.8);

    json images_header = json::array();
    json images_manifest = json::array();
    std::vector<img::ImageVolume> payloads;

    for (const std::string view : {"CC", "MLO"}) {
        // full-frame tissue: dense region left of a straight split column so
        // the median residual carries no boundary artifacts; the exact planted
        // fraction is the split's pixel count
        const int split_col =
            static_cast<int>(std::lround(planted_density * kImageSize));
        std::vector<double> tissue(kImageSize * kImageSize, kFattyLevel);
        std::size_t dense_px = 0;
        for (std::uint32_t y = 0; y < kImageSize; ++y) {
            for (std::uint32_t x = 0; x < kImageSize; ++x) {
                bool is_dense = laterality == "L" ? static_cast<int>(x) < split_col
                                                  : static_cast<int>(x) >= kImageSize - split_col;
                if (is_dense) {
                    ++dense_px;
                    tissue[y * kImageSize + x] = kDenseLevel;
                }
            }
        }
        double exact_density = static_cast<double>(dense_px) / tissue.size();

        // plant micro-calcifications away from the split line and borders
        std::size_t want = rng.below(6);
        std::vector<std::pair<double, double>> centers;
        const double margin = 14.0;
        for (std::size_t k = 0; k < want; ++k) {
            for (int attempt = 0; attempt < 120; ++attempt) {
                double x = rng.range(8, kImageSize - 10);
                double y = rng.range(8, kImageSize - 10);
                double split_x = laterality == "L" ? split_col : kImageSize - split_col;
                if (std::abs(x - split_x) < margin) continue;
                bool clash = false;
                for (const auto& c : centers)
                    if (std::abs(c.first - (x + 0.5)) < 18 && std::abs(c.second - (y + 0.5)) < 18)
                        clash = true;
                if (clash) continue;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        tissue[(static_cast<std::size_t>(y) + dy) * kImageSize +
                               static_cast<std::size_t>(x) + dx] += kCalcAmplitude;
                centers.emplace_back(x + 0.5, y + 0.5);
                break;
            }
        }
        std::sort(centers.begin(), centers.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second < b.second : a.first < b.first;
        });

        img::AcquisitionParams acq;
        acq.tube_kvp = std::round(rng.uniform(26.0, 32.0) * 10.0) / 10.0;
        acq.exposure_mas = std::round(rng.uniform(80.0, 125.0) * 10.0) / 10.0;
        acq.detector_gain = std::round(rng.uniform(0.8, 1.25) * 100.0) / 100.0;
        acq.detector_offset = static_cast<double>(rng.range(0, 200));
        const double exposure_scale = (acq.tube_kvp * acq.exposure_mas) / (28.0 * 100.0);

        img::ImageVolume img;
        img.width = img.height = kImageSize;
        img.spacing_mm = 0.1;
        img.pixels.resize(tissue.size());
        for (std::size_t i = 0; i < tissue.size(); ++i) {
            double t = tissue[i] + kNoiseSigma * rng.gaussian();
            double v = acq.detector_gain * (t * exposure_scale) + acq.detector_offset;
            long r = std::lround(v);
            img.pixels[i] = static_cast<std::uint16_t>(std::clamp(r, 1L, 65535L));
        }
        payloads.push_back(img);

        json acq_json = acq.to_json();
        json hi = acq_json;
        hi["view"] = view;
        hi["laterality"] = laterality;
        hi["width"] = kImageSize;
        hi["height"] = kImageSize;
        hi["bits"] = 16;
        hi["spacing_mm"] = 0.1;
        images_header.push_back(hi);

        json calcs = json::array();
        for (const auto& [cx, cy] : centers) calcs.push_back(json{{"x", cx}, {"y", cy}});
        images_manifest.push_back(json{{"view", view},
                                       {"laterality", laterality},
                                       {"width", kImageSize},
                                       {"height", kImageSize},
                                       {"acquisition", acq_json},
                                       {"density_fraction", exact_density},
                                       {"dense_level", kDenseLevel},
                                       {"fatty_level", kFattyLevel},
                                       {"noise_sigma", kNoiseSigma},
                                       {"calc_amplitude", kCalcAmplitude},
                                       {"microcalcs", calcs}});
    }

    json header{{"patient_name", patient_name},
                {"patient_id", patient_id},
                {"birth_date", birth_date},
                {"study_date", study_date},
                {"study_id", study_id},
                {"consent", "Y"},
                {"images", images_header}};

    char filename[32];
    std::snprintf(filename, sizeof filename, "study-%05zu.mgc", index);
    StudyTruth out;
    out.container = img::encode_container(header, payloads);
    out.manifest = json{{"container", filename},
                        {"patient_id", patient_id},
                        {"patient_name", patient_name},
                        {"birth_date", birth_date},
                        {"study_date", study_date},
                        {"study_id", study_id},
                        {"laterality", laterality},
                        {"images", images_manifest}};
    return out;
}

}  // namespace

json generate_corpus(std::size_t count, std::uint64_t seed,
                     const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    json studies = json::array();
    for (std::size_t i = 1; i <= count; ++i) {
        StudyTruth study = make_study(i, seed);
        util::write_file(out_dir / study.manifest["container"].get<std::string>(),
                         study.container);
        studies.push_back(std::move(study.manifest));
    }
    json manifest{{"seed", seed}, {"count", count}, {"studies", studies}};
    util::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

PlantedImage planted_spot_image(std::uint32_t width, std::uint32_t height, double level,
                                double sigma, double amplitude, std::size_t spots,
                                std::uint64_t seed) {
    util::Rng rng(seed);
    PlantedImage out;
    out.image.width = width;
    out.image.height = height;
    out.image.pixels.resize(static_cast<std::size_t>(width) * height);

    for (std::size_t k = 0; k < spots; ++k) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            double x = rng.range(8, static_cast<std::int64_t>(width) - 10);
            double y = rng.range(8, static_cast<std::int64_t>(height) - 10);
            bool clash = false;
            for (const auto& c : out.centers)
                if (std::abs(c.first - (x + 0.5)) < 24 && std::abs(c.second - (y + 0.5)) < 24)
                    clash = true;
            if (clash) continue;
            out.centers.emplace_back(x + 0.5, y + 0.5);
            break;
        }
    }
    std::vector<double> plant(out.image.pixels.size(), 0.0);
    for (const auto& [cx, cy] : out.centers) {
        auto x0 = static_cast<std::size_t>(cx - 0.5);
        auto y0 = static_cast<std::size_t>(cy - 0.5);
        for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx)
                plant[(y0 + dy) * width + x0 + dx] = amplitude;
    }
    for (std::size_t i = 0; i < out.image.pixels.size(); ++i) {
        double v = level + plant[i] + sigma * rng.gaussian();
        out.image.pixels[i] = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
    }
    std::sort(out.centers.begin(), out.centers.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    return out;
}

}  // namespace mfed::gen
