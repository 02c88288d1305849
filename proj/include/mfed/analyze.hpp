#ifndef MFED_ANALYZE_HPP
#define MFED_ANALYZE_HPP

#include "mfed/errors.hpp"
#include "mfed/image.hpp"

namespace mfed::img {

struct QcReport {
    double mean_brightness = 0.0;  // arithmetic mean, counts
    double contrast = 0.0;         // population standard deviation, counts
    std::string lfn;               // filled by callers that have one
};

struct DensityResult {
    double dense_fraction = 0.0;  // in [0, 1]
    int threshold_used = 0;       // counts
};

struct MicrocalcResult {
    std::vector<std::pair<double, double>> locations;  // (x, y) sub-pixel centroids
    std::size_t count() const { return locations.size(); }
};

// Thrown by breast_density when fewer than 1% of pixels are nonzero.
struct DegenerateError : FedError {
    explicit DegenerateError(std::string d)
        : FedError(ErrorCode::Malformed, "Degenerate: " + std::move(d)) {}
};

// Affine gain/offset/exposure normalization to a reference operating point:
//   v' = clamp(round(((v - b)/g) * (ref.g * (ref.kvp*ref.mas)/(p.kvp*p.mas)) + ref.b), 0, 65535)
// Identity when p == ref; monotone before clamping. A documented surrogate
// for a full physics-based standardization.
ImageVolume standardize(const ImageVolume& img, const AcquisitionParams& p,
                        const AcquisitionParams& ref);

// Mean brightness and population standard deviation, double precision,
// two-pass over row-major pixel order.
QcReport qc_metrics(const ImageVolume& img);

// Otsu threshold over the 16-bit histogram of nonzero (in-breast) pixels;
// dense_fraction = #(nonzero >= threshold) / #nonzero. Candidate thresholds
// are the occupied intensities; variance ties resolve to the smallest.
DensityResult breast_density(const ImageVolume& img);

// Median top-hat residual r = img - median_filter(img, window); candidates
// where r > min_snr * (1.4826 * MAD(r)); 8-connected components of area
// 1..window^2/2 yield one detection each at their residual-weighted centroid.
MicrocalcResult detect_microcalcs(const ImageVolume& img, double min_snr = 5.0,
                                  int window = 15);

// Exposed for the detector and its tests: windowed median with the window
// clipped at image borders (lower median on even counts).
std::vector<std::uint16_t> median_filter(const ImageVolume& img, int window);

// The closed analysis set nodes will execute.
const std::vector<std::string>& registered_algorithms();
bool algorithm_registered(const std::string& name);

// Runs one registered algorithm against a stored image file and serializes
// the result with the fixed field names from docs/protocol.md. Rejects
// unknown algorithms (UnknownAlgorithm) and unknown/invalid parameters
// (Malformed). standardize takes ref_kvp/ref_mas/ref_gain/ref_offset;
// detect_microcalcs takes min_snr/window.
nlohmann::json run_algorithm(const std::string& name, const SmiFile& file,
                             const nlohmann::json& params);

}  // namespace mfed::img

#endif
