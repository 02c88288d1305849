#include "mfed/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mfed/sha256.hpp"

using nlohmann::json;

namespace mfed::img {

ImageVolume standardize(const ImageVolume& img, const AcquisitionParams& p,
                        const AcquisitionParams& ref) {
    img.check();
    p.check();
    ref.check();
    const double scale = ref.detector_gain * (ref.tube_kvp * ref.exposure_mas) /
                         (p.tube_kvp * p.exposure_mas);
    ImageVolume out = img;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        double tissue = (static_cast<double>(img.pixels[i]) - p.detector_offset) /
                        p.detector_gain;
        double v = tissue * scale + ref.detector_offset;
        long r = std::lround(v);
        out.pixels[i] = static_cast<std::uint16_t>(std::clamp(r, 0L, 65535L));
    }
    return out;
}

QcReport qc_metrics(const ImageVolume& img) {
    img.check();
    const double n = static_cast<double>(img.pixels.size());
    double sum = 0.0;
    for (std::uint16_t v : img.pixels) sum += v;
    const double mean = sum / n;
    double sq = 0.0;
    for (std::uint16_t v : img.pixels) {
        double d = v - mean;
        sq += d * d;
    }
    QcReport r;
    r.mean_brightness = mean;
    r.contrast = std::sqrt(sq / n);
    return r;
}

DensityResult breast_density(const ImageVolume& img) {
    img.check();
    std::vector<std::uint64_t> hist(65536, 0);
    std::uint64_t n = 0;
    for (std::uint16_t v : img.pixels) {
        if (v != 0) {
            ++hist[v];
            ++n;
        }
    }
    if (n * 100 < img.pixels.size())
        throw DegenerateError("fewer than 1% of pixels are nonzero");

    double total_sum = 0.0;
    for (int v = 1; v < 65536; ++v) total_sum += static_cast<double>(hist[v]) * v;

    // classes for threshold T: {v < T} vs {v >= T}, nonzero pixels only
    int best_t = 0;
    double best_bcv = -1.0;
    std::uint64_t count_below = 0;
    double sum_below = 0.0;
    for (int t = 1; t < 65536; ++t) {
        if (hist[t] == 0) continue;
        if (best_t == 0) best_t = t;  // smallest occupied value, bcv 0
        std::uint64_t w0 = count_below;
        std::uint64_t w1 = n - w0;
        if (w0 > 0 && w1 > 0) {
            double mu0 = sum_below / static_cast<double>(w0);
            double mu1 = (total_sum - sum_below) / static_cast<double>(w1);
            double d = mu0 - mu1;
            double bcv = static_cast<double>(w0) * static_cast<double>(w1) * d * d;
            if (bcv > best_bcv) {
                best_bcv = bcv;
                best_t = t;
            }
        }
        count_below += hist[t];
        sum_below += static_cast<double>(hist[t]) * t;
    }

    std::uint64_t dense = 0;
    for (int v = best_t; v < 65536; ++v) dense += hist[v];
    DensityResult r;
    r.threshold_used = best_t;
    r.dense_fraction = static_cast<double>(dense) / static_cast<double>(n);
    return r;
}

namespace {

// Two-level (coarse 256 / fine 65536) sliding histogram median, window
// clipped at image borders. Lower median on even counts.
class WindowHistogram {
public:
    WindowHistogram() : coarse_(256, 0), fine_(65536, 0) {}

    void add(std::uint16_t v) {
        ++coarse_[v >> 8];
        ++fine_[v];
        ++count_;
    }
    void remove(std::uint16_t v) {
        --coarse_[v >> 8];
        --fine_[v];
        --count_;
    }
    void clear() {
        std::fill(coarse_.begin(), coarse_.end(), 0);
        std::fill(fine_.begin(), fine_.end(), 0);
        count_ = 0;
    }

    std::uint16_t median() const {
        std::uint32_t k = (count_ + 1) / 2;  // 1-based rank of the lower median
        std::uint32_t acc = 0;
        for (int c = 0; c < 256; ++c) {
            if (acc + coarse_[c] >= k) {
                for (int f = c << 8; f < (c + 1) << 8; ++f) {
                    acc += fine_[f];
                    if (acc >= k) return static_cast<std::uint16_t>(f);
                }
            }
            acc += coarse_[c];
        }
        return 0;  // unreachable for count_ > 0
    }

private:
    std::vector<std::uint32_t> coarse_;
    std::vector<std::uint32_t> fine_;
    std::uint32_t count_ = 0;
};

}  // namespace

std::vector<std::uint16_t> median_filter(const ImageVolume& img, int window) {
    const int w = static_cast<int>(img.width);
    const int h = static_cast<int>(img.height);
    const int half = window / 2;
    std::vector<std::uint16_t> out(img.pixels.size());
    WindowHistogram hist;

    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - half);
        const int y1 = std::min(h - 1, y + half);
        hist.clear();
        const int x_hi = std::min(w - 1, half);
        for (int x = 0; x <= x_hi; ++x)
            for (int yy = y0; yy <= y1; ++yy) hist.add(img.pixels[yy * w + x]);
        out[y * w] = hist.median();
        for (int x = 1; x < w; ++x) {
            const int take = x + half;
            const int drop = x - half - 1;
            if (take < w)
                for (int yy = y0; yy <= y1; ++yy) hist.add(img.pixels[yy * w + take]);
            if (drop >= 0)
                for (int yy = y0; yy <= y1; ++yy) hist.remove(img.pixels[yy * w + drop]);
            out[y * w + x] = hist.median();
        }
    }
    return out;
}

namespace {

double median_of(std::vector<std::int32_t>& v) {
    if (v.empty()) return 0.0;
    std::size_t mid = (v.size() - 1) / 2;  // lower median
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return static_cast<double>(v[mid]);
}

}  // namespace

MicrocalcResult detect_microcalcs(const ImageVolume& img, double min_snr, int window) {
    img.check();
    if (window < 3 || window % 2 == 0)
        throw err_malformed("detector window must be odd and >= 3");
    if (!(min_snr > 0)) throw err_malformed("min_snr must be positive");

    const int w = static_cast<int>(img.width);
    const int h = static_cast<int>(img.height);
    std::vector<std::uint16_t> med = median_filter(img, window);
    std::vector<std::int32_t> residual(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        residual[i] = static_cast<std::int32_t>(img.pixels[i]) - static_cast<std::int32_t>(med[i]);

    std::vector<std::int32_t> tmp = residual;
    const double med_r = median_of(tmp);
    for (auto& v : tmp) v = std::abs(v - static_cast<std::int32_t>(std::lround(med_r)));
    const double mad = median_of(tmp);
    const double noise = 1.4826 * mad;
    const double thresh = min_snr * noise;

    std::vector<std::uint8_t> mask(residual.size(), 0);
    for (std::size_t i = 0; i < residual.size(); ++i)
        if (static_cast<double>(residual[i]) > thresh) mask[i] = 1;

    const std::size_t max_area = static_cast<std::size_t>(window) * window / 2;
    MicrocalcResult result;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (mask[start] != 1) continue;
        stack.assign(1, start);
        mask[start] = 2;
        std::vector<std::size_t> component;
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            component.push_back(i);
            const int x = static_cast<int>(i % w);
            const int y = static_cast<int>(i / w);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (mask[ni] == 1) {
                        mask[ni] = 2;
                        stack.push_back(ni);
                    }
                }
            }
        }
        if (component.size() < 1 || component.size() > max_area) continue;
        double sum_w = 0.0, cx = 0.0, cy = 0.0;
        for (std::size_t i : component) {
            const double weight = static_cast<double>(residual[i]);
            sum_w += weight;
            cx += weight * static_cast<double>(i % w);
            cy += weight * static_cast<double>(i / w);
        }
        result.locations.emplace_back(cx / sum_w, cy / sum_w);
    }
    std::sort(result.locations.begin(), result.locations.end(),
              [](const auto& a, const auto& b) {
                  return a.second != b.second ? a.second < b.second : a.first < b.first;
              });
    return result;
}

// ---------------------------------------------------------------------------
// Job-facing dispatch

const std::vector<std::string>& registered_algorithms() {
    static const std::vector<std::string> algos{"qc_metrics", "breast_density",
                                                "detect_microcalcs", "standardize"};
    return algos;
}

bool algorithm_registered(const std::string& name) {
    const auto& a = registered_algorithms();
    return std::find(a.begin(), a.end(), name) != a.end();
}

namespace {

void check_param_keys(const json& params, std::initializer_list<const char*> allowed) {
    for (auto it = params.begin(); it != params.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw err_malformed("unknown job parameter: " + it.key());
    }
}

double param_number(const json& params, const char* key, double fallback) {
    if (!params.contains(key)) return fallback;
    if (!params[key].is_number()) throw err_malformed(std::string(key) + " must be numeric");
    return params[key].get<double>();
}

}  // namespace

json run_algorithm(const std::string& name, const SmiFile& file, const json& params) {
    if (!algorithm_registered(name)) throw err_unknown_algorithm(name);
    if (!params.is_object()) throw err_malformed("job parameters must be an object");

    if (name == "qc_metrics") {
        check_param_keys(params, {});
        QcReport r = qc_metrics(file.image);
        return json{{"mean_brightness", r.mean_brightness}, {"contrast", r.contrast}};
    }
    if (name == "breast_density") {
        check_param_keys(params, {});
        DensityResult r = breast_density(file.image);
        return json{{"dense_fraction", r.dense_fraction}, {"threshold", r.threshold_used}};
    }
    if (name == "detect_microcalcs") {
        check_param_keys(params, {"min_snr", "window"});
        double min_snr = param_number(params, "min_snr", 5.0);
        int window = 15;
        if (params.contains("window")) {
            if (!params["window"].is_number_integer())
                throw err_malformed("window must be an integer");
            window = params["window"].get<int>();
        }
        MicrocalcResult r = detect_microcalcs(file.image, min_snr, window);
        json locs = json::array();
        for (const auto& [x, y] : r.locations) locs.push_back(json::array({x, y}));
        return json{{"count", r.count()}, {"locations", locs}};
    }
    // standardize
    check_param_keys(params, {"ref_kvp", "ref_mas", "ref_gain", "ref_offset"});
    AcquisitionParams ref;
    ref.tube_kvp = param_number(params, "ref_kvp", 28.0);
    ref.exposure_mas = param_number(params, "ref_mas", 100.0);
    ref.detector_gain = param_number(params, "ref_gain", 1.0);
    ref.detector_offset = param_number(params, "ref_offset", 0.0);
    ImageVolume out = standardize(file.image, file.acq, ref);
    util::Bytes le;
    le.reserve(out.pixels.size() * 2);
    for (std::uint16_t v : out.pixels) {
        le.push_back(static_cast<std::uint8_t>(v & 0xFF));
        le.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    QcReport qc = qc_metrics(out);
    return json{{"width", out.width},
                {"height", out.height},
                {"pixels_sha256", util::sha256_hex(le)},
                {"mean_brightness", qc.mean_brightness},
                {"contrast", qc.contrast}};
}

}  // namespace mfed::img
