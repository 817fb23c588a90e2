#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "foram/dataset.hpp"
#include "foram/errors.hpp"
#include "foram/geometry.hpp"
#include "foram/image.hpp"

namespace foram {

// ---------------------------------------------------------------------------
// Grayscale conversion
// ---------------------------------------------------------------------------

inline GrayImage to_grayscale(const RgbImage& img) {
    GrayImage out = GrayImage::filled(img.width, img.height, 0.0f);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const std::size_t i = img.index(r, c);
            const double y = 0.299 * img.values[i] + 0.587 * img.values[i + 1] +
                             0.114 * img.values[i + 2];
            out.values[static_cast<std::size_t>(r) * img.width + c] = static_cast<float>(y);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur (separable, reflect padding)
// ---------------------------------------------------------------------------

// Discrete Gaussian taps for radius ceil(3*sigma), normalized to sum 1.
inline std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    }
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= sum;
    return taps;
}

namespace detail {

// Reflect an out-of-range index into [0, n) by edge duplication
// (..., 1, 0 | 0, 1, ..., n-1 | n-1, n-2, ...).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    int j = i % period;
    if (j < 0) j += period;
    return j < n ? j : period - 1 - j;
}

} // namespace detail

inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    const std::vector<double> taps = gaussian_kernel(sigma);
    const int radius = (static_cast<int>(taps.size()) - 1) / 2;
    const int w = img.width;
    const int h = img.height;

    // horizontal pass
    std::vector<double> tmp(static_cast<std::size_t>(w) * h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int cc = detail::reflect_index(c + k, w);
                acc += taps[k + radius] * img.values[static_cast<std::size_t>(r) * w + cc];
            }
            tmp[static_cast<std::size_t>(r) * w + c] = acc;
        }
    }
    // vertical pass
    GrayImage out = GrayImage::filled(w, h, 0.0f);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int rr = detail::reflect_index(r + k, h);
                acc += taps[k + radius] * tmp[static_cast<std::size_t>(rr) * w + c];
            }
            out.values[static_cast<std::size_t>(r) * w + c] =
                static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Thresholding
// ---------------------------------------------------------------------------

enum class Polarity {
    light, // objects brighter than the level
    dark,  // objects darker than the level
};

inline BinaryGrid threshold_image(const GrayImage& img, double level, Polarity polarity) {
    BinaryGrid grid = BinaryGrid::zeros(img.width, img.height);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double v = img.values[static_cast<std::size_t>(r) * img.width + c];
            const bool on = polarity == Polarity::light ? v > level : v < level;
            grid.set(r, c, on);
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Connected components (two-pass union-find)
// ---------------------------------------------------------------------------

struct LabelImage {
    int width = 0;
    int height = 0;
    int count = 0;                // number of components, labels 1..count
    std::vector<std::int32_t> labels; // row-major, 0 = background
};

namespace detail {

struct UnionFind {
    std::vector<std::int32_t> parent;

    std::int32_t add() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return parent.back();
    }
    std::int32_t find(std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]]; // path halving
            x = parent[x];
        }
        return x;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

} // namespace detail

// Labels foreground components 1..count in raster-scan order of first
// appearance. Connectivity is 4 or 8.
inline LabelImage connected_components(const BinaryGrid& grid, int connectivity = 8) {
    if (connectivity != 4 && connectivity != 8) {
        throw ConfigError("connectivity must be 4 or 8");
    }
    const int w = grid.width;
    const int h = grid.height;
    LabelImage out;
    out.width = w;
    out.height = h;
    out.labels.assign(static_cast<std::size_t>(w) * h, 0);

    detail::UnionFind uf;
    uf.add(); // slot 0 = background
    std::vector<std::int32_t> provisional(static_cast<std::size_t>(w) * h, 0);

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!grid.at(r, c)) continue;
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            std::int32_t label = 0;
            auto consider = [&](int rr, int cc) {
                if (rr < 0 || cc < 0 || cc >= w) return;
                const std::int32_t n = provisional[static_cast<std::size_t>(rr) * w + cc];
                if (n == 0) return;
                if (label == 0) label = n;
                else uf.unite(label, n);
            };
            consider(r, c - 1);
            consider(r - 1, c);
            if (connectivity == 8) {
                consider(r - 1, c - 1);
                consider(r - 1, c + 1);
            }
            if (label == 0) label = uf.add();
            provisional[i] = label;
        }
    }

    // Renumber roots to 1..count in scan order.
    std::vector<std::int32_t> remap(uf.parent.size(), 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            if (provisional[i] == 0) continue;
            const std::int32_t root = uf.find(provisional[i]);
            if (remap[root] == 0) remap[root] = ++out.count;
            out.labels[i] = remap[root];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Object extraction and the full pipeline
// ---------------------------------------------------------------------------

struct PipelineConfig {
    double sigma1 = 2.0;   // pre-threshold smoothing
    double sigma2 = 2.0;   // second smoothing stage
    double threshold = 0.5;
    Polarity polarity = Polarity::light;
    int connectivity = 8;
    int min_area = 50; // components smaller than this are dropped

    void validate() const {
        if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw ConfigError("sigma must be positive");
        if (!(threshold >= 0.0 && threshold <= 1.0)) {
            throw ConfigError("threshold must lie in [0, 1]");
        }
        if (connectivity != 4 && connectivity != 8) {
            throw ConfigError("connectivity must be 4 or 8");
        }
        if (min_area < 1) throw ConfigError("min_area must be at least 1");
    }
};

// Components of size >= min_area, as masks, ordered by label.
inline std::vector<BinaryMask> extract_objects(const LabelImage& labels, int min_area) {
    std::vector<std::size_t> areas(static_cast<std::size_t>(labels.count) + 1, 0);
    for (std::int32_t v : labels.labels) areas[v] += 1;

    std::vector<BinaryMask> masks;
    for (std::int32_t lab = 1; lab <= labels.count; ++lab) {
        if (areas[lab] < static_cast<std::size_t>(min_area)) continue;
        BinaryGrid grid = BinaryGrid::zeros(labels.width, labels.height);
        for (int r = 0; r < labels.height; ++r) {
            for (int c = 0; c < labels.width; ++c) {
                if (labels.labels[static_cast<std::size_t>(r) * labels.width + c] == lab) {
                    grid.set(r, c, true);
                }
            }
        }
        masks.push_back(BinaryMask::from_grid(grid));
    }
    return masks;
}

// Full classical pipeline: grayscale, two blur stages, threshold, label,
// extract. Detections carry score 1.0 and no class.
inline std::vector<Detection> detect_objects(const RgbImage& img, int image_id,
                                             const PipelineConfig& config = {}) {
    config.validate();
    GrayImage gray = to_grayscale(img);
    gray = gaussian_blur(gray, config.sigma1);
    gray = gaussian_blur(gray, config.sigma2);
    const BinaryGrid grid = threshold_image(gray, config.threshold, config.polarity);
    const LabelImage labels = connected_components(grid, config.connectivity);

    std::vector<Detection> dets;
    for (BinaryMask& mask : extract_objects(labels, config.min_area)) {
        Detection d;
        d.image_id = image_id;
        d.label = std::nullopt;
        d.score = 1.0;
        d.bbox = mask_to_bbox(mask);
        d.mask = std::move(mask);
        dets.push_back(std::move(d));
    }
    return dets;
}

} // namespace foram
