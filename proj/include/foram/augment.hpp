#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "foram/dataset.hpp"
#include "foram/errors.hpp"
#include "foram/geometry.hpp"
#include "foram/image.hpp"
#include "foram/rng.hpp"

namespace foram {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct AugmentConfig {
    double flip_h_prob = 0.5;
    double flip_v_prob = 0.5;
    Range brightness = {0.9, 1.1};   // multiplies all channels
    Range contrast = {0.9, 1.1};     // scales distance from mean luminance
    Range saturation = {0.99, 1.01}; // blends with per-pixel luminance
    Range hue = {-0.01, 0.01};       // fraction of a full hue turn
    Range gamma = {0.8, 1.2};        // v' = v^gamma

    void validate() const {
        if (!(flip_h_prob >= 0.0 && flip_h_prob <= 1.0)) {
            throw ConfigError("flip probability must lie in [0, 1]");
        }
        if (!(flip_v_prob >= 0.0 && flip_v_prob <= 1.0)) {
            throw ConfigError("flip probability must lie in [0, 1]");
        }
        brightness.validate("brightness");
        contrast.validate("contrast");
        saturation.validate("saturation");
        hue.validate("hue");
        gamma.validate("gamma");
        if (!(brightness.lo >= 0.0)) throw ConfigError("brightness: factors must be non-negative");
        if (!(contrast.lo >= 0.0)) throw ConfigError("contrast: factors must be non-negative");
        if (!(saturation.lo >= 0.0)) throw ConfigError("saturation: factors must be non-negative");
        if (!(gamma.lo > 0.0)) throw ConfigError("gamma: factors must be positive");
    }
};

// Parameters actually drawn for one image; exposed so callers can log or
// replay a transform.
struct AugmentDraw {
    bool flip_h = false;
    bool flip_v = false;
    double brightness = 1.0;
    double contrast = 1.0;
    double saturation = 1.0;
    double hue = 0.0;
    double gamma = 1.0;
};

// Fixed positions in the per-image draw sequence. Adding future transforms
// must append, never reorder, or seeds stop reproducing.
enum class DrawSlot : std::uint64_t {
    flip_h = 0,
    flip_v = 1,
    brightness = 2,
    contrast = 3,
    saturation = 4,
    hue = 5,
    gamma = 6,
};

inline AugmentDraw draw_augmentation(const AugmentConfig& config, std::uint64_t seed,
                                     std::uint64_t image_id) {
    config.validate();
    auto draw_rng = [&](DrawSlot slot) {
        return Rng(seed, stream_id(image_id, static_cast<std::uint64_t>(slot)));
    };
    AugmentDraw d;
    d.flip_h = draw_rng(DrawSlot::flip_h).bernoulli(config.flip_h_prob);
    d.flip_v = draw_rng(DrawSlot::flip_v).bernoulli(config.flip_v_prob);
    d.brightness = draw_rng(DrawSlot::brightness).uniform(config.brightness.lo, config.brightness.hi);
    d.contrast = draw_rng(DrawSlot::contrast).uniform(config.contrast.lo, config.contrast.hi);
    d.saturation = draw_rng(DrawSlot::saturation).uniform(config.saturation.lo, config.saturation.hi);
    d.hue = draw_rng(DrawSlot::hue).uniform(config.hue.lo, config.hue.hi);
    d.gamma = draw_rng(DrawSlot::gamma).uniform(config.gamma.lo, config.gamma.hi);
    return d;
}

// ---------------------------------------------------------------------------
// Photometric transforms (double math, clamp after each stage)
// ---------------------------------------------------------------------------

namespace detail {

inline double luminance(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

// Standard RGB<->HSV with h in [0, 1).
inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    v = mx;
    s = mx == 0.0 ? 0.0 : d / mx;
    if (d == 0.0) {
        h = 0.0;
    } else if (mx == r) {
        h = (g - b) / d;
        if (h < 0.0) h += 6.0;
    } else if (mx == g) {
        h = (b - r) / d + 2.0;
    } else {
        h = (r - g) / d + 4.0;
    }
    h /= 6.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    h -= std::floor(h); // wrap into [0, 1)
    const double h6 = h * 6.0;
    const int sector = std::min(5, static_cast<int>(h6));
    const double f = h6 - sector;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

} // namespace detail

inline RgbImage adjust_brightness(const RgbImage& img, double factor) {
    RgbImage out = img;
    for (float& v : out.values) v = clamp_unit(static_cast<double>(v) * factor);
    return out;
}

// Pulls each channel toward/away from the image's mean luminance.
inline RgbImage adjust_contrast(const RgbImage& img, double factor) {
    double mean = 0.0;
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        mean += detail::luminance(img.values[3 * i], img.values[3 * i + 1], img.values[3 * i + 2]);
    }
    mean /= static_cast<double>(pixels);
    RgbImage out = img;
    for (float& v : out.values) v = clamp_unit(mean + factor * (v - mean));
    return out;
}

// Blends each pixel with its own luminance; factor 0 is grayscale, 1 is
// identity.
inline RgbImage adjust_saturation(const RgbImage& img, double factor) {
    RgbImage out = img;
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        const double y = detail::luminance(img.values[3 * i], img.values[3 * i + 1],
                                           img.values[3 * i + 2]);
        for (int ch = 0; ch < 3; ++ch) {
            out.values[3 * i + ch] = clamp_unit(y + factor * (img.values[3 * i + ch] - y));
        }
    }
    return out;
}

// delta is a fraction of a full turn around the hue circle.
inline RgbImage adjust_hue(const RgbImage& img, double delta) {
    RgbImage out = img;
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < pixels; ++i) {
        double h, s, v, r, g, b;
        detail::rgb_to_hsv(img.values[3 * i], img.values[3 * i + 1], img.values[3 * i + 2], h, s,
                           v);
        detail::hsv_to_rgb(h + delta, s, v, r, g, b);
        out.values[3 * i] = clamp_unit(r);
        out.values[3 * i + 1] = clamp_unit(g);
        out.values[3 * i + 2] = clamp_unit(b);
    }
    return out;
}

inline RgbImage adjust_gamma(const RgbImage& img, double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    RgbImage out = img;
    for (float& v : out.values) {
        v = clamp_unit(std::pow(std::max(0.0, static_cast<double>(v)), gamma));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Geometric transforms
// ---------------------------------------------------------------------------

inline Polygon flip_polygon(const Polygon& poly, Axis axis, int width, int height) {
    Polygon out = poly;
    for (Point& p : out.vertices) {
        if (axis == Axis::horizontal) p.x = static_cast<double>(width) - p.x;
        else p.y = static_cast<double>(height) - p.y;
    }
    return out;
}

inline BBox flip_bbox(const BBox& box, Axis axis, int width, int height) {
    if (axis == Axis::horizontal) {
        return BBox(static_cast<double>(width) - box.x_max, box.y_min,
                    static_cast<double>(width) - box.x_min, box.y_max);
    }
    return BBox(box.x_min, static_cast<double>(height) - box.y_max, box.x_max,
                static_cast<double>(height) - box.y_min);
}

// ---------------------------------------------------------------------------
// Whole-sample application
// ---------------------------------------------------------------------------

struct AugmentedSample {
    RgbImage image;
    ImageRecord record; // geometry updated to match the transformed image
    AugmentDraw draw;
};

inline void flip_record_geometry(ImageRecord& rec, Axis axis) {
    for (AnnotationRecord& ann : rec.annotations) {
        if (ann.polygon) ann.polygon = flip_polygon(*ann.polygon, axis, rec.width, rec.height);
        if (ann.mask) ann.mask = flip_mask(*ann.mask, axis);
    }
}

// Applies one seeded draw to an image/annotation pair. Photometric order is
// brightness, contrast, saturation, hue, gamma; flips come last and mirror
// the geometry too.
inline AugmentedSample augment_sample(const RgbImage& image, const ImageRecord& record,
                                      const AugmentConfig& config, std::uint64_t seed) {
    if (image.width != record.width || image.height != record.height) {
        throw GeometryError("augment: image dimensions disagree with the annotation record");
    }
    AugmentedSample out;
    out.draw = draw_augmentation(config, seed, static_cast<std::uint64_t>(record.id));
    out.record = record;

    RgbImage img = adjust_brightness(image, out.draw.brightness);
    img = adjust_contrast(img, out.draw.contrast);
    img = adjust_saturation(img, out.draw.saturation);
    img = adjust_hue(img, out.draw.hue);
    img = adjust_gamma(img, out.draw.gamma);
    if (out.draw.flip_h) {
        img = flip_image(img, Axis::horizontal);
        flip_record_geometry(out.record, Axis::horizontal);
    }
    if (out.draw.flip_v) {
        img = flip_image(img, Axis::vertical);
        flip_record_geometry(out.record, Axis::vertical);
    }
    out.image = std::move(img);
    return out;
}

} // namespace foram
