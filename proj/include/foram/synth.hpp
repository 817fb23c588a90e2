#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
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

enum class OverlapPolicy {
    forbid, // pairwise mask IoU exactly 0, separated by min_gap pixels
    allow,  // pairwise mask IoU up to max_pairwise_iou
};

struct SceneConfig {
    int width = 256;
    int height = 256;
    int object_count = 20;
    // proportions over {agglutinated, benthic, planktic, sediment}; sum 1
    std::array<double, 4> class_mix = {0.25, 0.25, 0.25, 0.25};
    // equivalent-diameter range, pixels
    double min_diameter = 16.0;
    double max_diameter = 36.0;
    OverlapPolicy overlap = OverlapPolicy::forbid;
    double max_pairwise_iou = 0.3; // allow policy only
    int min_gap = 2;               // forbid policy only, pixels
    Range background = {0.15, 0.22}; // plate base intensity
    Range foreground = {0.78, 0.95}; // specimen base intensity
    std::uint64_t seed = 0;
    int max_attempts = 1000; // placement attempts per object

    void validate() const {
        if (width < 8 || height < 8) throw ConfigError("scene canvas must be at least 8x8");
        if (object_count < 0) throw ConfigError("object count must be non-negative");
        double mix_sum = 0.0;
        for (double p : class_mix) {
            if (!(p >= 0.0)) throw ConfigError("class mix proportions must be non-negative");
            mix_sum += p;
        }
        if (std::abs(mix_sum - 1.0) > 1e-9) throw ConfigError("class mix must sum to 1");
        if (!(min_diameter > 0.0) || !(max_diameter >= min_diameter)) {
            throw ConfigError("diameter range must be positive and ordered");
        }
        if (!(max_pairwise_iou >= 0.0 && max_pairwise_iou < 1.0)) {
            throw ConfigError("max pairwise IoU must lie in [0, 1)");
        }
        if (min_gap < 0) throw ConfigError("min_gap must be non-negative");
        background.validate("background");
        foreground.validate("foreground");
        if (background.lo < 0.0 || background.hi > 1.0 || foreground.lo < 0.0 ||
            foreground.hi > 1.0) {
            throw ConfigError("intensity ranges must lie within [0, 1]");
        }
        if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    }
};

struct SceneSample {
    RgbImage image;
    ImageRecord record;
};

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

// Integer class counts for n objects matching the mix proportions
// (largest-remainder rounding; ties favor the lower class index).
inline std::array<int, 4> quota_counts(const std::array<double, 4>& mix, int n) {
    std::array<int, 4> counts;
    std::array<double, 4> remainder;
    int assigned = 0;
    for (int c = 0; c < 4; ++c) {
        const double exact = mix[c] * n;
        counts[c] = static_cast<int>(std::floor(exact));
        remainder[c] = exact - counts[c];
        assigned += counts[c];
    }
    std::array<int, 4> order = {0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (int k = 0; assigned < n; ++k) {
        counts[order[k % 4]] += 1;
        ++assigned;
    }
    return counts;
}

namespace detail {

inline bool speckled_class(ClassLabel c) {
    return c == ClassLabel::agglutinated || c == ClassLabel::sediment;
}

// Superellipse boundary |x/a|^n + |y/b|^n = 1 sampled at `samples` angles,
// rotated and translated; jitter_amp > 0 adds per-vertex radial noise.
inline Polygon superellipse_polygon(double cx, double cy, double a, double b, double angle,
                                    double exponent, int samples, double jitter_amp, Rng& rng) {
    Polygon poly;
    poly.vertices.reserve(samples);
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (int j = 0; j < samples; ++j) {
        const double theta = 2.0 * 3.14159265358979323846 * j / samples;
        const double ct = std::cos(theta);
        const double st = std::sin(theta);
        const double denom = std::pow(std::abs(ct / a), exponent) +
                             std::pow(std::abs(st / b), exponent);
        double r = std::pow(denom, -1.0 / exponent);
        if (jitter_amp > 0.0) r *= 1.0 + jitter_amp * (2.0 * rng.next_unit() - 1.0);
        const double x = r * ct;
        const double y = r * st;
        poly.vertices.push_back({cx + x * ca - y * sa, cy + x * sa + y * ca});
    }
    return poly;
}

struct PlacedObject {
    ClassLabel label;
    Polygon polygon;
    BinaryMask mask;
    double cx, cy, a, b, angle;
};

// per-class RGB tints multiplying the base intensity
inline constexpr std::array<std::array<float, 3>, 4> kClassTint = {{
    {1.00f, 0.88f, 0.72f}, // agglutinated: sandy brown
    {1.00f, 0.99f, 0.90f}, // benthic: ivory
    {0.93f, 0.97f, 1.00f}, // planktic: pale blue-white
    {0.88f, 0.82f, 0.70f}, // sediment: tan grain
}};

inline constexpr std::uint64_t kSceneTag = 0x53434E45; // scene stream family

} // namespace detail

// ---------------------------------------------------------------------------
// Scene generation
// ---------------------------------------------------------------------------

// Renders one plate image with exact per-object ground truth. The returned
// record rasterizes back to precisely the pixels that were painted.
inline SceneSample generate_scene(const SceneConfig& cfg, int image_id = 1) {
    cfg.validate();
    Rng rng_bg(cfg.seed, stream_id(detail::kSceneTag, 1));
    Rng rng_geom(cfg.seed, stream_id(detail::kSceneTag, 2));

    // Background: base level, a slow diagonal gradient, fine noise.
    const double base = rng_bg.uniform(cfg.background.lo, cfg.background.hi);
    RgbImage image = RgbImage::filled(cfg.width, cfg.height);
    for (int r = 0; r < cfg.height; ++r) {
        for (int c = 0; c < cfg.width; ++c) {
            const double phase =
                static_cast<double>(c) / cfg.width + static_cast<double>(r) / cfg.height;
            const double wave = 0.015 * std::sin(3.1 * phase);
            const double noise = 0.01 * (2.0 * rng_bg.next_unit() - 1.0);
            const double v = base + wave + noise;
            image.set_pixel(r, c, clamp_unit(static_cast<float>(v * 1.00)),
                            clamp_unit(static_cast<float>(v * 0.98)),
                            clamp_unit(static_cast<float>(v * 0.94)));
        }
    }

    // Class assignment by quota, order shuffled.
    const std::array<int, 4> quotas = quota_counts(cfg.class_mix, cfg.object_count);
    std::vector<ClassLabel> labels;
    for (int c = 0; c < 4; ++c) {
        labels.insert(labels.end(), quotas[c], kAllClasses[c]);
    }
    for (std::size_t i = labels.size(); i > 1; --i) {
        std::swap(labels[i - 1], labels[rng_geom.below(static_cast<std::uint32_t>(i))]);
    }

    // Placement.
    std::vector<detail::PlacedObject> placed;
    BinaryGrid blocked = BinaryGrid::zeros(cfg.width, cfg.height);
    for (int k = 0; k < cfg.object_count; ++k) {
        const ClassLabel label = labels[k];
        const bool speck = detail::speckled_class(label);
        bool done = false;
        for (int attempt = 0; attempt < cfg.max_attempts && !done; ++attempt) {
            const double diameter = rng_geom.uniform(cfg.min_diameter, cfg.max_diameter);
            const double aspect = rng_geom.uniform(0.75, 1.3);
            const double angle = rng_geom.uniform(0.0, 3.14159265358979323846);
            const double exponent = speck ? rng_geom.uniform(1.6, 3.0) : 2.0;
            const double jitter = speck ? 0.12 : 0.0;
            const double radius = diameter / 2.0;
            const double a = radius * std::sqrt(aspect);
            const double b = radius / std::sqrt(aspect);
            const double reach = std::max(a, b) * (1.0 + jitter) + 1.0;
            if (2.0 * reach + 2.0 >= std::min(cfg.width, cfg.height)) {
                throw PlacementError("object diameter " + std::to_string(diameter) +
                                     " does not fit a " + std::to_string(cfg.width) + "x" +
                                     std::to_string(cfg.height) + " canvas");
            }
            const double cx = rng_geom.uniform(reach, cfg.width - reach);
            const double cy = rng_geom.uniform(reach, cfg.height - reach);
            Polygon poly = detail::superellipse_polygon(cx, cy, a, b, angle, exponent, 48,
                                                        jitter, rng_geom);
            bool in_bounds = true;
            for (const Point& p : poly.vertices) {
                if (p.x < 0.0 || p.x > cfg.width || p.y < 0.0 || p.y > cfg.height) {
                    in_bounds = false;
                    break;
                }
            }
            if (!in_bounds) continue;
            BinaryMask mask = rasterize_polygon(poly, cfg.width, cfg.height);
            if (mask.area() < 4) continue;

            bool ok = true;
            if (cfg.overlap == OverlapPolicy::forbid) {
                const BinaryGrid grid = mask.to_grid();
                for (int r = 0; r < cfg.height && ok; ++r) {
                    for (int c = 0; c < cfg.width; ++c) {
                        if (grid.at(r, c) && blocked.at(r, c)) {
                            ok = false;
                            break;
                        }
                    }
                }
                if (ok) {
                    // block this object plus a min_gap margin
                    for (int r = 0; r < cfg.height; ++r) {
                        for (int c = 0; c < cfg.width; ++c) {
                            if (!grid.at(r, c)) continue;
                            for (int dr = -cfg.min_gap; dr <= cfg.min_gap; ++dr) {
                                for (int dc = -cfg.min_gap; dc <= cfg.min_gap; ++dc) {
                                    const int rr = r + dr;
                                    const int cc = c + dc;
                                    if (rr >= 0 && rr < cfg.height && cc >= 0 && cc < cfg.width) {
                                        blocked.set(rr, cc, true);
                                    }
                                }
                            }
                        }
                    }
                }
            } else {
                for (const auto& other : placed) {
                    if (mask_iou(mask, other.mask) > cfg.max_pairwise_iou) {
                        ok = false;
                        break;
                    }
                }
            }
            if (!ok) continue;
            placed.push_back({label, std::move(poly), std::move(mask), cx, cy, a, b, angle});
            done = true;
        }
        if (!done) {
            throw PlacementError("placement failed for object " + std::to_string(k + 1) + " of " +
                                 std::to_string(cfg.object_count) + " after " +
                                 std::to_string(cfg.max_attempts) + " attempts (" +
                                 std::to_string(cfg.object_count) + " objects on " +
                                 std::to_string(cfg.width) + "x" + std::to_string(cfg.height) +
                                 ")");
        }
    }

    // Render: paint exactly the mask pixels, later objects over earlier ones.
    for (std::size_t k = 0; k < placed.size(); ++k) {
        const auto& obj = placed[k];
        Rng rng_tex(cfg.seed, stream_id(detail::kSceneTag, 100 + k));
        const double f0 = rng_tex.uniform(cfg.foreground.lo, cfg.foreground.hi);
        const bool speck = detail::speckled_class(obj.label);
        const auto& tint = detail::kClassTint[class_index(obj.label)];
        const double ca = std::cos(obj.angle);
        const double sa = std::sin(obj.angle);
        const BinaryGrid grid = obj.mask.to_grid();
        for (int r = 0; r < cfg.height; ++r) {
            for (int c = 0; c < cfg.width; ++c) {
                if (!grid.at(r, c)) continue;
                const double px = c + 0.5 - obj.cx;
                const double py = r + 0.5 - obj.cy;
                // unrotate into the axis frame for radial shading
                const double u = (px * ca + py * sa) / obj.a;
                const double v = (-px * sa + py * ca) / obj.b;
                const double d2 = std::min(1.0, u * u + v * v);
                double f = f0 * (1.0 - 0.15 * d2);
                if (speck) f *= 1.0 + 0.15 * (2.0 * rng_tex.next_unit() - 1.0);
                image.set_pixel(r, c, clamp_unit(static_cast<float>(f * tint[0])),
                                clamp_unit(static_cast<float>(f * tint[1])),
                                clamp_unit(static_cast<float>(f * tint[2])));
            }
        }
    }

    SceneSample sample;
    sample.image = std::move(image);
    sample.record.id = image_id;
    sample.record.width = cfg.width;
    sample.record.height = cfg.height;
    sample.record.phase = 3;
    for (std::size_t k = 0; k < placed.size(); ++k) {
        AnnotationRecord ann;
        ann.id = static_cast<int>(k) + 1;
        ann.label = placed[k].label;
        ann.iscrowd = false;
        ann.polygon = std::move(placed[k].polygon);
        sample.record.annotations.push_back(std::move(ann));
    }
    return sample;
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

struct Corpus {
    Manifest manifest;
    std::vector<RgbImage> images; // parallel to manifest.images
};

// n scenes from one template; per-image seeds derive from (seed, index) so
// images are independent and the whole corpus is reproducible.
inline Corpus generate_corpus(const SceneConfig& templ, int n_images, std::uint64_t seed,
                              const std::string& name = "synthetic") {
    templ.validate();
    if (n_images < 1) throw ConfigError("corpus needs at least one image");
    Corpus corpus;
    corpus.manifest.name = name;
    for (int i = 0; i < n_images; ++i) {
        SceneConfig cfg = templ;
        cfg.seed = detail::mix64(seed + detail::kGolden * (static_cast<std::uint64_t>(i) + 1));
        SceneSample sample = generate_scene(cfg, i + 1);
        char file[32];
        std::snprintf(file, sizeof(file), "img_%05d.png", i + 1);
        sample.record.file = file;
        corpus.manifest.images.push_back(std::move(sample.record));
        corpus.images.push_back(std::move(sample.image));
    }
    return corpus;
}

} // namespace foram
