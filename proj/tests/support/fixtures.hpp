#pragma once

// Randomized scene/prediction builders shared by the unit and acceptance
// suites. Scenes are small manifests with RLE annotations; predictions are
// jittered copies of the ground truth plus noise, with quantized scores so
// tie-breaking paths actually run.

#include <optional>
#include <string>
#include <vector>

#include "foram/dataset.hpp"
#include "foram/geometry.hpp"
#include "foram/rng.hpp"

namespace fixtures {

inline std::string survey_manifest_path() { return std::string(FORAM_DATA_DIR) + "/survey.manifest"; }

inline foram::BinaryMask rect_mask(int width, int height, int x0, int y0, int w, int h) {
    foram::BinaryGrid g = foram::BinaryGrid::zeros(width, height);
    for (int r = y0; r < y0 + h; ++r) {
        for (int c = x0; c < x0 + w; ++c) g.set(r, c, true);
    }
    return foram::BinaryMask::from_grid(g);
}

// Shift a mask by (dx, dy), clipping at the canvas edge. May come back empty.
inline foram::BinaryMask translate_mask(const foram::BinaryMask& mask, int dx, int dy) {
    const foram::BinaryGrid g = mask.to_grid();
    foram::BinaryGrid out = foram::BinaryGrid::zeros(g.width, g.height);
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!g.at(r, c)) continue;
            const int rr = r + dy;
            const int cc = c + dx;
            if (rr >= 0 && rr < g.height && cc >= 0 && cc < g.width) out.set(rr, cc, true);
        }
    }
    return foram::BinaryMask::from_grid(out);
}

// One-image manifest with up to max_objects rectangles; the first object is
// always a plain (non-crowd) one so the scene is evaluable.
inline foram::Manifest random_scene(std::uint64_t seed, int image_id = 1, int max_objects = 10,
                                    int max_side = 64, bool with_crowds = true) {
    foram::Rng rng(seed, foram::stream_id(0x5343u));
    foram::Manifest m;
    m.name = "scene-" + std::to_string(seed);
    foram::ImageRecord img;
    img.id = image_id;
    img.file = "scene.png";
    img.width = 24 + static_cast<int>(rng.below(static_cast<std::uint32_t>(max_side - 24 + 1)));
    img.height = 24 + static_cast<int>(rng.below(static_cast<std::uint32_t>(max_side - 24 + 1)));
    img.phase = 3;
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint32_t>(max_objects)));
    for (int k = 0; k < n; ++k) {
        const int w = 3 + static_cast<int>(rng.below(10));
        const int h = 3 + static_cast<int>(rng.below(10));
        const int x0 = static_cast<int>(rng.below(static_cast<std::uint32_t>(img.width - w)));
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint32_t>(img.height - h)));
        foram::AnnotationRecord ann;
        ann.id = k + 1;
        ann.label = foram::kAllClasses[rng.below(4)];
        ann.iscrowd = with_crowds && k > 0 && rng.bernoulli(0.15);
        ann.mask = rect_mask(img.width, img.height, x0, y0, w, h);
        img.annotations.push_back(std::move(ann));
    }
    m.images.push_back(std::move(img));
    return m;
}

// Noisy predictions for a manifest: most ground-truth objects reappear
// shifted with a quantized score (ties on purpose), some get the wrong
// class, some vanish, and a few spurious boxes are added per image.
inline std::vector<foram::Detection> jittered_predictions(const foram::Manifest& m,
                                                          std::uint64_t seed) {
    foram::Rng rng(seed, foram::stream_id(0x4A4954u));
    std::vector<foram::Detection> dets;
    for (const auto& img : m.images) {
        for (const auto& ann : img.annotations) {
            if (ann.iscrowd) {
                // occasionally probe the ignore path with a detection inside
                // the crowd region
                if (!rng.bernoulli(0.3)) continue;
            } else if (rng.bernoulli(0.15)) {
                continue; // miss
            }
            const int dx = static_cast<int>(rng.below(7)) - 3;
            const int dy = static_cast<int>(rng.below(7)) - 3;
            foram::BinaryMask mask =
                translate_mask(ann.rasterized(img.width, img.height), dx, dy);
            if (mask.empty()) continue;
            foram::Detection d;
            d.image_id = img.id;
            d.label = rng.bernoulli(0.2) ? foram::kAllClasses[rng.below(4)] : ann.label;
            d.score = static_cast<double>(rng.below(11)) / 10.0;
            d.mask = std::move(mask);
            d.bbox = foram::mask_to_bbox(d.mask);
            dets.push_back(std::move(d));
        }
        const int extras = static_cast<int>(rng.below(4));
        for (int k = 0; k < extras; ++k) {
            const int w = 3 + static_cast<int>(rng.below(8));
            const int h = 3 + static_cast<int>(rng.below(8));
            const int x0 = static_cast<int>(rng.below(static_cast<std::uint32_t>(img.width - w)));
            const int y0 =
                static_cast<int>(rng.below(static_cast<std::uint32_t>(img.height - h)));
            foram::Detection d;
            d.image_id = img.id;
            d.label = foram::kAllClasses[rng.below(4)];
            d.score = static_cast<double>(rng.below(11)) / 10.0;
            d.mask = rect_mask(img.width, img.height, x0, y0, w, h);
            d.bbox = foram::mask_to_bbox(d.mask);
            dets.push_back(std::move(d));
        }
    }
    return dets;
}

} // namespace fixtures
