#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "foram/errors.hpp"
#include "foram/geometry.hpp"
#include "foram/rng.hpp"

namespace foram {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// The four object classes, with fixed integer ids 1..4.
enum class ClassLabel : int {
    agglutinated = 1,
    benthic = 2,
    planktic = 3,
    sediment = 4,
};

inline constexpr std::array<ClassLabel, 4> kAllClasses = {
    ClassLabel::agglutinated, ClassLabel::benthic, ClassLabel::planktic, ClassLabel::sediment};

inline const char* to_string(ClassLabel label) {
    switch (label) {
        case ClassLabel::agglutinated: return "agglutinated";
        case ClassLabel::benthic: return "benthic";
        case ClassLabel::planktic: return "planktic";
        case ClassLabel::sediment: return "sediment";
    }
    return "?";
}

inline std::optional<ClassLabel> class_from_string(const std::string& name) {
    for (ClassLabel c : kAllClasses) {
        if (name == to_string(c)) return c;
    }
    return std::nullopt;
}

inline int class_index(ClassLabel label) { return static_cast<int>(label) - 1; }

// One annotated object: polygon or RLE mask, exactly one of the two.
struct AnnotationRecord {
    int id = 0;
    ClassLabel label = ClassLabel::sediment;
    bool iscrowd = false;
    std::optional<Polygon> polygon;
    std::optional<BinaryMask> mask;

    // Pixel mask for the enclosing image; polygons rasterize on demand.
    BinaryMask rasterized(int width, int height) const {
        if (mask) return *mask;
        if (polygon) return rasterize_polygon(*polygon, width, height);
        throw ValidationError("annotation " + std::to_string(id) + " has no geometry");
    }
};

struct ImageRecord {
    int id = 0;
    std::string file;
    int width = 0;
    int height = 0;
    int phase = 1; // acquisition phase, 1..3
    std::vector<AnnotationRecord> annotations;
};

struct Manifest {
    std::string name;
    int version = 1;
    std::vector<ImageRecord> images;

    std::size_t total_objects() const {
        std::size_t n = 0;
        for (const auto& img : images) n += img.annotations.size();
        return n;
    }
};

// A scored model output for one image.
struct Detection {
    int image_id = 0;
    std::optional<ClassLabel> label; // nullopt = class unknown
    double score = 1.0;
    BinaryMask mask;
    BBox bbox;
};

// ---------------------------------------------------------------------------
// RLE string codec (serialization format for masks)
// ---------------------------------------------------------------------------

inline std::string rle_to_string(const BinaryMask& mask) {
    std::string out;
    const auto& runs = mask.runs();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i) out.push_back(' ');
        out += std::to_string(runs[i]);
    }
    return out;
}

inline BinaryMask rle_from_string(const std::string& text, int width, int height) {
    std::vector<std::uint32_t> runs;
    std::istringstream in(text);
    long long value = 0;
    while (in >> value) {
        if (value < 0) throw MaskError("malformed mask: negative run length");
        runs.push_back(static_cast<std::uint32_t>(value));
    }
    if (!in.eof()) throw MaskError("malformed mask: run string contains non-numeric data");
    return BinaryMask::from_runs(width, height, runs);
}

// ---------------------------------------------------------------------------
// Manifest I/O
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json parse_json(const std::string& text, const std::string& what) {
    try {
        return nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(what + ": parse error: " + e.what());
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

inline void check_polygon_bounds(const Polygon& poly, const ImageRecord& img, int ann_id) {
    for (const Point& p : poly.vertices) {
        if (p.x < 0.0 || p.x > img.width || p.y < 0.0 || p.y > img.height) {
            std::ostringstream msg;
            msg << "image " << img.id << ": annotation " << ann_id << ": vertex (" << p.x << ", "
                << p.y << ") outside " << img.width << "x" << img.height << " canvas";
            throw ValidationError(msg.str());
        }
    }
}

} // namespace detail

inline constexpr const char* kManifestSchema = "foram/manifest";
inline constexpr const char* kPredictionSchema = "foram/predictions";
inline constexpr int kSchemaVersion = 1;

inline Manifest manifest_from_json(const nlohmann::ordered_json& doc) {
    if (!doc.is_object() || doc.value("schema", "") != kManifestSchema) {
        throw ValidationError("manifest: missing or unexpected schema tag");
    }
    if (doc.value("version", -1) != kSchemaVersion) {
        throw ValidationError("manifest: unsupported schema version");
    }
    Manifest m;
    m.name = doc.value("name", "");
    m.version = kSchemaVersion;
    if (!doc.contains("images") || !doc["images"].is_array()) {
        throw ValidationError("manifest: missing images array");
    }
    std::map<int, bool> seen_image_ids;
    for (const auto& jimg : doc["images"]) {
        ImageRecord img;
        try {
            img.id = jimg.at("id").get<int>();
            img.file = jimg.value("file", "");
            img.width = jimg.at("width").get<int>();
            img.height = jimg.at("height").get<int>();
            img.phase = jimg.at("phase").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("manifest: bad image record: ") + e.what());
        }
        if (seen_image_ids.count(img.id)) {
            throw ValidationError("manifest: duplicate image id " + std::to_string(img.id));
        }
        seen_image_ids[img.id] = true;
        if (img.width < 1 || img.height < 1) {
            throw ValidationError("image " + std::to_string(img.id) + ": invalid dimensions");
        }
        if (img.phase < 1 || img.phase > 3) {
            throw ValidationError("image " + std::to_string(img.id) + ": phase must be 1, 2 or 3");
        }
        std::map<int, bool> seen_ann_ids;
        for (const auto& jann : jimg.value("annotations", nlohmann::ordered_json::array())) {
            AnnotationRecord ann;
            try {
                ann.id = jann.at("id").get<int>();
                ann.iscrowd = jann.value("iscrowd", false);
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError("image " + std::to_string(img.id) +
                                      ": bad annotation record: " + e.what());
            }
            if (seen_ann_ids.count(ann.id)) {
                throw ValidationError("image " + std::to_string(img.id) +
                                      ": duplicate object id " + std::to_string(ann.id));
            }
            seen_ann_ids[ann.id] = true;
            const std::string cls = jann.value("class", "");
            const auto label = class_from_string(cls);
            if (!label) {
                throw ValidationError("image " + std::to_string(img.id) + ": annotation " +
                                      std::to_string(ann.id) + ": unknown class '" + cls + "'");
            }
            ann.label = *label;
            const bool has_poly = jann.contains("polygon");
            const bool has_rle = jann.contains("rle");
            if (has_poly == has_rle) {
                throw ValidationError("image " + std::to_string(img.id) + ": annotation " +
                                      std::to_string(ann.id) +
                                      ": exactly one of polygon or rle is required");
            }
            if (has_poly) {
                const auto& jp = jann["polygon"];
                if (!jp.is_array() || jp.size() < 6 || jp.size() % 2 != 0) {
                    throw ValidationError("image " + std::to_string(img.id) + ": annotation " +
                                          std::to_string(ann.id) +
                                          ": polygon needs at least 3 x,y pairs");
                }
                Polygon poly;
                for (std::size_t i = 0; i + 1 < jp.size(); i += 2) {
                    poly.vertices.push_back({jp[i].get<double>(), jp[i + 1].get<double>()});
                }
                detail::check_polygon_bounds(poly, img, ann.id);
                if (poly.signed_area2() == 0.0) {
                    throw ValidationError("image " + std::to_string(img.id) + ": annotation " +
                                          std::to_string(ann.id) + ": degenerate polygon");
                }
                ann.polygon = std::move(poly);
            } else {
                BinaryMask mask;
                try {
                    mask = rle_from_string(jann["rle"].get<std::string>(), img.width, img.height);
                } catch (const MaskError& e) {
                    throw ValidationError("image " + std::to_string(img.id) + ": annotation " +
                                          std::to_string(ann.id) + ": " + e.what());
                }
                if (mask.empty()) {
                    throw ValidationError("image " + std::to_string(img.id) + ": annotation " +
                                          std::to_string(ann.id) + ": empty mask");
                }
                ann.mask = std::move(mask);
            }
            img.annotations.push_back(std::move(ann));
        }
        m.images.push_back(std::move(img));
    }
    return m;
}

inline nlohmann::ordered_json manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json doc;
    doc["schema"] = kManifestSchema;
    doc["version"] = kSchemaVersion;
    doc["name"] = m.name;
    doc["images"] = nlohmann::ordered_json::array();
    for (const auto& img : m.images) {
        nlohmann::ordered_json jimg;
        jimg["id"] = img.id;
        jimg["file"] = img.file;
        jimg["width"] = img.width;
        jimg["height"] = img.height;
        jimg["phase"] = img.phase;
        jimg["annotations"] = nlohmann::ordered_json::array();
        for (const auto& ann : img.annotations) {
            nlohmann::ordered_json jann;
            jann["id"] = ann.id;
            jann["class"] = to_string(ann.label);
            jann["iscrowd"] = ann.iscrowd;
            if (ann.polygon) {
                auto coords = nlohmann::ordered_json::array();
                for (const Point& p : ann.polygon->vertices) {
                    coords.push_back(p.x);
                    coords.push_back(p.y);
                }
                jann["polygon"] = std::move(coords);
            } else if (ann.mask) {
                jann["rle"] = rle_to_string(*ann.mask);
            }
            jimg["annotations"].push_back(std::move(jann));
        }
        doc["images"].push_back(std::move(jimg));
    }
    return doc;
}

inline Manifest parse_manifest(const std::string& text) {
    return manifest_from_json(detail::parse_json(text, "manifest"));
}

inline Manifest load_manifest(const std::filesystem::path& path) {
    return parse_manifest(detail::read_text_file(path));
}

inline std::string manifest_to_string(const Manifest& m) {
    return manifest_to_json(m).dump(2) + "\n";
}

inline void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    detail::write_text_file(path, manifest_to_string(m));
}

// Non-fatal consistency notes: phase 1/2 images are expected to hold a
// single class each.
inline std::vector<std::string> manifest_warnings(const Manifest& m) {
    std::vector<std::string> warnings;
    for (const auto& img : m.images) {
        if (img.phase == 3 || img.annotations.empty()) continue;
        const ClassLabel first = img.annotations.front().label;
        for (const auto& ann : img.annotations) {
            if (ann.label != first) {
                warnings.push_back("image " + std::to_string(img.id) + ": phase " +
                                   std::to_string(img.phase) +
                                   " image mixes classes (expected a single class)");
                break;
            }
        }
    }
    return warnings;
}

// ---------------------------------------------------------------------------
// Dataset statistics
// ---------------------------------------------------------------------------

struct StatsRow {
    std::size_t images = 0;
    std::size_t objects = 0;
    std::array<std::size_t, 4> per_class = {0, 0, 0, 0};

    bool operator==(const StatsRow&) const = default;
};

struct DatasetStats {
    std::array<StatsRow, 3> phases; // index p-1 holds phase p
    StatsRow combined;
};

inline DatasetStats dataset_stats(const Manifest& m) {
    DatasetStats stats;
    for (const auto& img : m.images) {
        StatsRow& row = stats.phases[img.phase - 1];
        row.images += 1;
        stats.combined.images += 1;
        for (const auto& ann : img.annotations) {
            row.objects += 1;
            row.per_class[class_index(ann.label)] += 1;
            stats.combined.objects += 1;
            stats.combined.per_class[class_index(ann.label)] += 1;
        }
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Stratified train/test split
// ---------------------------------------------------------------------------

struct SplitSpec {
    // Train fraction; the default encodes a 2.47:1 train:test ratio.
    double train_fraction = 2.47 / 3.47;
    std::uint64_t seed = 0;
    // Acceptable per-class deviation (train share vs full-dataset share),
    // as an absolute fraction.
    double tolerance = 0.05;

    static SplitSpec from_ratio(double ratio, std::uint64_t seed = 0, double tolerance = 0.05) {
        if (!(ratio > 0.0)) throw ConfigError("split ratio must be positive");
        return SplitSpec{ratio / (ratio + 1.0), seed, tolerance};
    }

    void validate() const {
        if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
            throw ConfigError("train fraction must lie strictly between 0 and 1");
        }
        if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
    }
};

struct SplitResult {
    Manifest train;
    Manifest test;
    // max over classes of |train share - full share|, as a fraction
    double max_deviation = 0.0;
    std::string warning; // empty when within tolerance
};

namespace detail {

// L1 distance between a side's class proportions and the full-dataset
// proportions; empty sides contribute nothing.
inline double side_divergence(const std::array<std::size_t, 4>& side,
                              const std::array<double, 4>& target) {
    std::size_t total = side[0] + side[1] + side[2] + side[3];
    if (total == 0) return 0.0;
    double d = 0.0;
    for (int c = 0; c < 4; ++c) {
        d += std::abs(static_cast<double>(side[c]) / static_cast<double>(total) - target[c]);
    }
    return d;
}

} // namespace detail

// Greedy class-stratified partition. Images are ordered by descending
// object count (seeded shuffle breaks ties) and assigned one by one to the
// side that minimizes the summed L1 divergence of both sides from the
// full-dataset class proportions, subject to the train-size quota.
inline SplitResult stratified_split(const Manifest& m, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = m.images.size();
    if (n < 2) throw ValidationError("split requires a manifest with at least 2 images");
    const std::size_t train_size = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * spec.train_fraction));

    std::array<std::size_t, 4> full_counts = {0, 0, 0, 0};
    std::vector<std::array<std::size_t, 4>> image_counts(n, {0, 0, 0, 0});
    std::vector<std::size_t> image_objects(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& ann : m.images[i].annotations) {
            image_counts[i][class_index(ann.label)] += 1;
            full_counts[class_index(ann.label)] += 1;
            image_objects[i] += 1;
        }
    }
    const std::size_t full_total = full_counts[0] + full_counts[1] + full_counts[2] + full_counts[3];
    std::array<double, 4> target = {0, 0, 0, 0};
    if (full_total > 0) {
        for (int c = 0; c < 4; ++c) {
            target[c] = static_cast<double>(full_counts[c]) / static_cast<double>(full_total);
        }
    }

    // Seeded Fisher-Yates, then a stable sort by object count, so equal-count
    // images keep their shuffled order.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(spec.seed, stream_id(0x53504C49)); // "SPLI"
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng.below(static_cast<std::uint32_t>(i + 1));
        std::swap(order[i], order[j]);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return image_objects[a] > image_objects[b];
    });

    std::array<std::size_t, 4> train_counts = {0, 0, 0, 0};
    std::array<std::size_t, 4> test_counts = {0, 0, 0, 0};
    std::vector<bool> in_train(n, false);
    std::size_t assigned_train = 0;
    std::size_t assigned_test = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        bool to_train;
        if (assigned_train == train_size) {
            to_train = false;
        } else if (assigned_test == n - train_size) {
            to_train = true;
        } else {
            auto with = [&](const std::array<std::size_t, 4>& side) {
                std::array<std::size_t, 4> s = side;
                for (int c = 0; c < 4; ++c) s[c] += image_counts[i][c];
                return s;
            };
            const double d_train = detail::side_divergence(with(train_counts), target) +
                                   detail::side_divergence(test_counts, target);
            const double d_test = detail::side_divergence(train_counts, target) +
                                  detail::side_divergence(with(test_counts), target);
            to_train = d_train <= d_test;
        }
        if (to_train) {
            in_train[i] = true;
            ++assigned_train;
            for (int c = 0; c < 4; ++c) train_counts[c] += image_counts[i][c];
        } else {
            ++assigned_test;
            for (int c = 0; c < 4; ++c) test_counts[c] += image_counts[i][c];
        }
    }

    SplitResult result;
    result.train.name = m.name.empty() ? "train" : m.name + ".train";
    result.test.name = m.name.empty() ? "test" : m.name + ".test";
    for (std::size_t i = 0; i < n; ++i) {
        (in_train[i] ? result.train : result.test).images.push_back(m.images[i]);
    }

    const std::size_t train_total =
        train_counts[0] + train_counts[1] + train_counts[2] + train_counts[3];
    for (int c = 0; c < 4; ++c) {
        const double share =
            train_total == 0 ? 0.0
                             : static_cast<double>(train_counts[c]) / static_cast<double>(train_total);
        result.max_deviation = std::max(result.max_deviation, std::abs(share - target[c]));
    }
    if (result.max_deviation > spec.tolerance) {
        std::ostringstream msg;
        msg << "stratification tolerance " << spec.tolerance
            << " not met: max class-share deviation " << result.max_deviation;
        result.warning = msg.str();
    }
    return result;
}

// ---------------------------------------------------------------------------
// Prediction I/O
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json predictions_to_json(const std::vector<Detection>& dets) {
    nlohmann::ordered_json doc;
    doc["schema"] = kPredictionSchema;
    doc["version"] = kSchemaVersion;
    doc["detections"] = nlohmann::ordered_json::array();
    for (const auto& d : dets) {
        nlohmann::ordered_json jd;
        jd["image_id"] = d.image_id;
        jd["class"] = d.label ? to_string(*d.label) : "unknown";
        jd["score"] = d.score;
        jd["rle"] = rle_to_string(d.mask);
        jd["bbox"] = {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max};
        doc["detections"].push_back(std::move(jd));
    }
    return doc;
}

inline void save_predictions(const std::vector<Detection>& dets,
                             const std::filesystem::path& path) {
    detail::write_text_file(path, predictions_to_json(dets).dump(2) + "\n");
}

// Parses, validates against the manifest, and returns detections sorted by
// (image id, descending score); equal scores keep file order.
inline std::vector<Detection> parse_predictions(const std::string& text, const Manifest& m) {
    const auto doc = detail::parse_json(text, "predictions");
    if (!doc.is_object() || doc.value("schema", "") != kPredictionSchema) {
        throw ValidationError("predictions: missing or unexpected schema tag");
    }
    if (doc.value("version", -1) != kSchemaVersion) {
        throw ValidationError("predictions: unsupported schema version");
    }
    std::map<int, const ImageRecord*> by_id;
    for (const auto& img : m.images) by_id[img.id] = &img;

    std::vector<Detection> dets;
    std::size_t index = 0;
    for (const auto& jd : doc.value("detections", nlohmann::ordered_json::array())) {
        Detection d;
        try {
            d.image_id = jd.at("image_id").get<int>();
            d.score = jd.at("score").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("predictions: bad detection record at index " +
                                  std::to_string(index) + ": " + e.what());
        }
        const auto it = by_id.find(d.image_id);
        if (it == by_id.end()) {
            throw ValidationError("predictions: detection " + std::to_string(index) +
                                  " references unknown image id " + std::to_string(d.image_id));
        }
        const ImageRecord& img = *it->second;
        if (!(d.score >= 0.0 && d.score <= 1.0)) {
            throw ValidationError("predictions: detection " + std::to_string(index) +
                                  " (image " + std::to_string(d.image_id) +
                                  "): score outside [0, 1]");
        }
        const std::string cls = jd.value("class", "unknown");
        if (cls != "unknown") {
            const auto label = class_from_string(cls);
            if (!label) {
                throw ValidationError("predictions: detection " + std::to_string(index) +
                                      ": unknown class '" + cls + "'");
            }
            d.label = *label;
        }
        if (!jd.contains("rle")) {
            throw ValidationError("predictions: detection " + std::to_string(index) +
                                  ": missing rle mask");
        }
        try {
            d.mask = rle_from_string(jd["rle"].get<std::string>(), img.width, img.height);
        } catch (const MaskError& e) {
            throw ValidationError("predictions: detection " + std::to_string(index) + " (image " +
                                  std::to_string(d.image_id) + "): mask does not match image " +
                                  "dimensions: " + e.what());
        }
        if (d.mask.empty()) {
            throw ValidationError("predictions: detection " + std::to_string(index) +
                                  ": empty mask");
        }
        const BBox derived = mask_to_bbox(d.mask);
        if (jd.contains("bbox")) {
            const auto& jb = jd["bbox"];
            if (!jb.is_array() || jb.size() != 4) {
                throw ValidationError("predictions: detection " + std::to_string(index) +
                                      ": bbox must be [x_min, y_min, x_max, y_max]");
            }
            try {
                d.bbox = BBox(jb[0].get<double>(), jb[1].get<double>(), jb[2].get<double>(),
                              jb[3].get<double>());
            } catch (const GeometryError& e) {
                throw ValidationError("predictions: detection " + std::to_string(index) + ": " +
                                      e.what());
            }
            const double slack = 1.0;
            if (std::abs(d.bbox.x_min - derived.x_min) > slack ||
                std::abs(d.bbox.y_min - derived.y_min) > slack ||
                std::abs(d.bbox.x_max - derived.x_max) > slack ||
                std::abs(d.bbox.y_max - derived.y_max) > slack) {
                throw ValidationError("predictions: detection " + std::to_string(index) +
                                      ": bbox disagrees with mask extent by more than 1 pixel");
            }
        } else {
            d.bbox = derived;
        }
        dets.push_back(std::move(d));
        ++index;
    }

    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.image_id != b.image_id) return a.image_id < b.image_id;
        return a.score > b.score;
    });
    return dets;
}

inline std::vector<Detection> load_predictions(const std::filesystem::path& path,
                                               const Manifest& m) {
    return parse_predictions(detail::read_text_file(path), m);
}

// Ground truth re-expressed as perfect predictions (score 1.0). Crowd
// regions are skipped; they mark ignore areas, not objects. Handy for
// evaluator self-checks.
inline std::vector<Detection> predictions_from_manifest(const Manifest& m) {
    std::vector<Detection> dets;
    for (const auto& img : m.images) {
        for (const auto& ann : img.annotations) {
            if (ann.iscrowd) continue;
            Detection d;
            d.image_id = img.id;
            d.label = ann.label;
            d.score = 1.0;
            d.mask = ann.rasterized(img.width, img.height);
            d.bbox = mask_to_bbox(d.mask);
            dets.push_back(std::move(d));
        }
    }
    return dets;
}

} // namespace foram
