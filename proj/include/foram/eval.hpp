#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "foram/dataset.hpp"
#include "foram/errors.hpp"
#include "foram/geometry.hpp"

namespace foram {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Task { bbox, mask };

inline const char* to_string(Task task) { return task == Task::bbox ? "bbox" : "mask"; }

inline std::optional<Task> task_from_string(const std::string& name) {
    if (name == "bbox") return Task::bbox;
    if (name == "mask") return Task::mask;
    return std::nullopt;
}

struct EvalConfig {
    std::vector<double> iou_thresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                          0.75, 0.80, 0.85, 0.90, 0.95};
    int max_detections = 256; // per image and class
    Task task = Task::mask;
    std::vector<ClassLabel> included_classes = {ClassLabel::agglutinated, ClassLabel::benthic,
                                                ClassLabel::planktic, ClassLabel::sediment};
    int recall_grid_size = 101;
    // Pool every label (and unlabeled detections) into one bucket instead of
    // scoring per class.
    bool class_agnostic = false;

    void validate() const {
        if (iou_thresholds.empty()) throw ConfigError("at least one IoU threshold is required");
        double prev = 0.0;
        for (double t : iou_thresholds) {
            if (!(t > 0.0 && t <= 1.0)) throw ConfigError("IoU thresholds must lie in (0, 1]");
            if (!(t > prev)) throw ConfigError("IoU thresholds must be strictly increasing");
            prev = t;
        }
        if (max_detections < 1) throw ConfigError("max_detections must be at least 1");
        if (recall_grid_size < 2) throw ConfigError("recall grid needs at least 2 points");
        if (included_classes.empty()) throw ConfigError("included_classes must not be empty");
        std::array<bool, 4> seen = {false, false, false, false};
        for (ClassLabel c : included_classes) {
            if (seen[class_index(c)]) throw ConfigError("included_classes lists a class twice");
            seen[class_index(c)] = true;
        }
    }
};

// ---------------------------------------------------------------------------
// Greedy matching
// ---------------------------------------------------------------------------

enum class Outcome { tp, fp, ignored };

struct MatchEntry {
    std::size_t det_index = 0; // position in the detection list passed in
    Outcome outcome = Outcome::fp;
    int gt_id = -1; // matched ground-truth id; -1 for false positives
    double iou = 0.0;
};

// One image+class at one threshold. `iou[d][g]` must already hold crowd IoU
// (intersection over detection area) in columns where gt_crowd[g] is set.
// Detections are processed in the given order: each takes the unmatched
// non-crowd GT of highest IoU >= threshold (ties to the lowest GT id);
// failing that, a crowd match makes it ignored; failing that it is a false
// positive. Crowd GTs absorb any number of detections.
inline std::vector<MatchEntry> greedy_match(const std::vector<std::vector<double>>& iou,
                                            const std::vector<int>& gt_ids,
                                            const std::vector<bool>& gt_crowd,
                                            double threshold) {
    const std::size_t n_gt = gt_ids.size();
    if (gt_crowd.size() != n_gt) throw GeometryError("greedy_match: gt arrays disagree in size");
    std::vector<bool> used(n_gt, false);
    std::vector<MatchEntry> entries;
    entries.reserve(iou.size());
    for (std::size_t d = 0; d < iou.size(); ++d) {
        if (iou[d].size() != n_gt) throw GeometryError("greedy_match: ragged IoU matrix");
        MatchEntry e;
        e.det_index = d;
        int best = -1;
        for (std::size_t g = 0; g < n_gt; ++g) {
            if (gt_crowd[g] || used[g]) continue;
            if (iou[d][g] < threshold) continue;
            if (best < 0 || iou[d][g] > iou[d][best] ||
                (iou[d][g] == iou[d][best] && gt_ids[g] < gt_ids[best])) {
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            used[best] = true;
            e.outcome = Outcome::tp;
            e.gt_id = gt_ids[best];
            e.iou = iou[d][best];
        } else {
            int crowd = -1;
            for (std::size_t g = 0; g < n_gt; ++g) {
                if (!gt_crowd[g]) continue;
                if (iou[d][g] < threshold) continue;
                if (crowd < 0 || iou[d][g] > iou[d][crowd] ||
                    (iou[d][g] == iou[d][crowd] && gt_ids[g] < gt_ids[crowd])) {
                    crowd = static_cast<int>(g);
                }
            }
            if (crowd >= 0) {
                e.outcome = Outcome::ignored;
                e.gt_id = gt_ids[crowd];
                e.iou = iou[d][crowd];
            } else {
                e.outcome = Outcome::fp;
            }
        }
        entries.push_back(e);
    }
    return entries;
}

// ---------------------------------------------------------------------------
// Precision-recall curves
// ---------------------------------------------------------------------------

struct RawPoint {
    double recall = 0.0;
    double precision = 0.0;
};

struct PRCurve {
    double iou_threshold = 0.0;
    std::string class_name;
    std::vector<double> recall_grid;
    std::vector<double> precision; // interpolated, one per grid point
    std::vector<RawPoint> raw;     // one per swept detection
};

inline std::vector<double> recall_grid_points(int size) {
    std::vector<double> grid(size);
    for (int i = 0; i < size; ++i) {
        grid[i] = static_cast<double>(i) / static_cast<double>(size - 1);
    }
    return grid;
}

// Interpolated precision at r = max precision over raw points with
// recall >= r; 0 where no such point exists. Raw recalls must be
// non-decreasing (they are, along a sweep).
inline std::vector<double> interpolate_precision(const std::vector<RawPoint>& raw,
                                                 const std::vector<double>& grid) {
    // suffix maxima: envelope[i] = max precision over raw[i..]
    std::vector<double> envelope(raw.size());
    double running = 0.0;
    for (std::size_t i = raw.size(); i-- > 0;) {
        running = std::max(running, raw[i].precision);
        envelope[i] = running;
    }
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        // first raw point with recall >= grid[k]
        std::size_t lo = 0, hi = raw.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (raw[mid].recall >= grid[k]) hi = mid;
            else lo = mid + 1;
        }
        out[k] = lo < raw.size() ? envelope[lo] : 0.0;
    }
    return out;
}

inline double average_precision(const std::vector<double>& interpolated) {
    double sum = 0.0;
    for (double p : interpolated) sum += p;
    return sum / static_cast<double>(interpolated.size());
}

// ---------------------------------------------------------------------------
// Full evaluation
// ---------------------------------------------------------------------------

struct ClassMetrics {
    std::string class_name;
    double ap = 0.0; // mean over thresholds
    double ar = 0.0; // mean over thresholds of final recall under the cap
    std::vector<double> ap_by_threshold;
    std::vector<double> recall_by_threshold;
};

struct MetricsReport {
    Task task = Task::mask;
    EvalConfig config;
    double ap = 0.0;
    std::optional<double> ap50;
    std::optional<double> ap75;
    double ar = 0.0;
    std::vector<double> ap_by_threshold; // parallel to config.iou_thresholds
    std::vector<double> ar_by_threshold;
    std::vector<ClassMetrics> per_class; // active (nonzero-GT) buckets only
    std::vector<PRCurve> curves;         // per class per threshold, plus "mean"
    std::vector<std::string> diagnostics;
};

namespace detail {

struct EvalImageBucket {
    std::vector<int> gt_ids;
    std::vector<bool> gt_crowd;
    std::vector<BinaryMask> gt_masks; // mask task only
    std::vector<BBox> gt_boxes;       // bbox task only
    std::vector<std::size_t> det_indices;
};

struct SweepItem {
    double score = 0.0;
    std::size_t input_index = 0;
    Outcome outcome = Outcome::fp;
};

} // namespace detail

// Scores detections against ground truth under the COCO-style protocol
// configured by cfg. Detections must reference manifest images; detections
// whose class is excluded (or unknown, outside class-agnostic mode) are
// dropped with a note in the report diagnostics.
inline MetricsReport evaluate(const Manifest& gt, const std::vector<Detection>& dets,
                              const EvalConfig& cfg) {
    cfg.validate();

    std::array<bool, 4> included = {false, false, false, false};
    for (ClassLabel c : cfg.included_classes) included[class_index(c)] = true;

    // Bucket labels: one per included class, or a single pooled bucket.
    std::vector<std::string> bucket_names;
    std::map<int, std::size_t> bucket_of_class; // class_index -> bucket
    if (cfg.class_agnostic) {
        bucket_names.push_back("all");
        for (int c = 0; c < 4; ++c) {
            if (included[c]) bucket_of_class[c] = 0;
        }
    } else {
        for (ClassLabel c : kAllClasses) {
            if (!included[class_index(c)]) continue;
            bucket_of_class[class_index(c)] = bucket_names.size();
            bucket_names.push_back(to_string(c));
        }
    }
    const std::size_t n_buckets = bucket_names.size();
    const std::size_t n_images = gt.images.size();

    std::map<int, std::size_t> image_pos;
    for (std::size_t i = 0; i < n_images; ++i) {
        image_pos[gt.images[i].id] = i;
    }

    // Ground truth into buckets.
    std::vector<std::vector<detail::EvalImageBucket>> buckets(
        n_buckets, std::vector<detail::EvalImageBucket>(n_images));
    std::vector<std::size_t> npig(n_buckets, 0);
    for (std::size_t i = 0; i < n_images; ++i) {
        const ImageRecord& img = gt.images[i];
        for (const AnnotationRecord& ann : img.annotations) {
            const auto it = bucket_of_class.find(class_index(ann.label));
            if (it == bucket_of_class.end()) continue;
            detail::EvalImageBucket& b = buckets[it->second][i];
            b.gt_ids.push_back(ann.id);
            b.gt_crowd.push_back(ann.iscrowd);
            if (cfg.task == Task::mask) {
                b.gt_masks.push_back(ann.rasterized(img.width, img.height));
            } else {
                b.gt_boxes.push_back(mask_to_bbox(ann.rasterized(img.width, img.height)));
            }
            if (!ann.iscrowd) npig[it->second] += 1;
        }
    }

    // Detections into buckets.
    MetricsReport report;
    report.task = cfg.task;
    report.config = cfg;
    std::size_t dropped_unknown = 0;
    std::size_t dropped_excluded = 0;
    for (std::size_t d = 0; d < dets.size(); ++d) {
        const Detection& det = dets[d];
        std::size_t bucket;
        if (cfg.class_agnostic) {
            if (det.label && !included[class_index(*det.label)]) {
                ++dropped_excluded;
                continue;
            }
            bucket = 0;
        } else {
            if (!det.label) {
                ++dropped_unknown;
                continue;
            }
            const auto it = bucket_of_class.find(class_index(*det.label));
            if (it == bucket_of_class.end()) {
                ++dropped_excluded;
                continue;
            }
            bucket = it->second;
        }
        const auto pos = image_pos.find(det.image_id);
        if (pos == image_pos.end()) {
            throw ValidationError("evaluate: detection references unknown image id " +
                                  std::to_string(det.image_id));
        }
        const ImageRecord& img = gt.images[pos->second];
        if (det.mask.width() != img.width || det.mask.height() != img.height) {
            throw GeometryError("evaluate: detection mask for image " +
                                std::to_string(det.image_id) +
                                " does not match the image dimensions");
        }
        buckets[bucket][pos->second].det_indices.push_back(d);
    }
    if (dropped_unknown > 0) {
        report.diagnostics.push_back(std::to_string(dropped_unknown) +
                                     " detection(s) without a class label dropped "
                                     "(class-aware evaluation)");
    }
    if (dropped_excluded > 0) {
        report.diagnostics.push_back(std::to_string(dropped_excluded) +
                                     " detection(s) of excluded classes dropped");
    }

    std::size_t total_gt = 0;
    for (std::size_t b = 0; b < n_buckets; ++b) total_gt += npig[b];
    if (total_gt == 0) {
        throw ValidationError("evaluate: no (non-crowd) ground-truth objects in scope");
    }

    // Per (bucket, image): sort by descending score (ties keep input order,
    // already ascending), cap, and precompute the IoU matrix.
    const std::size_t cap = static_cast<std::size_t>(cfg.max_detections);
    std::vector<std::vector<std::vector<std::vector<double>>>> iou_matrices(n_buckets);
    for (std::size_t b = 0; b < n_buckets; ++b) {
        iou_matrices[b].resize(n_images);
        for (std::size_t i = 0; i < n_images; ++i) {
            detail::EvalImageBucket& bi = buckets[b][i];
            std::stable_sort(bi.det_indices.begin(), bi.det_indices.end(),
                             [&](std::size_t a, std::size_t c) {
                                 return dets[a].score > dets[c].score;
                             });
            if (bi.det_indices.size() > cap) bi.det_indices.resize(cap);
            auto& matrix = iou_matrices[b][i];
            matrix.resize(bi.det_indices.size());
            for (std::size_t d = 0; d < bi.det_indices.size(); ++d) {
                const Detection& det = dets[bi.det_indices[d]];
                matrix[d].resize(bi.gt_ids.size());
                for (std::size_t g = 0; g < bi.gt_ids.size(); ++g) {
                    matrix[d][g] = cfg.task == Task::mask
                                       ? mask_iou(det.mask, bi.gt_masks[g], bi.gt_crowd[g])
                                       : bbox_iou(det.bbox, bi.gt_boxes[g], bi.gt_crowd[g]);
                }
            }
        }
    }

    const std::vector<double> grid = recall_grid_points(cfg.recall_grid_size);
    const std::size_t n_thresholds = cfg.iou_thresholds.size();
    std::vector<bool> active(n_buckets);
    for (std::size_t b = 0; b < n_buckets; ++b) {
        active[b] = npig[b] > 0;
        if (!active[b]) {
            report.diagnostics.push_back("class " + bucket_names[b] +
                                         ": no ground truth; skipped");
        }
    }

    std::vector<std::vector<double>> ap(n_buckets, std::vector<double>(n_thresholds, 0.0));
    std::vector<std::vector<double>> max_recall(n_buckets,
                                                std::vector<double>(n_thresholds, 0.0));
    std::vector<std::vector<std::vector<double>>> interp(
        n_buckets, std::vector<std::vector<double>>(n_thresholds));

    for (std::size_t b = 0; b < n_buckets; ++b) {
        if (!active[b]) continue;
        for (std::size_t ti = 0; ti < n_thresholds; ++ti) {
            const double t = cfg.iou_thresholds[ti];
            std::vector<detail::SweepItem> items;
            for (std::size_t i = 0; i < n_images; ++i) {
                const detail::EvalImageBucket& bi = buckets[b][i];
                if (bi.det_indices.empty()) continue;
                const auto entries =
                    greedy_match(iou_matrices[b][i], bi.gt_ids, bi.gt_crowd, t);
                for (const MatchEntry& e : entries) {
                    if (e.outcome == Outcome::ignored) continue;
                    const std::size_t input = bi.det_indices[e.det_index];
                    items.push_back({dets[input].score, input, e.outcome});
                }
            }
            std::sort(items.begin(), items.end(),
                      [](const detail::SweepItem& a, const detail::SweepItem& c) {
                          if (a.score != c.score) return a.score > c.score;
                          return a.input_index < c.input_index;
                      });
            PRCurve curve;
            curve.iou_threshold = t;
            curve.class_name = bucket_names[b];
            curve.recall_grid = grid;
            std::size_t tp = 0, fp = 0;
            for (const auto& item : items) {
                (item.outcome == Outcome::tp ? tp : fp) += 1;
                RawPoint p;
                p.recall = static_cast<double>(tp) / static_cast<double>(npig[b]);
                p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
                curve.raw.push_back(p);
            }
            curve.precision = interpolate_precision(curve.raw, grid);
            ap[b][ti] = average_precision(curve.precision);
            max_recall[b][ti] = curve.raw.empty() ? 0.0 : curve.raw.back().recall;
            interp[b][ti] = curve.precision;
            report.curves.push_back(std::move(curve));
        }
    }

    // Mean curve per threshold across active buckets.
    std::size_t n_active = 0;
    for (std::size_t b = 0; b < n_buckets; ++b) n_active += active[b] ? 1 : 0;
    for (std::size_t ti = 0; ti < n_thresholds; ++ti) {
        PRCurve curve;
        curve.iou_threshold = cfg.iou_thresholds[ti];
        curve.class_name = "mean";
        curve.recall_grid = grid;
        curve.precision.assign(grid.size(), 0.0);
        for (std::size_t b = 0; b < n_buckets; ++b) {
            if (!active[b]) continue;
            for (std::size_t k = 0; k < grid.size(); ++k) {
                curve.precision[k] += interp[b][ti][k];
            }
        }
        for (double& p : curve.precision) p /= static_cast<double>(n_active);
        report.curves.push_back(std::move(curve));
    }

    // Scalar roll-ups.
    report.ap_by_threshold.assign(n_thresholds, 0.0);
    report.ar_by_threshold.assign(n_thresholds, 0.0);
    for (std::size_t ti = 0; ti < n_thresholds; ++ti) {
        for (std::size_t b = 0; b < n_buckets; ++b) {
            if (!active[b]) continue;
            report.ap_by_threshold[ti] += ap[b][ti];
            report.ar_by_threshold[ti] += max_recall[b][ti];
        }
        report.ap_by_threshold[ti] /= static_cast<double>(n_active);
        report.ar_by_threshold[ti] /= static_cast<double>(n_active);
        report.ap += report.ap_by_threshold[ti];
        report.ar += report.ar_by_threshold[ti];
        if (cfg.iou_thresholds[ti] == 0.5) report.ap50 = report.ap_by_threshold[ti];
        if (cfg.iou_thresholds[ti] == 0.75) report.ap75 = report.ap_by_threshold[ti];
    }
    report.ap /= static_cast<double>(n_thresholds);
    report.ar /= static_cast<double>(n_thresholds);

    for (std::size_t b = 0; b < n_buckets; ++b) {
        if (!active[b]) continue;
        ClassMetrics cm;
        cm.class_name = bucket_names[b];
        cm.ap_by_threshold = ap[b];
        cm.recall_by_threshold = max_recall[b];
        for (std::size_t ti = 0; ti < n_thresholds; ++ti) {
            cm.ap += ap[b][ti];
            cm.ar += max_recall[b][ti];
        }
        cm.ap /= static_cast<double>(n_thresholds);
        cm.ar /= static_cast<double>(n_thresholds);
        report.per_class.push_back(std::move(cm));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report export
// ---------------------------------------------------------------------------

inline constexpr const char* kMetricsSchema = "foram/metrics";

inline nlohmann::ordered_json report_to_json(const MetricsReport& r) {
    nlohmann::ordered_json doc;
    doc["schema"] = kMetricsSchema;
    doc["version"] = kSchemaVersion;
    doc["task"] = to_string(r.task);
    nlohmann::ordered_json jcfg;
    jcfg["iou_thresholds"] = r.config.iou_thresholds;
    jcfg["max_detections"] = r.config.max_detections;
    auto jclasses = nlohmann::ordered_json::array();
    for (ClassLabel c : r.config.included_classes) jclasses.push_back(to_string(c));
    jcfg["included_classes"] = std::move(jclasses);
    jcfg["recall_grid_size"] = r.config.recall_grid_size;
    jcfg["class_agnostic"] = r.config.class_agnostic;
    doc["config"] = std::move(jcfg);
    nlohmann::ordered_json jm;
    jm["ap"] = r.ap;
    jm["ap50"] = r.ap50 ? nlohmann::ordered_json(*r.ap50) : nlohmann::ordered_json(nullptr);
    jm["ap75"] = r.ap75 ? nlohmann::ordered_json(*r.ap75) : nlohmann::ordered_json(nullptr);
    jm["ar"] = r.ar;
    doc["metrics"] = std::move(jm);
    doc["ap_by_threshold"] = r.ap_by_threshold;
    doc["ar_by_threshold"] = r.ar_by_threshold;
    doc["per_class"] = nlohmann::ordered_json::array();
    for (const ClassMetrics& cm : r.per_class) {
        nlohmann::ordered_json jc;
        jc["class"] = cm.class_name;
        jc["ap"] = cm.ap;
        jc["ar"] = cm.ar;
        jc["ap_by_threshold"] = cm.ap_by_threshold;
        jc["recall_by_threshold"] = cm.recall_by_threshold;
        doc["per_class"].push_back(std::move(jc));
    }
    doc["diagnostics"] = r.diagnostics;
    return doc;
}

inline std::string report_summary_string(const MetricsReport& r) {
    return report_to_json(r).dump(2) + "\n";
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

// One row per grid point: iou_threshold,class,recall,precision.
inline std::string report_curves_csv(const MetricsReport& r) {
    std::string out = "iou_threshold,class,recall,precision\n";
    for (const PRCurve& c : r.curves) {
        for (std::size_t k = 0; k < c.recall_grid.size(); ++k) {
            out += detail::format_double(c.iou_threshold);
            out.push_back(',');
            out += c.class_name;
            out.push_back(',');
            out += detail::format_double(c.recall_grid[k]);
            out.push_back(',');
            out += detail::format_double(c.precision[k]);
            out.push_back('\n');
        }
    }
    return out;
}

} // namespace foram
