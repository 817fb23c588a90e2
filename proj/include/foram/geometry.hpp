#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "foram/errors.hpp"

namespace foram {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

// Axis-aligned box in continuous image coordinates, origin top-left.
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    BBox() = default;
    BBox(double x0, double y0, double x1, double y1)
        : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
        if (!(x_min <= x_max) || !(y_min <= y_max)) {
            throw GeometryError("invalid box: min corner must not exceed max corner");
        }
    }

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }

    bool operator==(const BBox&) const = default;
};

// Implicitly closed vertex ring (last vertex connects back to the first).
struct Polygon {
    std::vector<Point> vertices;

    // Twice the signed area (shoelace). Zero for degenerate rings.
    double signed_area2() const {
        double s = 0.0;
        const std::size_t n = vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = vertices[i];
            const Point& b = vertices[(i + 1) % n];
            s += a.x * b.y - b.x * a.y;
        }
        return s;
    }

    bool operator==(const Polygon&) const = default;
};

// Dense binary raster, row-major, one byte per pixel (0 or 1).
struct BinaryGrid {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    static BinaryGrid zeros(int width, int height) {
        if (width < 1 || height < 1) {
            throw GeometryError("grid dimensions must be at least 1x1");
        }
        BinaryGrid g;
        g.width = width;
        g.height = height;
        g.data.assign(static_cast<std::size_t>(width) * height, 0);
        return g;
    }

    std::uint8_t at(int row, int col) const {
        return data[static_cast<std::size_t>(row) * width + col];
    }
    void set(int row, int col, bool value) {
        data[static_cast<std::size_t>(row) * width + col] = value ? 1 : 0;
    }

    bool operator==(const BinaryGrid&) const = default;
};

// Run-length encoded binary mask. Runs are counts of alternating pixel
// values in column-major traversal order, starting with the count of
// leading zeros (possibly 0). Run counts always sum to width*height.
class BinaryMask {
public:
    BinaryMask() = default;

    static BinaryMask from_grid(const BinaryGrid& grid) {
        if (grid.width < 1 || grid.height < 1) {
            throw GeometryError("grid dimensions must be at least 1x1");
        }
        BinaryMask m;
        m.width_ = grid.width;
        m.height_ = grid.height;
        std::uint8_t current = 0;
        std::uint32_t run = 0;
        for (int c = 0; c < grid.width; ++c) {
            for (int r = 0; r < grid.height; ++r) {
                const std::uint8_t v = grid.at(r, c) ? 1 : 0;
                if (v == current) {
                    ++run;
                } else {
                    m.runs_.push_back(run);
                    current = v;
                    run = 1;
                }
            }
        }
        m.runs_.push_back(run);
        return m;
    }

    // Builds a mask from raw counts, validating that they cover the grid.
    // Non-canonical inputs (interior zero counts) are normalized.
    static BinaryMask from_runs(int width, int height, const std::vector<std::uint32_t>& runs) {
        if (width < 1 || height < 1) {
            throw GeometryError("mask dimensions must be at least 1x1");
        }
        std::uint64_t total = 0;
        for (std::uint32_t r : runs) total += r;
        const std::uint64_t expected = static_cast<std::uint64_t>(width) * height;
        if (total != expected) {
            throw MaskError("malformed mask: run lengths sum to " + std::to_string(total) +
                            ", expected " + std::to_string(expected));
        }
        BinaryMask m;
        m.width_ = width;
        m.height_ = height;
        // Canonicalize: merge empty and same-valued adjacent runs.
        std::uint64_t pending = 0;
        std::uint8_t pending_value = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const std::uint8_t run_value = (i % 2 == 0) ? 0 : 1;
            if (runs[i] == 0) continue;
            if (run_value == pending_value) {
                pending += runs[i];
            } else {
                m.runs_.push_back(static_cast<std::uint32_t>(pending));
                pending_value = run_value;
                pending = runs[i];
            }
        }
        m.runs_.push_back(static_cast<std::uint32_t>(pending));
        if (m.runs_.size() == 1 && m.runs_[0] == 0) {
            // All-empty input list cannot happen (total==expected>=1), but an
            // all-zero grid encodes as a single run.
            m.runs_[0] = static_cast<std::uint32_t>(expected);
        }
        return m;
    }

    BinaryGrid to_grid() const {
        if (width_ < 1 || height_ < 1) {
            throw GeometryError("cannot decode an empty mask object");
        }
        BinaryGrid g = BinaryGrid::zeros(width_, height_);
        std::uint64_t pos = 0;
        for (std::size_t i = 0; i < runs_.size(); ++i) {
            const bool ones = (i % 2 == 1);
            for (std::uint32_t k = 0; k < runs_[i]; ++k, ++pos) {
                if (ones) {
                    const int col = static_cast<int>(pos / height_);
                    const int row = static_cast<int>(pos % height_);
                    g.set(row, col, true);
                }
            }
        }
        return g;
    }

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<std::uint32_t>& runs() const { return runs_; }

    std::uint64_t area() const {
        std::uint64_t a = 0;
        for (std::size_t i = 1; i < runs_.size(); i += 2) a += runs_[i];
        return a;
    }

    bool empty() const { return area() == 0; }

    bool operator==(const BinaryMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint32_t> runs_;
};

inline BinaryMask rle_encode(const BinaryGrid& grid) { return BinaryMask::from_grid(grid); }
inline BinaryGrid rle_decode(const BinaryMask& mask) { return mask.to_grid(); }

// Exact intersection pixel count via a two-pointer merge over the run lists.
inline std::uint64_t mask_intersection_area(const BinaryMask& a, const BinaryMask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw GeometryError("mask dimensions differ: " + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                            "x" + std::to_string(b.height()));
    }
    const auto& ra = a.runs();
    const auto& rb = b.runs();
    std::uint64_t inter = 0;
    std::size_t ia = 0, ib = 0;
    std::uint64_t rem_a = ra.empty() ? 0 : ra[0];
    std::uint64_t rem_b = rb.empty() ? 0 : rb[0];
    while (ia < ra.size() && ib < rb.size()) {
        if (rem_a == 0) {
            if (++ia < ra.size()) rem_a = ra[ia];
            continue;
        }
        if (rem_b == 0) {
            if (++ib < rb.size()) rem_b = rb[ib];
            continue;
        }
        const std::uint64_t step = std::min(rem_a, rem_b);
        if ((ia % 2 == 1) && (ib % 2 == 1)) inter += step;
        rem_a -= step;
        rem_b -= step;
    }
    return inter;
}

// Intersection-over-union on masks, exact integer pixel counts.
// With crowd=true the denominator is |a| alone (a is the detection, b the
// crowd region), so a detection inside a large crowd still scores high.
// 0/0 is defined as 0.
inline double mask_iou(const BinaryMask& a, const BinaryMask& b, bool crowd = false) {
    const std::uint64_t inter = mask_intersection_area(a, b);
    const std::uint64_t denom = crowd ? a.area() : a.area() + b.area() - inter;
    if (denom == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(denom);
}

inline double bbox_iou(const BBox& a, const BBox& b, bool crowd = false) {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    const double inter = std::max(0.0, iw) * std::max(0.0, ih);
    const double denom = crowd ? a.area() : a.area() + b.area() - inter;
    if (denom <= 0.0) return 0.0;
    return inter / denom;
}

// Tightest box containing all set pixels; a pixel at (row, col) occupies
// [col, col+1] x [row, row+1].
inline BBox mask_to_bbox(const BinaryMask& mask) {
    const auto& runs = mask.runs();
    const std::uint64_t h = static_cast<std::uint64_t>(mask.height());
    std::int64_t min_col = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_col = -1;
    std::int64_t min_row = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_row = -1;
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i % 2 == 1 && runs[i] > 0) {
            const std::uint64_t first = pos;
            const std::uint64_t last = pos + runs[i] - 1;
            const std::int64_t c0 = static_cast<std::int64_t>(first / h);
            const std::int64_t c1 = static_cast<std::int64_t>(last / h);
            min_col = std::min(min_col, c0);
            max_col = std::max(max_col, c1);
            if (c0 == c1) {
                min_row = std::min(min_row, static_cast<std::int64_t>(first % h));
                max_row = std::max(max_row, static_cast<std::int64_t>(last % h));
            } else {
                // The run wraps at least one column boundary, so it touches
                // both the top and bottom rows.
                min_row = 0;
                max_row = static_cast<std::int64_t>(h) - 1;
            }
        }
        pos += runs[i];
    }
    if (max_col < 0) {
        throw GeometryError("mask_to_bbox: mask has no set pixels");
    }
    return BBox(static_cast<double>(min_col), static_cast<double>(min_row),
                static_cast<double>(max_col + 1), static_cast<double>(max_row + 1));
}

// Scanline fill with the even-odd rule, sampled at pixel centers
// (col + 0.5, row + 0.5). Geometry outside the canvas is clipped; a
// polygon that covers no pixel center yields an empty mask.
inline BinaryMask rasterize_polygon(const Polygon& poly, int width, int height) {
    if (width < 1 || height < 1) {
        throw GeometryError("canvas dimensions must be at least 1x1");
    }
    if (poly.vertices.size() < 3) {
        throw GeometryError("polygon must have at least 3 vertices");
    }
    BinaryGrid grid = BinaryGrid::zeros(width, height);
    const auto& v = poly.vertices;
    const std::size_t n = v.size();
    std::vector<double> crossings;
    for (int row = 0; row < height; ++row) {
        const double yc = row + 0.5;
        crossings.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = v[i];
            const Point& b = v[(i + 1) % n];
            // Half-open span in y so shared vertices count once.
            if ((a.y <= yc && b.y > yc) || (b.y <= yc && a.y > yc)) {
                crossings.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            // Pixel centers col + 0.5 in [crossings[k], crossings[k+1]).
            int c0 = static_cast<int>(std::ceil(crossings[k] - 0.5));
            int c1 = static_cast<int>(std::ceil(crossings[k + 1] - 0.5));
            c0 = std::max(c0, 0);
            c1 = std::min(c1, width);
            for (int c = c0; c < c1; ++c) grid.set(row, c, true);
        }
    }
    return BinaryMask::from_grid(grid);
}

enum class Axis { horizontal, vertical };

inline BinaryMask flip_mask(const BinaryMask& mask, Axis axis) {
    BinaryGrid g = mask.to_grid();
    BinaryGrid out = BinaryGrid::zeros(g.width, g.height);
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!g.at(r, c)) continue;
            if (axis == Axis::horizontal) {
                out.set(r, g.width - 1 - c, true);
            } else {
                out.set(g.height - 1 - r, c, true);
            }
        }
    }
    return BinaryMask::from_grid(out);
}

} // namespace foram
