#pragma once

// Independent reference implementations used to cross-check the library:
// breadth-first component labeling, direct 2-D convolution, per-pixel
// polygon parity, and pixel-count IoU. Deliberately simple and slow.

#include <cmath>
#include <deque>
#include <vector>

#include "foram/geometry.hpp"
#include "foram/image.hpp"
#include "foram/pipeline.hpp"

namespace oracle {

// BFS flood fill; components numbered 1.. in scan order of first pixel.
inline foram::LabelImage flood_fill_components(const foram::BinaryGrid& grid, int connectivity) {
    foram::LabelImage out;
    out.width = grid.width;
    out.height = grid.height;
    out.labels.assign(static_cast<std::size_t>(grid.width) * grid.height, 0);
    const int dr8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    const int dc8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    const int dr4[] = {-1, 0, 0, 1};
    const int dc4[] = {0, -1, 1, 0};
    const int* dr = connectivity == 8 ? dr8 : dr4;
    const int* dc = connectivity == 8 ? dc8 : dc4;
    const int nn = connectivity;

    for (int r = 0; r < grid.height; ++r) {
        for (int c = 0; c < grid.width; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * grid.width + c;
            if (!grid.at(r, c) || out.labels[i] != 0) continue;
            const std::int32_t label = ++out.count;
            std::deque<std::pair<int, int>> queue = {{r, c}};
            out.labels[i] = label;
            while (!queue.empty()) {
                const auto [qr, qc] = queue.front();
                queue.pop_front();
                for (int k = 0; k < nn; ++k) {
                    const int rr = qr + dr[k];
                    const int cc = qc + dc[k];
                    if (rr < 0 || rr >= grid.height || cc < 0 || cc >= grid.width) continue;
                    const std::size_t j = static_cast<std::size_t>(rr) * grid.width + cc;
                    if (!grid.at(rr, cc) || out.labels[j] != 0) continue;
                    out.labels[j] = label;
                    queue.push_back({rr, cc});
                }
            }
        }
    }
    return out;
}

// Full 2-D Gaussian window, normalized, reflect padding.
inline foram::GrayImage direct_blur_2d(const foram::GrayImage& img, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int size = 2 * radius + 1;
    std::vector<double> weights(static_cast<std::size_t>(size) * size);
    double total = 0.0;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double w = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
            weights[static_cast<std::size_t>(dy + radius) * size + (dx + radius)] = w;
            total += w;
        }
    }
    for (double& w : weights) w /= total;

    auto reflect = [](int i, int n) {
        if (n == 1) return 0;
        const int period = 2 * n;
        int j = i % period;
        if (j < 0) j += period;
        return j < n ? j : period - 1 - j;
    };

    foram::GrayImage out = foram::GrayImage::filled(img.width, img.height);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int rr = reflect(r + dy, img.height);
                    const int cc = reflect(c + dx, img.width);
                    acc += weights[static_cast<std::size_t>(dy + radius) * size + (dx + radius)] *
                           img.at(rr, cc);
                }
            }
            out.set(r, c, static_cast<float>(std::min(1.0, std::max(0.0, acc))));
        }
    }
    return out;
}

// Even-odd test at a point: parity of edge crossings at or left of x.
inline bool polygon_contains(const foram::Polygon& poly, double x, double y) {
    const auto& v = poly.vertices;
    int crossings = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const foram::Point& a = v[i];
        const foram::Point& b = v[(i + 1) % v.size()];
        if ((a.y <= y && b.y > y) || (b.y <= y && a.y > y)) {
            const double xint = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (xint <= x) ++crossings;
        }
    }
    return (crossings % 2) == 1;
}

inline std::size_t grid_area(const foram::BinaryGrid& g) {
    std::size_t n = 0;
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) n += g.at(r, c) ? 1 : 0;
    }
    return n;
}

// Pixel-count IoU on decoded grids; crowd divides by the first area.
inline double pixel_iou(const foram::BinaryMask& a, const foram::BinaryMask& b, bool crowd) {
    const foram::BinaryGrid ga = a.to_grid();
    const foram::BinaryGrid gb = b.to_grid();
    std::size_t inter = 0, area_a = 0, area_b = 0;
    for (int r = 0; r < ga.height; ++r) {
        for (int c = 0; c < ga.width; ++c) {
            const bool pa = ga.at(r, c);
            const bool pb = gb.at(r, c);
            inter += (pa && pb) ? 1 : 0;
            area_a += pa ? 1 : 0;
            area_b += pb ? 1 : 0;
        }
    }
    const double denom = crowd ? static_cast<double>(area_a)
                               : static_cast<double>(area_a + area_b - inter);
    if (denom <= 0.0) return 0.0;
    return static_cast<double>(inter) / denom;
}

// Tightest pixel-aligned box around the set pixels, by direct scan.
inline foram::BBox bbox_from_grid(const foram::BinaryMask& mask) {
    const foram::BinaryGrid g = mask.to_grid();
    int min_r = g.height, max_r = -1, min_c = g.width, max_c = -1;
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!g.at(r, c)) continue;
            min_r = std::min(min_r, r);
            max_r = std::max(max_r, r);
            min_c = std::min(min_c, c);
            max_c = std::max(max_c, c);
        }
    }
    return foram::BBox(min_c, min_r, max_c + 1, max_r + 1);
}

} // namespace oracle
