#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "foram/errors.hpp"
#include "foram/geometry.hpp"

namespace foram {

// Single-channel luminance raster, row-major, values in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    static GrayImage filled(int width, int height, float value = 0.0f) {
        if (width < 1 || height < 1) {
            throw GeometryError("image dimensions must be at least 1x1");
        }
        GrayImage img;
        img.width = width;
        img.height = height;
        img.values.assign(static_cast<std::size_t>(width) * height, value);
        return img;
    }

    float at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * width + col];
    }
    void set(int row, int col, float v) {
        values[static_cast<std::size_t>(row) * width + col] = v;
    }

    bool operator==(const GrayImage&) const = default;
};

// Interleaved RGB raster, row-major, values in [0, 1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<float> values; // 3 * width * height, r g b per pixel

    static RgbImage filled(int width, int height, float r = 0.0f, float g = 0.0f, float b = 0.0f) {
        if (width < 1 || height < 1) {
            throw GeometryError("image dimensions must be at least 1x1");
        }
        RgbImage img;
        img.width = width;
        img.height = height;
        img.values.resize(static_cast<std::size_t>(width) * height * 3);
        for (std::size_t p = 0; p < static_cast<std::size_t>(width) * height; ++p) {
            img.values[p * 3 + 0] = r;
            img.values[p * 3 + 1] = g;
            img.values[p * 3 + 2] = b;
        }
        return img;
    }

    std::size_t index(int row, int col) const {
        return (static_cast<std::size_t>(row) * width + col) * 3;
    }
    float at(int row, int col, int channel) const { return values[index(row, col) + channel]; }
    void set(int row, int col, int channel, float v) { values[index(row, col) + channel] = v; }
    void set_pixel(int row, int col, float r, float g, float b) {
        const std::size_t i = index(row, col);
        values[i + 0] = r;
        values[i + 1] = g;
        values[i + 2] = b;
    }

    bool operator==(const RgbImage&) const = default;
};

inline float clamp_unit(float v) { return std::min(1.0f, std::max(0.0f, v)); }
inline double clamp_unit(double v) { return std::min(1.0, std::max(0.0, v)); }

// Closed interval used by sampling configs.
struct Range {
    double lo = 0.0;
    double hi = 0.0;

    void validate(const char* what) const {
        if (!(lo <= hi)) throw ConfigError(std::string(what) + ": range low exceeds high");
    }
    bool collapsed() const { return lo == hi; }
};

inline RgbImage flip_image(const RgbImage& img, Axis axis) {
    RgbImage out = img;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const int sr = (axis == Axis::vertical) ? img.height - 1 - r : r;
            const int sc = (axis == Axis::horizontal) ? img.width - 1 - c : c;
            out.set_pixel(r, c, img.at(sr, sc, 0), img.at(sr, sc, 1), img.at(sr, sc, 2));
        }
    }
    return out;
}

} // namespace foram
