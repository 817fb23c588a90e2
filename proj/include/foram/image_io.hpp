#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "foram/errors.hpp"
#include "foram/image.hpp"

namespace foram {

// Reads PNG/TIFF (or anything the codec layer knows) into a float RGB
// raster in [0, 1]. Grayscale replicates into three channels; an alpha
// channel is dropped.
inline RgbImage read_image(const std::filesystem::path& path) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw IoError("cannot read image " + path.string());

    double scale;
    switch (raw.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        case CV_32F: scale = 1.0; break;
        default:
            throw IoError("unsupported pixel depth in " + path.string());
    }
    const int channels = raw.channels();
    if (channels != 1 && channels != 3 && channels != 4) {
        throw IoError("unsupported channel count in " + path.string());
    }
    cv::Mat f32;
    raw.convertTo(f32, CV_32F, scale); // preserves the channel count

    RgbImage img = RgbImage::filled(f32.cols, f32.rows);
    for (int r = 0; r < f32.rows; ++r) {
        const float* row = f32.ptr<float>(r);
        for (int c = 0; c < f32.cols; ++c) {
            const float* px = row + static_cast<std::size_t>(c) * channels;
            if (channels == 1) {
                img.set_pixel(r, c, clamp_unit(px[0]), clamp_unit(px[0]), clamp_unit(px[0]));
            } else {
                // OpenCV stores BGR(A)
                img.set_pixel(r, c, clamp_unit(px[2]), clamp_unit(px[1]), clamp_unit(px[0]));
            }
        }
    }
    return img;
}

// Writes an 8-bit image; the format follows the file extension.
inline void write_image(const RgbImage& img, const std::filesystem::path& path) {
    cv::Mat out(img.height, img.width, CV_8UC3);
    const auto quantize = [](float v) {
        return static_cast<unsigned char>(std::lround(clamp_unit(v) * 255.0f));
    };
    for (int r = 0; r < img.height; ++r) {
        cv::Vec3b* row = out.ptr<cv::Vec3b>(r);
        for (int c = 0; c < img.width; ++c) {
            row[c] = cv::Vec3b(quantize(img.at(r, c, 2)), quantize(img.at(r, c, 1)),
                               quantize(img.at(r, c, 0)));
        }
    }
    if (!cv::imwrite(path.string(), out)) {
        throw IoError("cannot write image " + path.string());
    }
}

} // namespace foram
