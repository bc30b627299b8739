#pragma once

#include <string>
#include <vector>

#include "vad/tensor.hpp"

namespace vad {

/// Single-channel float image, row-major, values nominally in [0,1].
struct Image {
    int h = 0;
    int w = 0;
    std::vector<float> v;

    Image() = default;
    Image(int height, int width, float fill = 0.0f)
        : h(height), w(width), v(static_cast<std::size_t>(height) * width, fill) {}

    float& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    float at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
    /// Replicate-clamped read, used by filters near borders.
    float at_clamped(int y, int x) const;
};

/// Bilinear resample to target size (half-pixel centers). Identity when the
/// size is unchanged.
Image bilinear_resize(const Image& src, int out_h, int out_w);

/// resize to the pipeline's 32x32 working resolution
Image resize_grayscale(const Image& src);

/// out = in^gamma, elementwise; gamma < 1 brightens
Image gamma_correct(const Image& src, float gamma);

/// Drop (h-target_h)/2 rows top and the remainder bottom, keep all columns.
/// 32x32 -> 24x32 keeps rows 4..27.
Image center_crop_rows(const Image& src, int target_h);

Image hflip(const Image& src);

// 8-bit binary PGM (P5). Values are scaled by 255 on write and back on read.
void write_pgm(const std::string& path, const Image& img);
Image read_pgm(const std::string& path);

}  // namespace vad
