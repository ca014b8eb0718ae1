#pragma once

#include <array>
#include <string>

#include "vlut/domain.hpp"

namespace vlut {

// Bilinear resample with half-pixel centers; out-of-range samples clamp to
// the border.
ImageTensor bilinear_resize(const ImageTensor& src, int out_h, int out_w);
Mat bilinear_resize(const Mat& plane, int out_h, int out_w);

// Luma-weighted grayscale, values stay in [0,1].
Mat rgb_to_gray(const ImageTensor& src);

std::array<double, 3> mean_color(const ImageTensor& src);

// Samples a square window of side `side_px` centered at (cx_px, cy_px) in
// source pixel coordinates into an out_size x out_size image. Samples that
// fall outside the source are filled with `fill`.
ImageTensor crop_resize(const ImageTensor& src, double cx_px, double cy_px, double side_px,
                        int out_size, const std::array<double, 3>& fill);

// Axis-aligned filled rectangle, coordinates in pixels, clipped to the image.
void fill_rect(ImageTensor& img, double x1, double y1, double x2, double y2,
               const std::array<double, 3>& color);

// 8-bit RGB PNG IO. Writing quantizes with round(v*255); reading returns
// k/255.0, so write-then-read is exact for images whose planes already hold
// quantized values.
void write_png(const std::string& path, const ImageTensor& img);
ImageTensor read_png(const std::string& path);

}  // namespace vlut
