#include "vlut/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace vlut {

namespace {

double sample_clamped(const Mat& plane, int r, int c) {
  r = std::clamp(r, 0, static_cast<int>(plane.rows()) - 1);
  c = std::clamp(c, 0, static_cast<int>(plane.cols()) - 1);
  return plane(r, c);
}

// Bilinear read at continuous pixel-center coordinates (u, v) = (x, y).
double bilinear_at(const Mat& plane, double x, double y) {
  const double fx = x - 0.5;
  const double fy = y - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double wx = fx - x0;
  const double wy = fy - y0;
  const double v00 = sample_clamped(plane, y0, x0);
  const double v01 = sample_clamped(plane, y0, x0 + 1);
  const double v10 = sample_clamped(plane, y0 + 1, x0);
  const double v11 = sample_clamped(plane, y0 + 1, x0 + 1);
  return v00 * (1 - wx) * (1 - wy) + v01 * wx * (1 - wy) + v10 * (1 - wx) * wy + v11 * wx * wy;
}

}  // namespace

ImageTensor bilinear_resize(const ImageTensor& src, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("bilinear_resize: bad output size");
  ImageTensor out(out_h, out_w);
  for (int c = 0; c < 3; ++c) out.plane[c] = bilinear_resize(src.plane[c], out_h, out_w);
  return out;
}

Mat bilinear_resize(const Mat& plane, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("bilinear_resize: bad output size");
  Mat out(out_h, out_w);
  const double sx = static_cast<double>(plane.cols()) / out_w;
  const double sy = static_cast<double>(plane.rows()) / out_h;
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      out(y, x) = bilinear_at(plane, (x + 0.5) * sx, (y + 0.5) * sy);
  return out;
}

Mat rgb_to_gray(const ImageTensor& src) {
  return 0.299 * src.plane[0] + 0.587 * src.plane[1] + 0.114 * src.plane[2];
}

std::array<double, 3> mean_color(const ImageTensor& src) {
  return {src.plane[0].mean(), src.plane[1].mean(), src.plane[2].mean()};
}

ImageTensor crop_resize(const ImageTensor& src, double cx_px, double cy_px, double side_px,
                        int out_size, const std::array<double, 3>& fill) {
  if (out_size <= 0 || !(side_px > 0)) throw std::invalid_argument("crop_resize: bad geometry");
  ImageTensor out(out_size, out_size);
  const double x0 = cx_px - side_px / 2.0;
  const double y0 = cy_px - side_px / 2.0;
  const double step = side_px / out_size;
  for (int y = 0; y < out_size; ++y) {
    const double sy = y0 + (y + 0.5) * step;
    for (int x = 0; x < out_size; ++x) {
      const double sx = x0 + (x + 0.5) * step;
      const bool inside = sx >= 0.0 && sx <= src.width && sy >= 0.0 && sy <= src.height;
      for (int c = 0; c < 3; ++c)
        out.plane[c](y, x) = inside ? bilinear_at(src.plane[c], sx, sy) : fill[c];
    }
  }
  return out;
}

void fill_rect(ImageTensor& img, double x1, double y1, double x2, double y2,
               const std::array<double, 3>& color) {
  const int cx1 = std::max(0, static_cast<int>(std::floor(x1)));
  const int cy1 = std::max(0, static_cast<int>(std::floor(y1)));
  const int cx2 = std::min(img.width, static_cast<int>(std::ceil(x2)));
  const int cy2 = std::min(img.height, static_cast<int>(std::ceil(y2)));
  for (int c = 0; c < 3; ++c)
    for (int y = cy1; y < cy2; ++y)
      for (int x = cx1; x < cx2; ++x) img.plane[c](y, x) = color[c];
}

void write_png(const std::string& path, const ImageTensor& img) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"),
                                                     &std::fclose);
  if (!fp) throw std::runtime_error("write_png: cannot open '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("write_png: init failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("write_png: init failure");
  }
  std::vector<unsigned char> rowbuf(static_cast<size_t>(img.width) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png: encode failure for '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.plane[c](y, x), 0.0, 1.0);
        rowbuf[static_cast<size_t>(x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    png_write_row(png, rowbuf.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageTensor read_png(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"),
                                                     &std::fclose);
  if (!fp) throw std::runtime_error("read_png: cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("read_png: init failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("read_png: init failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: decode failure for '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  ImageTensor img(static_cast<int>(height), static_cast<int>(width));
  std::vector<unsigned char> rowbuf(png_get_rowbytes(png, info));
  if (rowbuf.size() < static_cast<size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: unexpected row size in '" + path + "'");
  }
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, rowbuf.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c)
        img.plane[c](y, x) = rowbuf[static_cast<size_t>(x) * 3 + c] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace vlut
