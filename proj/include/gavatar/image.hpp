#pragma once

#include <string>
#include <vector>

#include "gavatar/types.hpp"

namespace gavatar {

// Row-major RGB image, values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height * width * 3

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height;
  }
};

// Binary PPM (P6, maxval 255). Quantization rounds half-up; this is the
// byte-stable golden-file format.
void write_ppm(const Image& img, const std::string& path);
Image read_ppm(const std::string& path);

}  // namespace gavatar
