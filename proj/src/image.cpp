#include "gavatar/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace gavatar {

namespace {

std::uint8_t quantize(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  const double scaled = std::floor(v * 255.0 + 0.5);
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace

void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::BadFile, "cannot open " + path + " for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x) * 3 + c] = quantize(img.at(x, y, c));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error(ErrorKind::BadFile, "write failed for " + path);
}

namespace {

int read_ppm_token(std::istream& in) {
  // Skips whitespace and '#' comments between header tokens.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw Error(ErrorKind::BadFile, "truncated PPM header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::BadFile, "cannot open " + path);
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') {
    throw Error(ErrorKind::BadFile, path + " is not a P6 PPM");
  }
  const int w = read_ppm_token(in);
  const int h = read_ppm_token(in);
  const int maxval = read_ppm_token(in);
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw Error(ErrorKind::BadFile, "unsupported PPM header in " + path);
  }
  Image img(w, h);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw Error(ErrorKind::BadFile, "truncated PPM payload in " + path);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[static_cast<std::size_t>(x) * 3 + c] / 255.0;
    }
  }
  return img;
}

}  // namespace gavatar
