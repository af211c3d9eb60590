#pragma once

#include "sparsedict/core.hpp"
#include "sparsedict/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace sparsedict {

/// Grayscale image, row-major real-valued pixels. Values live in [0, 255]
/// on disk; intermediate results may leave that range.
class GrayImage {
public:
  GrayImage() = default;
  GrayImage(Index width, Index height, double fill = 0.0)
      : width_(width), height_(height), pixels_(static_cast<std::size_t>(width * height), fill) {
    if (width < 1 || height < 1) throw InvalidInput("image dimensions must be positive");
  }

  Index width() const noexcept { return width_; }
  Index height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  double& at(Index row, Index col) { return pixels_[static_cast<std::size_t>(row * width_ + col)]; }
  double at(Index row, Index col) const { return pixels_[static_cast<std::size_t>(row * width_ + col)]; }

  std::vector<double>& pixels() noexcept { return pixels_; }
  const std::vector<double>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
  Index width_ = 0;
  Index height_ = 0;
  std::vector<double> pixels_;
};

/// Clamp to [0, 255] and round half away from zero.
inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::round(std::clamp(v, 0.0, 255.0)));
}

inline GrayImage clamped(const GrayImage& img) {
  GrayImage out = img;
  for (auto& v : out.pixels()) v = std::clamp(v, 0.0, 255.0);
  return out;
}

namespace pgm_detail {

inline void skip_space_and_comments(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline long read_header_int(std::istream& in, const std::string& what, const std::string& path) {
  skip_space_and_comments(in);
  long v = -1;
  if (!(in >> v) || v <= 0) throw FormatError(path + ": bad PGM " + what);
  return v;
}

} // namespace pgm_detail

/// Binary PGM (P5) with maxval 255.
inline GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open");
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw FormatError(path.string() + ": not a binary PGM (P5)");
  const long w = pgm_detail::read_header_int(in, "width", path.string());
  const long h = pgm_detail::read_header_int(in, "height", path.string());
  const long maxval = pgm_detail::read_header_int(in, "maxval", path.string());
  if (maxval != 255) throw FormatError(path.string() + ": maxval must be 255, got " + std::to_string(maxval));
  if (!std::isspace(in.get())) throw FormatError(path.string() + ": missing whitespace after header");
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w * h));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw FormatError(path.string() + ": truncated pixel data");
  GrayImage img(w, h);
  std::copy(bytes.begin(), bytes.end(), img.pixels().begin());
  return img;
}

inline void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<char> bytes(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), bytes.begin(),
                 [](double v) { return static_cast<char>(to_byte(v)); });
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path.string() + ": write failed");
}

/// Adds i.i.d. N(0, sigma^2) per pixel, row-major draw order, no clamping.
inline GrayImage add_gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidInput("noise sigma must be >= 0");
  GrayImage out = img;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (auto& v : out.pixels()) v += sigma * rng.normal();
  return out;
}

} // namespace sparsedict
