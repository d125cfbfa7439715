#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace armrl {

enum class Channel { kRed = 0, kGreen = 1, kBlue = 2 };

/// 8-bit RGB image, row-major, channels interleaved.
class Image {
 public:
  Image() = default;
  Image(int width, int height) : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t at(int x, int y, Channel c) const { return data_[index(x, y) + static_cast<int>(c)]; }
  std::uint8_t& at(int x, int y, Channel c) { return data_[index(x, y) + static_cast<int>(c)]; }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const std::size_t i = index(x, y);
    data_[i] = r;
    data_[i + 1] = g;
    data_[i + 2] = b;
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 3; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// One bit per pixel, stored as bytes holding 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height) : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool get(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<std::uint8_t>& bits() { return bits_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// PNG I/O (libpng simplified API). Throws FormatError on failure.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);
void write_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace armrl
