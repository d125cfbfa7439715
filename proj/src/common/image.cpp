#include "armrl/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>
#include <string>

#include "armrl/error.hpp"

namespace armrl {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.c_str()) == 0) {
    throw FormatError("cannot read PNG '" + path.string() + "': " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (png_image_finish_read(&png, nullptr, image.data().data(), 0, nullptr) == 0) {
    std::string msg = png.message;
    png_image_free(&png);
    throw FormatError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&png, path.c_str(), 0, image.data().data(), 0, nullptr) == 0) {
    throw FormatError("cannot write PNG '" + path.string() + "': " + png.message);
  }
}

void write_png(const std::filesystem::path& path, const BinaryMask& mask) {
  Image image(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const std::uint8_t v = mask.get(x, y) ? 255 : 0;
      image.set(x, y, v, v, v);
    }
  }
  write_png(path, image);
}

}  // namespace armrl
