#include "relightkit/image.hpp"

#include <png.h>

#include <algorithm>
#include <string>

namespace relightkit {

Image resize_area(const Image& src, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("resize target must be positive");
  if (src.width == width && src.height == height) return src;
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  Image out(width, height);
  for (int oy = 0; oy < height; ++oy) {
    const double y0 = oy * sy, y1 = y0 + sy;
    for (int ox = 0; ox < width; ++ox) {
      const double x0 = ox * sx, x1 = x0 + sx;
      double acc[3] = {0, 0, 0};
      double total = 0;
      for (int iy = static_cast<int>(y0); iy < src.height && iy < y1; ++iy) {
        const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
        if (wy <= 0) continue;
        for (int ix = static_cast<int>(x0); ix < src.width && ix < x1; ++ix) {
          const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
          if (wx <= 0) continue;
          const double w = wx * wy;
          for (int c = 0; c < 3; ++c) acc[c] += w * src.at(ix, iy, c);
          total += w;
        }
      }
      for (int c = 0; c < 3; ++c)
        out.at(ox, oy, c) = static_cast<std::uint8_t>(std::clamp(std::round(acc[c] / total), 0.0, 255.0));
    }
  }
  return out;
}

Image read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw std::invalid_argument("refusing to write empty image " + path.string());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.pixels.data(), 0, nullptr))
    throw std::runtime_error("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace relightkit
