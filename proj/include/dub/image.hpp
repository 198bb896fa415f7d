#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dub {

// 2D scalar field, float32 row-major, with a declared physical value range.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;
  float range_min = 0.0f;
  float range_max = 1.0f;

  Image() = default;
  Image(int h, int w, float fill = 0.0f);

  float& at(int y, int x) { return pixels[size_t(y) * width + x]; }
  float at(int y, int x) const { return pixels[size_t(y) * width + x]; }
  size_t size() const { return pixels.size(); }
};

// Throws NumericError if any pixel is non-finite.
void require_finite(const Image& img, const std::string& context);

enum class ImageFormat { Pgm8, Pgm16, F32Raw };

// PGM (P2/P5, maxval up to 65535) or DUB1 raw float. PGM pixels are scaled
// into [0,1] by the file's maxval; DUB1 is loaded verbatim.
Image read_image(const std::string& path);

// Pgm8/Pgm16 clamp to [range_min,range_max] and quantize (round half up);
// F32Raw is lossless.
void write_image(const Image& img, const std::string& path, ImageFormat fmt);

// DUB1 container: magic "DUB1", u32 LE rank, rank u32 LE extents, row-major
// f32 LE payload.
void save_dub1(const std::string& path, const std::vector<uint32_t>& shape,
               const float* data);
std::pair<std::vector<uint32_t>, std::vector<float>> load_dub1(
    const std::string& path);

}  // namespace dub
