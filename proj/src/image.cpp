#include "dub/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dub/binio.hpp"
#include "dub/errors.hpp"

namespace dub {

Image::Image(int h, int w, float fill)
    : height(h), width(w), pixels(size_t(h) * w, fill) {
  if (h < 1 || w < 1)
    throw std::invalid_argument("Image: extents must be >= 1, got " +
                                std::to_string(h) + "x" + std::to_string(w));
}

void require_finite(const Image& img, const std::string& context) {
  for (float v : img.pixels)
    if (!std::isfinite(v))
      throw NumericError(context + ": non-finite pixel value");
}

namespace {

// PGM token reader: skips whitespace and '#' comments in the header.
int next_pgm_int(std::istream& is, const std::string& path) {
  int c;
  while ((c = is.peek()) != EOF) {
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  int value;
  if (!(is >> value))
    throw DataError(path + ": malformed PGM header (missing integer field)");
  return value;
}

Image read_pgm(std::ifstream& is, bool binary, const std::string& path) {
  const int width = next_pgm_int(is, path);
  const int height = next_pgm_int(is, path);
  const int maxval = next_pgm_int(is, path);
  if (width < 1 || height < 1)
    throw DataError(path + ": malformed PGM header (bad dimensions " +
                    std::to_string(width) + "x" + std::to_string(height) + ")");
  if (maxval < 1 || maxval > 65535)
    throw DataError(path + ": malformed PGM header (maxval " +
                    std::to_string(maxval) + " out of range)");

  Image img(height, width);
  const size_t n = img.size();
  const float scale = 1.0f / float(maxval);

  if (binary) {
    is.get();  // single whitespace after maxval
    const bool wide = maxval > 255;
    std::vector<unsigned char> buf(n * (wide ? 2 : 1));
    if (!is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size())))
      throw DataError(path + ": truncated PGM payload");
    for (size_t i = 0; i < n; ++i) {
      const int raw = wide ? (int(buf[2 * i]) << 8 | buf[2 * i + 1])  // big-endian
                           : int(buf[i]);
      img.pixels[i] = float(raw) * scale;
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      int v;
      if (!(is >> v)) throw DataError(path + ": truncated PGM payload");
      img.pixels[i] = float(v) * scale;
    }
  }
  return img;
}

}  // namespace

Image read_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path + ": cannot open for reading");

  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 2);
  if (is.gcount() < 2) throw DataError(path + ": truncated file (no magic)");

  if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5'))
    return read_pgm(is, magic[1] == '5', path);

  is.read(magic + 2, 2);
  if (is.gcount() == 2 && std::string(magic, 4) == "DUB1") {
    is.seekg(0);
    auto [shape, data] = load_dub1(path);
    if (shape.size() != 2)
      throw DataError(path + ": DUB1 rank " + std::to_string(shape.size()) +
                      " is not an image (want rank 2)");
    Image img(static_cast<int>(shape[0]), static_cast<int>(shape[1]));
    img.pixels = std::move(data);
    require_finite(img, path);
    return img;
  }
  throw DataError(path + ": unsupported magic (want PGM P2/P5 or DUB1)");
}

void write_image(const Image& img, const std::string& path, ImageFormat fmt) {
  if (fmt == ImageFormat::F32Raw) {
    save_dub1(path, {uint32_t(img.height), uint32_t(img.width)},
              img.pixels.data());
    return;
  }
  const int maxval = fmt == ImageFormat::Pgm8 ? 255 : 65535;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(path + ": cannot open for writing");
  os << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";

  const float lo = img.range_min, hi = img.range_max;
  const float span = hi > lo ? hi - lo : 1.0f;
  for (float v : img.pixels) {
    const float c = std::clamp(v, lo, hi);
    const int q = int(std::floor(double(c - lo) / span * maxval + 0.5));
    if (maxval > 255) {
      const unsigned char b[2] = {(unsigned char)(q >> 8), (unsigned char)(q & 0xff)};
      os.write(reinterpret_cast<const char*>(b), 2);
    } else {
      const unsigned char b = (unsigned char)q;
      os.write(reinterpret_cast<const char*>(&b), 1);
    }
  }
  if (!os) throw DataError(path + ": write failed");
}

void save_dub1(const std::string& path, const std::vector<uint32_t>& shape,
               const float* data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError(path + ": cannot open for writing");
  os.write("DUB1", 4);
  binio::put_u32(os, uint32_t(shape.size()));
  size_t n = 1;
  for (uint32_t e : shape) {
    binio::put_u32(os, e);
    n *= e;
  }
  for (size_t i = 0; i < n; ++i) binio::put_f32(os, data[i]);
  if (!os) throw DataError(path + ": write failed");
}

std::pair<std::vector<uint32_t>, std::vector<float>> load_dub1(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path + ": cannot open for reading");
  char magic[4];
  if (!is.read(magic, 4)) throw DataError(path + ": truncated file (no magic)");
  if (std::string(magic, 4) != "DUB1")
    throw DataError(path + ": unsupported magic (want DUB1)");
  const uint32_t rank = binio::get_u32(is, path + " rank");
  if (rank > 8) throw DataError(path + ": implausible DUB1 rank " + std::to_string(rank));
  std::vector<uint32_t> shape(rank);
  size_t n = 1;
  for (uint32_t& e : shape) {
    e = binio::get_u32(is, path + " extent");
    n *= e;
  }
  std::vector<float> data(n);
  for (size_t i = 0; i < n; ++i) data[i] = binio::get_f32(is, path + " payload");
  return {std::move(shape), std::move(data)};
}

}  // namespace dub
