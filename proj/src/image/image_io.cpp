#include "jsr/image/image_io.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

#include "jsr/common/errors.h"

namespace jsr::image {
namespace {

std::string Extension(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

unsigned char ToByte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

DecodedImage ReadPng(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw FormatError(path + ": " + png.message);
  }
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = PNG_FORMAT_RGB;
  if (png.width == 0 || png.height == 0 || png.width > 1u << 15 || png.height > 1u << 15) {
    png_image_free(&png);
    throw FormatError(path + ": unsupported PNG dimensions");
  }
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw FormatError(path + ": " + msg);
  }
  const int h = static_cast<int>(png.height), w = static_cast<int>(png.width);
  DecodedImage out{{LumaImage(h, w), LumaImage(h, w), LumaImage(h, w)}, gray};
  auto r = out.rgb.r.pixels(), g = out.rgb.g.pixels(), b = out.rgb.b.pixels();
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = buffer[3 * i] / 255.0;
    g[i] = buffer[3 * i + 1] / 255.0;
    b[i] = buffer[3 * i + 2] / 255.0;
  }
  return out;
}

void WritePng(const std::string& path, const RgbImage& rgb, bool gray) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(rgb.r.width());
  png.height = static_cast<png_uint_32>(rgb.r.height());
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const std::size_t channels = gray ? 1 : 3;
  std::vector<png_byte> buffer(rgb.r.size() * channels);
  auto r = rgb.r.pixels(), g = rgb.g.pixels(), b = rgb.b.pixels();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (gray) {
      buffer[i] = ToByte(r[i]);
    } else {
      buffer[3 * i] = ToByte(r[i]);
      buffer[3 * i + 1] = ToByte(g[i]);
      buffer[3 * i + 2] = ToByte(b[i]);
    }
  }
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw FormatError(path + ": " + png.message);
  }
}

// Skips whitespace and '#' comments in a netpbm header, then reads an integer.
int ReadPnmInt(std::istream& in, const std::string& path) {
  int ch;
  while ((ch = in.peek()) != EOF) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  if (!(in >> v) || v < 0) throw FormatError(path + ": malformed netpbm header");
  return v;
}

DecodedImage ReadPnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  char magic[2];
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw FormatError(path + ": only binary PGM (P5) and PPM (P6) are supported");
  }
  const bool gray = magic[1] == '5';
  const int w = ReadPnmInt(in, path);
  const int h = ReadPnmInt(in, path);
  const int maxval = ReadPnmInt(in, path);
  if (w < 1 || h < 1 || w > 1 << 15 || h > 1 << 15 || maxval < 1 || maxval > 65535) {
    throw FormatError(path + ": unsupported netpbm dimensions or maxval");
  }
  in.get();  // single whitespace after maxval
  const std::size_t channels = gray ? 1 : 3;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels * bytes_per);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw FormatError(path + ": truncated pixel data");
  }
  auto sample = [&](std::size_t i) {
    unsigned v = bytes_per == 2 ? (raw[2 * i] << 8 | raw[2 * i + 1]) : raw[i];
    return std::min(1.0, static_cast<double>(v) / maxval);
  };
  DecodedImage out{{LumaImage(h, w), LumaImage(h, w), LumaImage(h, w)}, gray};
  auto r = out.rgb.r.pixels(), g = out.rgb.g.pixels(), b = out.rgb.b.pixels();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (gray) {
      r[i] = g[i] = b[i] = sample(i);
    } else {
      r[i] = sample(3 * i);
      g[i] = sample(3 * i + 1);
      b[i] = sample(3 * i + 2);
    }
  }
  return out;
}

void WritePnm(const std::string& path, const RgbImage& rgb, bool gray) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << (gray ? "P5" : "P6") << "\n" << rgb.r.width() << " " << rgb.r.height() << "\n255\n";
  auto r = rgb.r.pixels(), g = rgb.g.pixels(), b = rgb.b.pixels();
  std::vector<unsigned char> raw;
  raw.reserve(r.size() * (gray ? 1 : 3));
  for (std::size_t i = 0; i < r.size(); ++i) {
    raw.push_back(ToByte(r[i]));
    if (!gray) {
      raw.push_back(ToByte(g[i]));
      raw.push_back(ToByte(b[i]));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw FormatError(path + ": write failed");
}

}  // namespace

DecodedImage ReadImage(const std::string& path) {
  const std::string ext = Extension(path);
  if (ext == "pgm" || ext == "ppm" || ext == "pnm") return ReadPnm(path);
  return ReadPng(path);
}

LumaImage ReadLuma(const std::string& path) {
  DecodedImage img = ReadImage(path);
  if (img.grayscale) return std::move(img.rgb.r);
  return RgbToYcbcr(img.rgb).luma;
}

void WriteImage(const std::string& path, const RgbImage& rgb) {
  const std::string ext = Extension(path);
  if (ext == "pgm") {
    WritePnm(path, rgb, true);
  } else if (ext == "ppm" || ext == "pnm") {
    WritePnm(path, rgb, false);
  } else {
    WritePng(path, rgb, false);
  }
}

void WriteLuma(const std::string& path, const LumaImage& img) {
  const RgbImage rgb{img, img, img};
  const std::string ext = Extension(path);
  if (ext == "pgm" || ext == "pnm") {
    WritePnm(path, rgb, true);
  } else if (ext == "ppm") {
    WritePnm(path, rgb, false);
  } else {
    WritePng(path, rgb, true);
  }
}

}  // namespace jsr::image
