// Copyright 2026 The picie-cpp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "picie/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "picie/errors.hpp"

namespace picie {
namespace {

namespace fs = std::filesystem;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Raw decoded 8-bit image, channels in {1, 3}; `indexed` marks palette indices.
struct Raw8 {
  int h = 0;
  int w = 0;
  int channels = 0;
  bool indexed = false;
  std::vector<std::uint8_t> data;
  std::vector<std::uint8_t> palette;  // rgb triples when indexed
};

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  throw DataError(std::string("png decode failed: ") + msg);
  (void)png;
}

void png_warn(png_structp, png_const_charp) {}

bool has_png_signature(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

Raw8 decode_png(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  Raw8 raw;
  raw.w = static_cast<int>(png_get_image_width(png, info));
  raw.h = static_cast<int>(png_get_image_height(png, info));

  if (depth == 16) png_set_strip_16(png);
  if (depth < 8) png_set_packing(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);

  if (color == PNG_COLOR_TYPE_PALETTE) {
    raw.indexed = true;
    raw.channels = 1;
    png_colorp pal = nullptr;
    int n = 0;
    png_get_PLTE(png, info, &pal, &n);
    for (int i = 0; i < n; ++i) {
      raw.palette.push_back(pal[i].red);
      raw.palette.push_back(pal[i].green);
      raw.palette.push_back(pal[i].blue);
    }
  } else if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    raw.channels = 1;
  } else {
    raw.channels = 3;
  }
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(raw.w) * raw.channels)
    throw DataError("unsupported png layout in " + path.string());

  raw.data.resize(static_cast<std::size_t>(raw.w) * raw.h * raw.channels);
  std::vector<png_bytep> rows(raw.h);
  for (int y = 0; y < raw.h; ++y)
    rows[y] = raw.data.data() + static_cast<std::size_t>(y) * raw.w * raw.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return raw;
}

Raw8 decode_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw DataError("unsupported image format: " + path.string());
  auto next_int = [&]() {
    int v = 0;
    while (in >> std::ws && in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
    }
    if (!(in >> v)) throw DataError("corrupt pnm header in " + path.string());
    return v;
  };
  Raw8 raw;
  raw.w = next_int();
  raw.h = next_int();
  const int maxval = next_int();
  if (maxval != 255 || raw.w <= 0 || raw.h <= 0)
    throw DataError("only 8-bit pnm supported: " + path.string());
  in.get();
  raw.channels = magic == "P6" ? 3 : 1;
  raw.data.resize(static_cast<std::size_t>(raw.w) * raw.h * raw.channels);
  in.read(reinterpret_cast<char*>(raw.data.data()), static_cast<std::streamsize>(raw.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.data.size()))
    throw DataError("truncated pnm data in " + path.string());
  return raw;
}

Raw8 decode(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing file " + path.string());
  return has_png_signature(path) ? decode_png(path) : decode_pnm(path);
}

}  // namespace

Tensor read_image(const fs::path& path) {
  const Raw8 raw = decode(path);
  Tensor out(3, raw.h, raw.w);
  const std::size_t n = static_cast<std::size_t>(raw.h) * raw.w;
  for (std::size_t p = 0; p < n; ++p) {
    for (int ch = 0; ch < 3; ++ch) {
      std::uint8_t v;
      if (raw.indexed) {
        const std::size_t idx = raw.data[p];
        v = 3 * idx + ch < raw.palette.size() ? raw.palette[3 * idx + ch] : 0;
      } else if (raw.channels == 1) {
        v = raw.data[p];
      } else {
        v = raw.data[p * 3 + ch];
      }
      out.data[ch * n + p] = v / 255.0;
    }
  }
  return out;
}

LabelGrid read_label_map(const fs::path& path) {
  const Raw8 raw = decode(path);
  if (raw.channels != 1)
    throw DataError("label map must be single-channel: " + path.string());
  LabelGrid out(raw.h, raw.w);
  std::copy(raw.data.begin(), raw.data.end(), out.data.begin());
  return out;
}

Rgb8Image to_rgb8(const Tensor& image) {
  Rgb8Image out{image.h, image.w, std::vector<std::uint8_t>(image.plane() * 3)};
  const int chans = std::min(image.c, 3);
  for (std::size_t p = 0; p < image.plane(); ++p)
    for (int ch = 0; ch < 3; ++ch) {
      const double v = image.data[std::min(ch, chans - 1) * image.plane() + p];
      out.data[p * 3 + ch] =
          static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  return out;
}

namespace {

void write_png_raw(const fs::path& path, int h, int w, int color_type, int channels,
                   const std::uint8_t* data) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * w * channels));
  png_write_end(png, nullptr);
}

}  // namespace

void write_png(const fs::path& path, const Rgb8Image& image) {
  write_png_raw(path, image.h, image.w, PNG_COLOR_TYPE_RGB, 3, image.data.data());
}

void write_png(const fs::path& path, const Tensor& image) { write_png(path, to_rgb8(image)); }

void write_label_png(const fs::path& path, const LabelGrid& labels) {
  std::vector<std::uint8_t> buf(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.data[i] < 0 || labels.data[i] > 255)
      throw ConfigError("label value outside 8-bit range");
    buf[i] = static_cast<std::uint8_t>(labels.data[i]);
  }
  write_png_raw(path, labels.h, labels.w, PNG_COLOR_TYPE_GRAY, 1, buf.data());
}

}  // namespace picie
