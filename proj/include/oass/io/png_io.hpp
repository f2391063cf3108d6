// Copyright 2026 The OASS Authors.
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

#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "oass/classes.hpp"
#include "oass/common.hpp"
#include "oass/core.hpp"
#include "oass/image.hpp"

namespace oass::io {

namespace detail_png {

struct FileHandle {
  std::FILE* fp = nullptr;
  explicit FileHandle(const std::string& path, const char* mode) : fp(std::fopen(path.c_str(), mode)) {}
  ~FileHandle() {
    if (fp) std::fclose(fp);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

struct RawPng {
  int height = 0;
  int width = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> bytes;  // packed rows, big-endian for 16-bit
};

// All C++ objects are constructed before setjmp so no destructor is skipped
// when libpng longjmps on error.
inline RawPng read_png(const std::string& path) {
  RawPng out;
  FileHandle file(path, "rb");
  if (!file.fp) throw IoError("cannot open '" + path + "' for reading");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng allocation failure");
  }
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG '" + path + "'");
  }
  png_init_io(png, file.fp);
  png_read_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE)
    png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.bytes.assign(rowbytes * static_cast<std::size_t>(out.height), 0);
  row_ptrs.resize(static_cast<std::size_t>(out.height));
  for (int r = 0; r < out.height; ++r)
    row_ptrs[static_cast<std::size_t>(r)] = out.bytes.data() + rowbytes * static_cast<std::size_t>(r);
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

inline void write_png(const std::string& path, int height, int width, int bit_depth,
                      int color_type, const std::vector<std::uint8_t>& bytes) {
  FileHandle file(path, "wb");
  if (!file.fp) throw IoError("cannot open '" + path + "' for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng allocation failure");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng allocation failure");
  }
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(height));
  const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t rowbytes =
      static_cast<std::size_t>(width) * channels * static_cast<std::size_t>(bit_depth / 8);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG '" + path + "'");
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r)
    row_ptrs[static_cast<std::size_t>(r)] =
        const_cast<png_bytep>(bytes.data() + rowbytes * static_cast<std::size_t>(r));
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail_png

/// 8-bit single-channel PNG; pixel value = class id, 255 = ignore.
inline SemanticMap load_semantic(const std::string& path, int num_classes = 19) {
  const auto raw = detail_png::read_png(path);
  if (raw.bit_depth != 8 || raw.color_type != PNG_COLOR_TYPE_GRAY)
    throw IoError("'" + path + "' is not an 8-bit single-channel PNG");
  SemanticMap out(raw.height, raw.width, num_classes);
  out.labels = raw.bytes;
  try {
    out.validate();
  } catch (const ValidationError& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  return out;
}

inline void save_semantic(const std::string& path, const SemanticMap& map) {
  map.validate();
  detail_png::write_png(path, map.height, map.width, 8, PNG_COLOR_TYPE_GRAY, map.labels);
}

/// 16-bit single-channel PNG; pixel value = class_id*1000 + instance_index,
/// 0 = void. The segment table is reconstructed from the pixel values.
inline PanopticMap load_panoptic(const std::string& path,
                                 const ClassUniverse& universe = ClassUniverse::street18()) {
  const auto raw = detail_png::read_png(path);
  if (raw.bit_depth != 16 || raw.color_type != PNG_COLOR_TYPE_GRAY)
    throw IoError("'" + path + "' is not a 16-bit single-channel PNG");
  PanopticMap out(raw.height, raw.width);
  std::vector<bool> seen(65536, false);
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    const std::uint32_t id = (static_cast<std::uint32_t>(raw.bytes[i * 2]) << 8) |
                             raw.bytes[i * 2 + 1];  // network byte order
    out.ids[i] = id;
    if (id != kVoidId && !seen[id]) {
      seen[id] = true;
      const auto [cls, idx] = decode_segment_id(id);
      (void)idx;
      if (cls >= universe.num_classes())
        throw IoError("'" + path + "': segment id " + std::to_string(id) +
                      " implies class " + std::to_string(cls) + " outside the universe");
      out.segments.push_back({id, cls, universe.is_thing(cls)});
    }
  }
  std::sort(out.segments.begin(), out.segments.end(),
            [](const SegmentInfo& a, const SegmentInfo& b) { return a.id < b.id; });
  return out;
}

inline void save_panoptic(const std::string& path, const PanopticMap& map) {
  map.validate();
  std::vector<std::uint8_t> bytes(map.ids.size() * 2);
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    detail::require(map.ids[i] <= 0xffff, "segment id does not fit 16-bit PNG");
    bytes[i * 2] = static_cast<std::uint8_t>(map.ids[i] >> 8);
    bytes[i * 2 + 1] = static_cast<std::uint8_t>(map.ids[i] & 0xff);
  }
  detail_png::write_png(path, map.height, map.width, 16, PNG_COLOR_TYPE_GRAY, bytes);
}

/// 8-bit RGB PNG.
inline Image load_image(const std::string& path) {
  const auto raw = detail_png::read_png(path);
  if (raw.bit_depth != 8 || raw.color_type != PNG_COLOR_TYPE_RGB)
    throw IoError("'" + path + "' is not an 8-bit RGB PNG");
  Image out(raw.height, raw.width);
  out.data = raw.bytes;
  return out;
}

inline void save_image(const std::string& path, const Image& img) {
  detail_png::write_png(path, img.height, img.width, 8, PNG_COLOR_TYPE_RGB, img.data);
}

}  // namespace oass::io
