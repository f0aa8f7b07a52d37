#pragma once

// PNG (via libpng) and baseline uncompressed TIFF codecs for grayscale pages.

#include <png.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hwocr/error.hpp"
#include "hwocr/image.hpp"

namespace hwocr {

namespace detail {

struct PngReadState {
  const std::vector<std::uint8_t>* data;
  std::size_t offset;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->offset + n > st->data->size()) png_error(png, "truncated PNG data");
  std::memcpy(out, st->data->data() + st->offset, n);
  st->offset += n;
}

inline void png_write_to_memory(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

inline void png_flush_noop(png_structp) {}

[[noreturn]] inline void png_throw(png_structp, png_const_charp msg) {
  throw Error(std::string("PNG: ") + msg);
}

inline void png_warn_silent(png_structp, png_const_charp) {}

inline std::uint16_t rd16(const std::uint8_t* p, bool le) {
  return le ? std::uint16_t(p[0] | (p[1] << 8)) : std::uint16_t((p[0] << 8) | p[1]);
}

inline std::uint32_t rd32(const std::uint8_t* p, bool le) {
  return le ? std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                  (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24)
            : (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
                  (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace detail

inline std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string(), "cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline bool is_png(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::array<std::uint8_t, 8> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(sig.begin(), sig.end(), bytes.begin());
}

inline bool is_tiff(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 &&
         ((bytes[0] == 'I' && bytes[1] == 'I' && bytes[2] == 42 && bytes[3] == 0) ||
          (bytes[0] == 'M' && bytes[1] == 'M' && bytes[2] == 0 && bytes[3] == 42));
}

/// Decodes a PNG; color and alpha are reduced to 8-bit gray.
inline PageImage decode_png(const std::vector<std::uint8_t>& bytes) {
  if (!is_png(bytes)) throw Error("not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           detail::png_throw, detail::png_warn_silent);
  if (!png) throw Error("PNG: cannot allocate decoder");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  detail::PngReadState state{&bytes, 0};
  png_set_read_fn(png, &state, detail::png_read_from_memory);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  const int w = int(png_get_image_width(png, info));
  const int h = int(png_get_image_height(png, info));
  if (png_get_channels(png, info) != 1)
    throw Error("PNG: unsupported channel layout");
  std::vector<std::uint8_t> pixels(std::size_t(w) * h);
  std::vector<png_bytep> rows(h);
  for (int r = 0; r < h; ++r) rows[r] = pixels.data() + std::size_t(r) * w;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return PageImage(w, h, std::move(pixels));
}

inline std::vector<std::uint8_t> encode_png(const PageImage& page) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            detail::png_throw, detail::png_warn_silent);
  if (!png) throw Error("PNG: cannot allocate encoder");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_set_write_fn(png, &out, detail::png_write_to_memory, detail::png_flush_noop);
  png_set_IHDR(png, info, png_uint_32(page.width()), png_uint_32(page.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < page.height(); ++r)
    png_write_row(png, page.pixels().data() + std::size_t(r) * page.width());
  png_write_end(png, nullptr);
  return out;
}

/// Decodes a single-page, uncompressed TIFF with one 1-bit or 8-bit sample
/// per pixel.
inline PageImage decode_tiff(const std::vector<std::uint8_t>& bytes) {
  if (!is_tiff(bytes)) throw Error("not a TIFF stream");
  const bool le = bytes[0] == 'I';
  const auto* base = bytes.data();
  const auto size = bytes.size();
  auto need = [&](std::size_t off, std::size_t n) {
    if (off + n > size) throw Error("TIFF: truncated file");
  };

  const std::uint32_t ifd = detail::rd32(base + 4, le);
  need(ifd, 2);
  const std::uint16_t count = detail::rd16(base + ifd, le);
  need(ifd + 2, std::size_t(count) * 12 + 4);

  std::uint32_t width = 0, height = 0, bits = 1, compression = 1, photometric = 1,
                samples = 1, rows_per_strip = 0xffffffffu;
  std::vector<std::uint32_t> strip_offsets, strip_counts;

  auto values = [&](const std::uint8_t* entry) {
    const std::uint16_t type = detail::rd16(entry + 2, le);
    const std::uint32_t n = detail::rd32(entry + 4, le);
    const std::size_t unit = type == 3 ? 2 : type == 4 ? 4 : type == 1 ? 1 : 0;
    if (unit == 0) throw Error("TIFF: unsupported field type");
    const std::uint8_t* p = entry + 8;
    if (std::size_t(n) * unit > 4) {
      const std::uint32_t off = detail::rd32(entry + 8, le);
      need(off, std::size_t(n) * unit);
      p = base + off;
    }
    std::vector<std::uint32_t> out(n);
    for (std::uint32_t i = 0; i < n; ++i)
      out[i] = unit == 2 ? detail::rd16(p + 2 * i, le)
             : unit == 4 ? detail::rd32(p + 4 * i, le)
                         : p[i];
    return out;
  };

  for (std::uint16_t i = 0; i < count; ++i) {
    const std::uint8_t* e = base + ifd + 2 + 12 * std::size_t(i);
    const std::uint16_t tag = detail::rd16(e, le);
    switch (tag) {
      case 256: width = values(e).at(0); break;
      case 257: height = values(e).at(0); break;
      case 258: bits = values(e).at(0); break;
      case 259: compression = values(e).at(0); break;
      case 262: photometric = values(e).at(0); break;
      case 273: strip_offsets = values(e); break;
      case 277: samples = values(e).at(0); break;
      case 278: rows_per_strip = values(e).at(0); break;
      case 279: strip_counts = values(e); break;
      default: break;
    }
  }
  const std::uint32_t next_ifd = detail::rd32(base + ifd + 2 + 12 * std::size_t(count), le);
  if (next_ifd != 0) throw Error("TIFF: multi-page files are not supported");
  if (compression != 1) throw Error("TIFF: only uncompressed images are supported");
  if (samples != 1 || (bits != 1 && bits != 8))
    throw Error("TIFF: only 1-bit or 8-bit grayscale is supported");
  if (photometric > 1) throw Error("TIFF: unsupported photometric interpretation");
  if (width == 0 || height == 0) throw Error("TIFF: missing image dimensions");
  if (strip_offsets.empty() || strip_offsets.size() != strip_counts.size())
    throw Error("TIFF: missing strip table");

  const std::size_t row_bytes = bits == 8 ? width : (width + 7) / 8;
  std::vector<std::uint8_t> raw;
  raw.reserve(row_bytes * height);
  for (std::size_t s = 0; s < strip_offsets.size(); ++s) {
    need(strip_offsets[s], strip_counts[s]);
    raw.insert(raw.end(), base + strip_offsets[s], base + strip_offsets[s] + strip_counts[s]);
  }
  (void)rows_per_strip;
  if (raw.size() < row_bytes * height) throw Error("TIFF: strip data too short");

  std::vector<std::uint8_t> pixels(std::size_t(width) * height);
  for (std::uint32_t r = 0; r < height; ++r) {
    const std::uint8_t* row = raw.data() + row_bytes * r;
    for (std::uint32_t x = 0; x < width; ++x) {
      std::uint8_t v = bits == 8 ? row[x] : ((row[x / 8] >> (7 - x % 8)) & 1) ? 255 : 0;
      if (photometric == 0) v = std::uint8_t(255 - v);
      pixels[std::size_t(r) * width + x] = v;
    }
  }
  return PageImage(int(width), int(height), std::move(pixels));
}

/// Writes a little-endian, single-strip, 8-bit BlackIsZero TIFF.
inline std::vector<std::uint8_t> encode_tiff(const PageImage& page) {
  std::vector<std::uint8_t> out{'I', 'I', 42, 0};
  auto put16 = [&](std::uint16_t v) { out.push_back(v & 0xff); out.push_back(v >> 8); };
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
  };
  const std::uint32_t data_size = std::uint32_t(page.pixels().size());
  const std::uint32_t ifd_offset = 8 + data_size + (data_size & 1);
  put32(ifd_offset);
  out.insert(out.end(), page.pixels().begin(), page.pixels().end());
  if (data_size & 1) out.push_back(0);

  struct Entry { std::uint16_t tag, type; std::uint32_t value; };
  const Entry entries[] = {
      {256, 4, std::uint32_t(page.width())}, {257, 4, std::uint32_t(page.height())},
      {258, 3, 8}, {259, 3, 1}, {262, 3, 1}, {273, 4, 8}, {277, 3, 1},
      {278, 4, std::uint32_t(page.height())}, {279, 4, data_size}};
  put16(std::uint16_t(std::size(entries)));
  for (const auto& e : entries) {
    put16(e.tag);
    put16(e.type);
    put32(1);
    if (e.type == 3) { put16(std::uint16_t(e.value)); put16(0); }
    else put32(e.value);
  }
  put32(0);
  return out;
}

/// Loads a PNG or TIFF page; the page id is the file stem.
inline PageImage read_page(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  try {
    PageImage page = is_png(bytes)    ? decode_png(bytes)
                     : is_tiff(bytes) ? decode_tiff(bytes)
                                      : throw Error("unrecognized image format (expected PNG or TIFF)");
    page.set_id(path.stem().string());
    return page;
  } catch (const LoadError&) {
    throw;
  } catch (const Error& e) {
    throw LoadError(path.string(), e.what());
  }
}

inline void write_png(const std::filesystem::path& path, const PageImage& page) {
  const auto bytes = encode_png(page);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw LoadError(path.string(), "write failed");
}

}  // namespace hwocr
