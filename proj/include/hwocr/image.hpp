#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hwocr/error.hpp"
#include "hwocr/geometry.hpp"

namespace hwocr {

/// 8-bit grayscale page, row-major with row 0 at the top (0 = black).
class PageImage {
 public:
  PageImage() = default;

  PageImage(int width, int height, std::uint8_t fill = 255, std::string id = {})
      : width_(width), height_(height), id_(std::move(id)) {
    if (width <= 0 || height <= 0)
      throw Error("page dimensions must be positive");
    pixels_.assign(std::size_t(width) * std::size_t(height), fill);
  }

  PageImage(int width, int height, std::vector<std::uint8_t> pixels,
            std::string id = {})
      : width_(width), height_(height), pixels_(std::move(pixels)),
        id_(std::move(id)) {
    if (width <= 0 || height <= 0)
      throw Error("page dimensions must be positive");
    if (pixels_.size() != std::size_t(width) * std::size_t(height))
      throw Error("pixel count does not match page dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  std::uint8_t at(int x, int row) const {
    return pixels_[std::size_t(row) * width_ + x];
  }
  std::uint8_t& at(int x, int row) {
    return pixels_[std::size_t(row) * width_ + x];
  }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  BBox bounds() const { return {0, 0, width_, height_}; }

  friend bool operator==(const PageImage&, const PageImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
  std::string id_;
};

/// Foreground mask, row-major with row 0 at the top; nonzero = ink.
class BinaryImage {
 public:
  BinaryImage() = default;

  BinaryImage(int width, int height)
      : width_(width), height_(height),
        bits_(std::size_t(std::max(width, 0)) * std::size_t(std::max(height, 0)), 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return bits_.empty(); }

  bool ink(int x, int row) const {
    return bits_[std::size_t(row) * width_ + x] != 0;
  }
  bool ink_or_blank(int x, int row) const {
    return x >= 0 && row >= 0 && x < width_ && row < height_ && ink(x, row);
  }
  void set(int x, int row, bool on = true) {
    bits_[std::size_t(row) * width_ + x] = on ? 1 : 0;
  }

  std::size_t ink_count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b != 0;
    return n;
  }

  std::span<const std::uint8_t> bits() const { return bits_; }

  BBox bounds() const { return {0, 0, width_, height_}; }

  /// Copy of the region covered by `box` (page coordinates), clipped to the
  /// image. Returns an empty image when the box misses the image entirely.
  BinaryImage crop(const BBox& box) const {
    const BBox clipped{std::max(box.left, 0), std::max(box.bottom, 0),
                       std::min(box.right, width_), std::min(box.top, height_)};
    if (!clipped.valid()) return {};
    const auto px = pixels_of(clipped, height_);
    BinaryImage out(clipped.width(), clipped.height());
    for (int r = px.row0; r <= px.row1; ++r)
      for (int x = px.x0; x <= px.x1; ++x)
        if (ink(x, r)) out.set(x - px.x0, r - px.row0);
    return out;
  }

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace hwocr
