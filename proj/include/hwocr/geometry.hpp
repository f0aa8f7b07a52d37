#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>

namespace hwocr {

// Integer box in page coordinates: origin at the bottom-left corner, y grows
// upward, right/top exclusive. A pixel at column x and image row r (row 0 at
// the top) of an image H rows tall occupies {x, H-1-r, x+1, H-r}.
struct BBox {
  int left = 0;
  int bottom = 0;
  int right = 0;
  int top = 0;

  constexpr int width() const { return right - left; }
  constexpr int height() const { return top - bottom; }
  constexpr std::int64_t area() const {
    return valid() ? std::int64_t(width()) * height() : 0;
  }
  constexpr bool valid() const { return left < right && bottom < top; }

  constexpr bool contains(const BBox& o) const {
    return o.left >= left && o.right <= right && o.bottom >= bottom &&
           o.top <= top;
  }

  friend constexpr bool operator==(const BBox&, const BBox&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BBox& b) {
  return os << '(' << b.left << ',' << b.bottom << ',' << b.right << ','
            << b.top << ')';
}

constexpr BBox unite(const BBox& a, const BBox& b) {
  return {std::min(a.left, b.left), std::min(a.bottom, b.bottom),
          std::max(a.right, b.right), std::max(a.top, b.top)};
}

constexpr std::int64_t intersection_area(const BBox& a, const BBox& b) {
  const int w = std::min(a.right, b.right) - std::max(a.left, b.left);
  const int h = std::min(a.top, b.top) - std::max(a.bottom, b.bottom);
  return (w > 0 && h > 0) ? std::int64_t(w) * h : 0;
}

inline double iou(const BBox& a, const BBox& b) {
  const auto inter = intersection_area(a, b);
  const auto uni = a.area() + b.area() - inter;
  return uni > 0 ? double(inter) / double(uni) : 0.0;
}

/// Length of the overlap of the horizontal spans (0 when disjoint).
constexpr int horizontal_overlap(const BBox& a, const BBox& b) {
  return std::max(0, std::min(a.right, b.right) - std::max(a.left, b.left));
}

/// Length of the overlap of the vertical spans (0 when disjoint).
constexpr int vertical_overlap(const BBox& a, const BBox& b) {
  return std::max(0, std::min(a.top, b.top) - std::max(a.bottom, b.bottom));
}

/// Signed vertical distance between the spans; negative when they overlap.
constexpr int vertical_gap(const BBox& a, const BBox& b) {
  return std::max(a.bottom, b.bottom) - std::min(a.top, b.top);
}

/// Box covering pixel columns [x0, x1] and image rows [row0, row1] (inclusive)
/// of an image `image_height` rows tall.
constexpr BBox bbox_from_pixels(int x0, int row0, int x1, int row1,
                                int image_height) {
  return {x0, image_height - 1 - row1, x1 + 1, image_height - row0};
}

/// Inclusive pixel extent of a box: columns and image rows (top row first).
struct PixelRect {
  int x0, row0, x1, row1;
};

constexpr PixelRect pixels_of(const BBox& b, int image_height) {
  return {b.left, image_height - b.top, b.right - 1, image_height - 1 - b.bottom};
}

}  // namespace hwocr
