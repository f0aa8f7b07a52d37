#pragma once

// Per-character features: a 4-component normalization vector and a list of
// outline micro-features.
//
// The normalization ("cn") vector holds aspect ratio mapped by r/(1+r), ink
// density, and the ink centroid as a fraction of the glyph box. Micro-features
// come from the pixel-edge ("crack") outlines of the glyph: each outline is
// simplified with Douglas-Peucker at a tolerance proportional to the glyph
// size and cut wherever the direction turns more than 45 degrees away from
// the start of the current piece. Every piece becomes one micro-feature:
// chord midpoint and length in a square frame of side max(width, height)
// centered on the glyph, and chord direction quantized to 8 sectors
// (sector 0 points along +x, sectors advance counter-clockwise, y up).
//
// Crack outlines scale exactly under integer magnification, and every
// tolerance is relative to the glyph size, so an integer-scaled glyph
// produces the same features.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "hwocr/error.hpp"
#include "hwocr/image.hpp"
#include "hwocr/imaging.hpp"

namespace hwocr {

inline constexpr int kDirectionSectors = 8;
inline constexpr double kTemplateGrid = 64.0;  // inttemp quantization: 1/64

struct MicroFeature {
  double x = 0;    // [0,1], frame left to right
  double y = 0;    // [0,1], frame bottom to top
  int dir = 0;     // 0..7
  double len = 0;  // [0,1], fraction of the frame side
  friend bool operator==(const MicroFeature&, const MicroFeature&) = default;
};

using CnVector = std::array<double, 4>;

struct TrCharFeatures {
  std::string glyph;  // empty until labeled
  CnVector cn{};
  std::vector<MicroFeature> micro;
  friend bool operator==(const TrCharFeatures&, const TrCharFeatures&) = default;
};

struct FeatureConfig {
  double simplify_tolerance = 0.05;  // fraction of the frame side
  double corner_angle_deg = 45.0;
  double min_outline_extent = 0.1;   // smaller outlines are ignored as specks
};

/// Rounds to the 6-decimal precision used by every on-disk feature format.
inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline double quantize_to_grid(double v) {
  return std::clamp(std::round(v * kTemplateGrid) / kTemplateGrid, 0.0, 1.0);
}

inline MicroFeature quantize(const MicroFeature& f) {
  return {quantize_to_grid(f.x), quantize_to_grid(f.y), f.dir, quantize_to_grid(f.len)};
}

/// Circular distance between direction sectors (0..4).
inline int sector_distance(int a, int b) {
  const int d = std::abs(a - b) % kDirectionSectors;
  return std::min(d, kDirectionSectors - d);
}

inline int direction_sector(double dx, double dy) {
  const double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
  const int s = int(std::floor(deg / 45.0 + 0.5));
  return ((s % kDirectionSectors) + kDirectionSectors) % kDirectionSectors;
}

namespace detail {

struct GridPoint {
  int x, row;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

// Closed crack outlines of a mask, as corner vertices in (x, row) grid
// coordinates. Ink lies on the right of the direction of travel on screen
// (outer outlines run clockwise). At a vertex where two ink pixels touch only
// diagonally the walk turns left first, which keeps such pixels on one
// outline, consistent with 8-connectivity.
inline std::vector<std::vector<GridPoint>> trace_outlines(const BinaryImage& m) {
  const int w = m.width(), h = m.height();
  const int vw = w + 1;
  static constexpr int dx[4] = {1, 0, -1, 0};
  static constexpr int dr[4] = {0, 1, 0, -1};
  std::vector<std::uint8_t> out_edges(std::size_t(vw) * (h + 1), 0);
  auto vid = [vw](int x, int r) { return std::size_t(r) * vw + x; };
  for (int r = 0; r < h; ++r)
    for (int x = 0; x < w; ++x) {
      if (!m.ink(x, r)) continue;
      if (!m.ink_or_blank(x, r - 1)) out_edges[vid(x, r)] |= 1;
      if (!m.ink_or_blank(x + 1, r)) out_edges[vid(x + 1, r)] |= 2;
      if (!m.ink_or_blank(x, r + 1)) out_edges[vid(x + 1, r + 1)] |= 4;
      if (!m.ink_or_blank(x - 1, r)) out_edges[vid(x, r + 1)] |= 8;
    }

  std::vector<std::vector<GridPoint>> loops;
  for (int r = 0; r <= h; ++r)
    for (int x = 0; x <= w; ++x) {
      while (out_edges[vid(x, r)]) {
        int d = 0;
        while (!(out_edges[vid(x, r)] & (1 << d))) ++d;
        std::vector<GridPoint> pts;
        int cx = x, cr = r;
        while (true) {
          out_edges[vid(cx, cr)] &= std::uint8_t(~(1 << d));
          if (pts.empty() || pts.back() != GridPoint{cx, cr}) pts.push_back({cx, cr});
          cx += dx[d];
          cr += dr[d];
          const auto avail = out_edges[vid(cx, cr)];
          if (!avail) break;
          const int left = (d + 3) % 4, right = (d + 1) % 4;
          d = (avail & (1 << left)) ? left : (avail & (1 << d)) ? d : right;
        }
        // Keep only direction changes.
        std::vector<GridPoint> corners;
        const std::size_t n = pts.size();
        for (std::size_t i = 0; i < n; ++i) {
          const auto& p = pts[(i + n - 1) % n];
          const auto& c = pts[i];
          const auto& q = pts[(i + 1) % n];
          const long cross = long(c.x - p.x) * (q.row - c.row) - long(c.row - p.row) * (q.x - c.x);
          if (cross != 0 || (c.x - p.x) * (q.x - c.x) + (c.row - p.row) * (q.row - c.row) < 0)
            corners.push_back(c);
        }
        if (corners.size() >= 2) loops.push_back(std::move(corners));
      }
    }
  return loops;
}

inline double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0) return std::hypot(wx, wy);
  const double t = std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0);
  return std::hypot(wx - t * vx, wy - t * vy);
}

inline void douglas_peucker(const std::vector<Point2>& pts, std::size_t lo, std::size_t hi,
                            double eps, std::vector<std::uint8_t>& keep) {
  if (hi <= lo + 1) return;
  double best = -1;
  std::size_t at = lo;
  const auto& a = pts[lo];
  const auto& b = pts[hi % pts.size()];
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = segment_distance(pts[i], a, b);
    if (d > best) {
      best = d;
      at = i;
    }
  }
  if (best > eps) {
    keep[at] = 1;
    douglas_peucker(pts, lo, at, eps, keep);
    douglas_peucker(pts, at, hi, eps, keep);
  }
}

// Simplifies a closed polygon. The start vertex and the vertex farthest from
// it are always kept.
inline std::vector<Point2> simplify_closed(const std::vector<Point2>& pts, double eps) {
  const std::size_t n = pts.size();
  if (n <= 3) return pts;
  std::size_t far = 0;
  double best = -1;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = std::hypot(pts[i].x - pts[0].x, pts[i].y - pts[0].y);
    if (d > best) {
      best = d;
      far = i;
    }
  }
  std::vector<std::uint8_t> keep(n, 0);
  keep[0] = keep[far] = 1;
  douglas_peucker(pts, 0, far, eps, keep);
  douglas_peucker(pts, far, n, eps, keep);
  std::vector<Point2> out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

inline double angle_between(double ax, double ay, double bx, double by) {
  const double dot = ax * bx + ay * by;
  const double cross = ax * by - ay * bx;
  return std::abs(std::atan2(cross, dot)) * 180.0 / std::numbers::pi;
}

}  // namespace detail

/// Features of a glyph mask (label left empty). Throws on a mask without ink.
inline TrCharFeatures extract_features(const BinaryImage& mask, const FeatureConfig& cfg = {}) {
  int minx = mask.width(), maxx = -1, minr = mask.height(), maxr = -1;
  std::size_t ink = 0;
  double sx = 0, sy = 0;
  for (int r = 0; r < mask.height(); ++r)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.ink(x, r)) {
        ++ink;
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        minr = std::min(minr, r);
        maxr = std::max(maxr, r);
        sx += x + 0.5;
        sy += r + 0.5;
      }
  if (ink == 0) throw Error("cannot extract features from an empty glyph mask");

  const int w = maxx - minx + 1, h = maxr - minr + 1;
  const double n = double(ink);
  const double ratio = double(w) / double(h);
  TrCharFeatures f;
  f.cn = {round6(ratio / (1.0 + ratio)), round6(n / (double(w) * h)),
          round6((sx / n - minx) / w), round6((maxr + 1 - sy / n) / h)};

  if (ink == 1) {
    f.micro.push_back({0.5, 0.5, 0, 0.0});
    return f;
  }

  const BinaryImage tight = mask.crop(bbox_from_pixels(minx, minr, maxx, maxr, mask.height()));
  const double side = std::max(w, h);
  const double ox = (side - w) / 2.0, oy = (side - h) / 2.0;

  auto loops = detail::trace_outlines(tight);
  // Drop specks, but never every outline.
  std::vector<double> extent;
  for (const auto& loop : loops) {
    int x0 = w, x1 = 0, r0 = h, r1 = 0;
    for (const auto& p : loop) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      r0 = std::min(r0, p.row);
      r1 = std::max(r1, p.row);
    }
    extent.push_back(std::max(x1 - x0, r1 - r0));
  }
  const double biggest = *std::max_element(extent.begin(), extent.end());

  for (std::size_t li = 0; li < loops.size(); ++li) {
    if (extent[li] < biggest && extent[li] < cfg.min_outline_extent * side) continue;
    std::vector<Point2> pts;
    pts.reserve(loops[li].size());
    for (const auto& p : loops[li]) pts.push_back({double(p.x), double(h - p.row)});
    const auto poly = detail::simplify_closed(pts, cfg.simplify_tolerance * side);

    const std::size_t m = poly.size();
    std::size_t start = 0;
    while (start < m) {
      const auto& a = poly[start];
      const auto& a1 = poly[(start + 1) % m];
      const double ux = a1.x - a.x, uy = a1.y - a.y;
      std::size_t end = start + 1;  // piece covers edges start .. end-1
      while (end < m) {
        const auto& p = poly[end];
        const auto& q = poly[(end + 1) % m];
        if (detail::angle_between(ux, uy, q.x - p.x, q.y - p.y) > cfg.corner_angle_deg) break;
        ++end;
      }
      const auto& b = poly[end % m];
      const double cx = b.x - a.x, cy = b.y - a.y;
      MicroFeature mf;
      mf.x = round6(std::clamp(((a.x + b.x) / 2 + ox) / side, 0.0, 1.0));
      mf.y = round6(std::clamp(((a.y + b.y) / 2 + oy) / side, 0.0, 1.0));
      mf.dir = direction_sector(cx, cy);
      mf.len = round6(std::min(1.0, std::hypot(cx, cy) / side));
      f.micro.push_back(mf);
      start = end;
    }
  }
  return f;
}

inline TrCharFeatures extract_features(const GlyphSample& glyph, const FeatureConfig& cfg = {}) {
  return extract_features(glyph.mask, cfg);
}

}  // namespace hwocr
