#pragma once

// Page binarization and segmentation into lines, words and glyphs.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hwocr/geometry.hpp"
#include "hwocr/image.hpp"

namespace hwocr {

struct Point2 {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// 8-connected foreground region.
struct Component {
  BBox bbox;
  std::size_t pixel_count = 0;
  Point2 centroid;  // page coordinates of the mean pixel center
};

struct GlyphSample {
  BBox bbox;
  BinaryImage mask;  // ink of this glyph only, cropped to bbox
  std::string source_page;
};

struct Word {
  BBox bbox;
  std::vector<GlyphSample> glyphs;
};

struct Line {
  int y_low = 0;   // lowest glyph bottom
  int y_high = 0;  // highest glyph top
  std::vector<Word> words;
};

struct PageSegmentation {
  std::vector<Line> lines;

  std::size_t glyph_count() const {
    std::size_t n = 0;
    for (const auto& l : lines)
      for (const auto& w : l.words) n += w.glyphs.size();
    return n;
  }

  /// Glyphs in reading order.
  std::vector<const GlyphSample*> glyphs() const {
    std::vector<const GlyphSample*> out;
    for (const auto& l : lines)
      for (const auto& w : l.words)
        for (const auto& g : w.glyphs) out.push_back(&g);
    return out;
  }
};

struct SegConfig {
  double word_gap_factor = 2.5;
  std::size_t noise_floor = 4;
  // Diacritic merge: horizontal overlap as a fraction of the narrower piece,
  // the smaller piece at most this fraction of the larger one's height, and
  // a vertical gap of at most this fraction of the larger one's height.
  double diacritic_overlap = 0.5;
  double diacritic_height_ratio = 0.5;
  double diacritic_gap_ratio = 0.3;
  // A glyph joins a line when its vertical overlap with the line band is at
  // least this fraction of the smaller of the two heights.
  double line_overlap = 0.5;
};

/// Otsu threshold over a 256-bin histogram; ink is `gray <= threshold`.
/// Returns nullopt for single-level images, where no split exists. When a
/// range of thresholds ties for the maximum, the middle of the range wins.
inline std::optional<std::uint8_t> otsu_threshold(std::span<const std::uint8_t> pixels) {
  std::array<std::int64_t, 256> hist{};
  for (auto p : pixels) ++hist[p];
  const std::int64_t n = std::int64_t(pixels.size());
  std::int64_t total = 0;
  for (int v = 0; v < 256; ++v) total += hist[v] * v;

  double best = -1;
  int first = -1, last = -1;
  std::int64_t w0 = 0, s0 = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    s0 += hist[t] * t;
    const std::int64_t w1 = n - w0;
    if (w0 == 0 || w1 == 0) continue;
    // Between-class variance up to the constant factor n^2.
    const double num = double(s0 * n - total * w0);
    const double score = num * num / (double(w0) * double(w1));
    if (score > best) {
      best = score;
      first = last = t;
    } else if (score == best && last == t - 1) {
      last = t;
    }
  }
  if (first < 0) return std::nullopt;
  return std::uint8_t((first + last) / 2);
}

/// Global Otsu binarization. A single-level page has no split; it is all ink
/// when darker than mid-gray and blank otherwise.
inline BinaryImage binarize(const PageImage& page) {
  BinaryImage out(page.width(), page.height());
  const auto px = page.pixels();
  const auto threshold = otsu_threshold(px);
  const int cut = threshold ? int(*threshold) : (px.empty() || px[0] >= 128 ? -1 : 255);
  for (int r = 0; r < page.height(); ++r)
    for (int x = 0; x < page.width(); ++x)
      if (int(page.at(x, r)) <= cut) out.set(x, r);
  return out;
}

/// Connected-component labeling result; `label[i]` indexes `components` or is
/// -1 for background and for pixels of components dropped as noise.
struct ComponentLabels {
  std::vector<int> label;
  std::vector<Component> components;
};

inline ComponentLabels label_components(const BinaryImage& bin, std::size_t noise_floor) {
  const int w = bin.width(), h = bin.height();
  ComponentLabels out;
  out.label.assign(std::size_t(w) * h, -1);
  std::vector<std::uint8_t> seen(std::size_t(w) * h, 0);
  std::vector<int> stack, members;

  for (int r0 = 0; r0 < h; ++r0) {
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t start = std::size_t(r0) * w + x0;
      if (seen[start] || !bin.ink(x0, r0)) continue;
      members.clear();
      stack.assign(1, int(start));
      seen[start] = 1;
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        members.push_back(idx);
        const int x = idx % w, r = idx / w;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, nr = r + dr;
            if ((dx || dr) && bin.ink_or_blank(nx, nr)) {
              const std::size_t ni = std::size_t(nr) * w + nx;
              if (!seen[ni]) {
                seen[ni] = 1;
                stack.push_back(int(ni));
              }
            }
          }
      }
      if (members.size() < noise_floor) continue;

      int minx = w, maxx = -1, minr = h, maxr = -1;
      double sx = 0, sr = 0;
      const int id = int(out.components.size());
      for (int idx : members) {
        const int x = idx % w, r = idx / w;
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        minr = std::min(minr, r);
        maxr = std::max(maxr, r);
        sx += x + 0.5;
        sr += r + 0.5;
        out.label[std::size_t(idx)] = id;
      }
      const double n = double(members.size());
      out.components.push_back({bbox_from_pixels(minx, minr, maxx, maxr, h), members.size(),
                                 {sx / n, double(h) - sr / n}});
    }
  }
  return out;
}

/// 8-connected components in raster order of their first pixel; components
/// smaller than `noise_floor` pixels are dropped.
inline std::vector<Component> extract_components(const BinaryImage& bin,
                                                 std::size_t noise_floor = 4) {
  return label_components(bin, noise_floor).components;
}

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void join(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

inline bool is_diacritic_pair(const BBox& a, const BBox& b, const SegConfig& cfg) {
  const BBox& small = a.height() <= b.height() ? a : b;
  const BBox& big = a.height() <= b.height() ? b : a;
  const int narrow = std::min(a.width(), b.width());
  return horizontal_overlap(a, b) >= cfg.diacritic_overlap * narrow &&
         small.height() <= cfg.diacritic_height_ratio * big.height() &&
         vertical_gap(a, b) <= cfg.diacritic_gap_ratio * big.height();
}

struct Unit {
  BBox bbox;
  std::vector<int> components;
};

inline double median(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/// Splits a binarized page into lines of words of glyphs in reading order.
inline PageSegmentation segment_page(const BinaryImage& bin, const SegConfig& cfg = {},
                                     const std::string& page_id = {}) {
  const auto labels = label_components(bin, cfg.noise_floor);
  const auto& comps = labels.components;
  PageSegmentation seg;
  if (comps.empty()) return seg;

  // Glyph units: components merged with their diacritics.
  detail::UnionFind uf(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (std::size_t j = i + 1; j < comps.size(); ++j)
      if (detail::is_diacritic_pair(comps[i].bbox, comps[j].bbox, cfg)) uf.join(int(i), int(j));

  std::vector<detail::Unit> units;
  std::vector<int> unit_of(comps.size(), -1);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const int root = uf.find(int(i));
    if (unit_of[root] < 0) {
      unit_of[root] = int(units.size());
      units.push_back({comps[i].bbox, {}});
    }
    auto& u = units[unit_of[root]];
    u.bbox = unite(u.bbox, comps[i].bbox);
    u.components.push_back(int(i));
  }

  // Lines: greedy clustering on vertical overlap, visiting units top-down.
  std::vector<int> order(units.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& A = units[a].bbox;
    const auto& B = units[b].bbox;
    const int ca = A.top + A.bottom, cb = B.top + B.bottom;
    if (ca != cb) return ca > cb;
    return A.left < B.left;
  });

  struct LineAcc {
    BBox band;
    std::vector<int> units;
  };
  std::vector<LineAcc> lines;
  auto overlap_ratio = [&](const BBox& a, const BBox& b) {
    const int denom = std::min(a.height(), b.height());
    return denom > 0 ? double(vertical_overlap(a, b)) / denom : 0.0;
  };
  for (int u : order) {
    const auto& box = units[u].bbox;
    int best = -1;
    double best_ratio = 0;
    for (std::size_t l = 0; l < lines.size(); ++l) {
      const double ratio = overlap_ratio(box, lines[l].band);
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = int(l);
      }
    }
    if (best >= 0 && best_ratio >= cfg.line_overlap) {
      lines[best].band = unite(lines[best].band, box);
      lines[best].units.push_back(u);
    } else {
      lines.push_back({box, {u}});
    }
  }
  // Bands grow while clustering; fold together lines that ended up overlapping.
  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t a = 0; a < lines.size() && !merged; ++a)
      for (std::size_t b = a + 1; b < lines.size() && !merged; ++b)
        if (overlap_ratio(lines[a].band, lines[b].band) >= cfg.line_overlap) {
          lines[a].band = unite(lines[a].band, lines[b].band);
          lines[a].units.insert(lines[a].units.end(), lines[b].units.begin(), lines[b].units.end());
          lines.erase(lines.begin() + std::ptrdiff_t(b));
          merged = true;
        }
  }
  std::sort(lines.begin(), lines.end(), [](const LineAcc& a, const LineAcc& b) {
    if (a.band.top != b.band.top) return a.band.top > b.band.top;
    return a.band.bottom > b.band.bottom;
  });

  const int h = bin.height();
  auto make_glyph = [&](const detail::Unit& u) {
    GlyphSample g;
    g.bbox = u.bbox;
    g.source_page = page_id;
    g.mask = BinaryImage(u.bbox.width(), u.bbox.height());
    const auto px = pixels_of(u.bbox, h);
    for (int r = px.row0; r <= px.row1; ++r)
      for (int x = px.x0; x <= px.x1; ++x) {
        const int lab = labels.label[std::size_t(r) * bin.width() + x];
        if (lab >= 0 && std::find(u.components.begin(), u.components.end(), lab) != u.components.end())
          g.mask.set(x - px.x0, r - px.row0);
      }
    return g;
  };

  for (auto& acc : lines) {
    std::sort(acc.units.begin(), acc.units.end(), [&](int a, int b) {
      const auto& A = units[a].bbox;
      const auto& B = units[b].bbox;
      if (A.left != B.left) return A.left < B.left;
      return A.bottom < B.bottom;
    });
    std::vector<int> gaps;
    for (std::size_t i = 1; i < acc.units.size(); ++i)
      gaps.push_back(units[acc.units[i]].bbox.left - units[acc.units[i - 1]].bbox.right);
    const double split_at =
        gaps.empty() ? 0.0 : cfg.word_gap_factor * std::max(detail::median(gaps), 1.0);

    Line line;
    line.y_low = acc.band.bottom;
    line.y_high = acc.band.top;
    Word word;
    for (std::size_t i = 0; i < acc.units.size(); ++i) {
      if (i > 0 && gaps[i - 1] > split_at) {
        line.words.push_back(std::move(word));
        word = {};
      }
      const auto& u = units[acc.units[i]];
      word.bbox = word.glyphs.empty() ? u.bbox : unite(word.bbox, u.bbox);
      word.glyphs.push_back(make_glyph(u));
    }
    line.words.push_back(std::move(word));
    seg.lines.push_back(std::move(line));
  }
  return seg;
}

inline PageSegmentation segment_page(const PageImage& page, const SegConfig& cfg = {}) {
  return segment_page(binarize(page), cfg, page.id());
}

}  // namespace hwocr
