#pragma once

// Box files: one labeled character per line, `<glyph> <left> <bottom> <right> <top>`,
// coordinates measured from the bottom-left corner of the page.

#include <charconv>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "hwocr/error.hpp"
#include "hwocr/geometry.hpp"
#include "hwocr/image.hpp"
#include "hwocr/issue.hpp"

namespace hwocr {

/// Placeholder label for boxes no classifier has named yet.
inline constexpr std::string_view kUnknownGlyph = "*";

struct BoxEntry {
  std::string glyph;
  BBox bbox;
  friend bool operator==(const BoxEntry&, const BoxEntry&) = default;
};

struct BoxFile {
  std::vector<BoxEntry> entries;
  std::string page_id;
  friend bool operator==(const BoxFile&, const BoxFile&) = default;
};

/// Byte length of the UTF-8 sequence starting at `s[0]`, or 0 if malformed.
inline std::size_t utf8_sequence_length(std::string_view s) {
  if (s.empty()) return 0;
  const auto c = static_cast<unsigned char>(s[0]);
  std::size_t n = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 0;
  if (n == 0 || n > s.size()) return 0;
  for (std::size_t i = 1; i < n; ++i)
    if ((static_cast<unsigned char>(s[i]) >> 6) != 0x2) return 0;
  return n;
}

/// True when `s` is exactly one printable, non-space character.
inline bool is_single_glyph(std::string_view s) {
  const auto n = utf8_sequence_length(s);
  if (n == 0 || n != s.size()) return false;
  const auto c = static_cast<unsigned char>(s[0]);
  return n > 1 || (c > 0x20 && c < 0x7f);
}

inline bool is_lowercase_roman(std::string_view glyph) {
  return glyph.size() == 1 && glyph[0] >= 'a' && glyph[0] <= 'z';
}

namespace detail {

// Canonical non-negative decimal: ASCII digits, no sign, no leading zeros.
inline bool parse_coordinate(std::string_view s, int& out) {
  if (s.empty() || (s.size() > 1 && s[0] == '0')) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace detail

inline BoxFile parse_boxfile(std::string_view text, std::string page_id = {}) {
  BoxFile bf;
  bf.page_id = std::move(page_id);
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    const std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      const auto sp = line.find(' ', pos);
      fields.push_back(line.substr(pos, sp == std::string_view::npos ? sp : sp - pos));
      if (sp == std::string_view::npos) break;
      pos = sp + 1;
    }
    if (fields.size() != 5)
      throw ParseError(line_no, "expected 5 space-separated fields, found " +
                                    std::to_string(fields.size()));
    if (!is_single_glyph(fields[0]))
      throw ParseError(line_no, "glyph must be exactly one character: '" +
                                    std::string(fields[0]) + "'");
    int v[4];
    for (int i = 0; i < 4; ++i)
      if (!detail::parse_coordinate(fields[i + 1], v[i]))
        throw ParseError(line_no, "invalid coordinate '" + std::string(fields[i + 1]) + "'");
    BoxEntry e{std::string(fields[0]), {v[0], v[1], v[2], v[3]}};
    if (e.bbox.left >= e.bbox.right) throw ParseError(line_no, "left must be less than right");
    if (e.bbox.bottom >= e.bbox.top) throw ParseError(line_no, "bottom must be less than top");
    bf.entries.push_back(std::move(e));
  }
  return bf;
}

inline std::string serialize_boxfile(const BoxFile& bf) {
  std::string out;
  for (const auto& e : bf.entries) {
    out += e.glyph;
    for (int v : {e.bbox.left, e.bbox.bottom, e.bbox.right, e.bbox.top}) {
      out += ' ';
      out += std::to_string(v);
    }
    out += '\n';
  }
  return out;
}

/// Issue kinds that make a box file unusable for training.
inline bool is_hard_box_issue(const Issue& i) {
  return i.kind == "out-of-bounds" || i.kind == "invalid-box" || i.kind == "invalid-glyph";
}

/// Checks boxes against a page of the given size: geometry, bounds, heavy
/// overlap (IoU above `max_iou`) and labels outside a-z.
inline std::vector<Issue> validate_boxes(const BoxFile& bf, int page_width, int page_height,
                                         double max_iou = 0.8) {
  std::vector<Issue> issues;
  const BBox page{0, 0, page_width, page_height};
  for (std::size_t i = 0; i < bf.entries.size(); ++i) {
    const auto& e = bf.entries[i];
    if (!e.bbox.valid()) {
      issues.push_back({Severity::warning, "invalid-box", "box has non-positive width or height", i});
      continue;
    }
    if (!page.contains(e.bbox))
      issues.push_back({Severity::warning, "out-of-bounds", "box extends beyond the page", i});
    if (!is_single_glyph(e.glyph))
      issues.push_back({Severity::warning, "invalid-glyph", "label is not a single character", i});
    else if (!is_lowercase_roman(e.glyph))
      issues.push_back({Severity::warning, "label", "label '" + e.glyph + "' is outside a-z", i});
  }
  for (std::size_t i = 0; i < bf.entries.size(); ++i)
    for (std::size_t j = i + 1; j < bf.entries.size(); ++j) {
      const auto& a = bf.entries[i].bbox;
      const auto& b = bf.entries[j].bbox;
      if (a.valid() && b.valid() && iou(a, b) > max_iou)
        issues.push_back({Severity::warning, "overlap",
                          "box overlaps entry " + std::to_string(i) + " above the IoU limit", j});
    }
  return issues;
}

inline std::vector<Issue> validate_boxes(const BoxFile& bf, const PageImage& page) {
  return validate_boxes(bf, page.width(), page.height());
}

}  // namespace hwocr
