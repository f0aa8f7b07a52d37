#pragma once

// First-pass box files from a segmented page.

#include "hwocr/boxfile.hpp"
#include "hwocr/imaging.hpp"
#include "hwocr/recognizer.hpp"

namespace hwocr {

/// One entry per glyph in reading order, labeled with the pack's best class
/// or '*' when there is no pack (or no class survives pruning).
inline BoxFile make_boxes(const PageSegmentation& seg, const LanguagePack* pack = nullptr,
                          const RecognizerConfig& cfg = {}, std::string page_id = {}) {
  BoxFile bf;
  bf.page_id = std::move(page_id);
  for (const auto* g : seg.glyphs()) {
    std::string label(kUnknownGlyph);
    if (pack) {
      const auto scored = classify_glyph(*pack, *g, cfg);
      if (!scored.empty()) label = scored.front().glyph;
    }
    bf.entries.push_back({label, g->bbox});
  }
  return bf;
}

}  // namespace hwocr
