#pragma once

// Static character classification against a language pack, rejection, and
// optional dictionary tie-breaking.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hwocr/error.hpp"
#include "hwocr/features.hpp"
#include "hwocr/imaging.hpp"
#include "hwocr/langpack.hpp"

namespace hwocr {

struct RecognizerConfig {
  double w_cn = 0.4;
  double w_mf = 0.6;
  double prune_tolerance = 0.5;  // allowed relative deviation from the expected mf count
  // A glyph micro-feature matches a prototype when each of x, y and len is
  // within mf_match_distance steps of 1/16 and the direction sector differs
  // by at most mf_match_distance / 2.
  double mf_match_distance = 2.0;
  double reject_threshold = 0.35;
  double word_reject_fraction = 0.5;
  bool use_dict = false;
  double dict_tie_margin = 0.05;
  std::size_t max_alternatives = 5;
  SegConfig seg;
  FeatureConfig features;
};

struct ScoredLabel {
  std::string glyph;
  double rating = 0;
  friend bool operator==(const ScoredLabel&, const ScoredLabel&) = default;
};

struct CharResult {
  BBox bbox;
  ScoredLabel best;
  std::vector<ScoredLabel> alternatives;  // best first
  bool rejected = false;
  friend bool operator==(const CharResult&, const CharResult&) = default;
};

struct WordResult {
  BBox bbox;
  std::vector<CharResult> chars;
  bool rejected = false;
  friend bool operator==(const WordResult&, const WordResult&) = default;
};

struct LineResult {
  std::vector<WordResult> words;
  friend bool operator==(const LineResult&, const LineResult&) = default;
};

struct RecognitionResult {
  std::string page_id;
  std::vector<LineResult> lines;
  friend bool operator==(const RecognitionResult&, const RecognitionResult&) = default;

  std::size_t char_count() const {
    std::size_t n = 0;
    for (const auto& l : lines)
      for (const auto& w : l.words) n += w.chars.size();
    return n;
  }
};

namespace detail {

inline double cn_similarity(const std::vector<Prototype>& protos, const CnVector& v) {
  double best = 0;
  for (const auto& p : protos) {
    double m2 = 0;
    for (int d = 0; d < 4; ++d) m2 += (v[d] - p.mean[d]) * (v[d] - p.mean[d]) / p.var[d];
    best = std::max(best, std::exp(-m2 / 2));
  }
  return best;
}

inline bool mf_matches(const MicroFeature& a, const MicroFeature& b, double dist) {
  constexpr double step = 1.0 / 16;
  const double eps = 1e-9;
  return std::abs(a.x - b.x) / step <= dist + eps && std::abs(a.y - b.y) / step <= dist + eps &&
         std::abs(a.len - b.len) / step <= dist + eps &&
         2.0 * sector_distance(a.dir, b.dir) <= dist + eps;
}

inline double mf_similarity(const std::vector<MicroFeature>& protos,
                            const std::vector<MicroFeature>& glyph, double dist) {
  if (glyph.empty()) return 0;
  std::size_t hit = 0;
  for (const auto& m : glyph) {
    const auto q = quantize(m);
    hit += std::any_of(protos.begin(), protos.end(),
                       [&](const MicroFeature& p) { return mf_matches(q, p, dist); });
  }
  return double(hit) / double(glyph.size());
}

}  // namespace detail

/// Scores every class that survives the micro-feature count pruner, best
/// first. Ties are broken by glyph order so the result is deterministic.
inline std::vector<ScoredLabel> classify_features(const LanguagePack& pack,
                                                  const TrCharFeatures& f,
                                                  const RecognizerConfig& cfg = {}) {
  if (pack.micro_protos.classes.empty() || pack.prototypes.classes.empty())
    throw Error("language pack '" + pack.lang + "' has no trained classes");
  std::vector<ScoredLabel> out;
  const double n = double(f.micro.size());
  for (const auto& [glyph, protos] : pack.micro_protos.classes) {
    const auto ec = pack.micro_protos.expected_count.find(glyph);
    const auto cn = pack.prototypes.classes.find(glyph);
    if (ec == pack.micro_protos.expected_count.end() || cn == pack.prototypes.classes.end())
      continue;
    const double expected = ec->second;
    if (std::abs(n - expected) > cfg.prune_tolerance * expected + 1e-9) continue;
    const double s_cn = detail::cn_similarity(cn->second, f.cn);
    const double s_mf = detail::mf_similarity(protos, f.micro, cfg.mf_match_distance);
    const double rating = std::clamp(cfg.w_cn * s_cn + cfg.w_mf * s_mf, 0.0, 1.0);
    out.push_back({glyph, rating});
  }
  std::sort(out.begin(), out.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
    return a.rating != b.rating ? a.rating > b.rating : a.glyph < b.glyph;
  });
  return out;
}

inline std::vector<ScoredLabel> classify_glyph(const LanguagePack& pack, const GlyphSample& g,
                                               const RecognizerConfig& cfg = {}) {
  return classify_features(pack, extract_features(g, cfg.features), cfg);
}

namespace detail {

inline std::string visible_word(const WordResult& w) {
  std::string s;
  if (w.rejected) return s;
  for (const auto& c : w.chars)
    if (!c.rejected) s += c.best.glyph;
  return s;
}

inline double mean_rating(const std::vector<const ScoredLabel*>& picks) {
  double s = 0;
  for (const auto* p : picks) s += p->rating;
  return picks.empty() ? 0 : s / double(picks.size());
}

// Among spellings whose mean rating is within the margin of the top
// spelling, prefer the best-rated one found in the dictionary.
inline void dictionary_tie_break(WordResult& w, const LanguagePack& pack,
                                 const RecognizerConfig& cfg) {
  if (w.rejected || w.chars.empty()) return;
  for (const auto& c : w.chars)
    if (c.rejected) return;
  std::vector<std::vector<const ScoredLabel*>> options;
  for (const auto& c : w.chars) {
    std::vector<const ScoredLabel*> o;
    for (const auto& a : c.alternatives)
      if (a.rating >= c.best.rating - cfg.dict_tie_margin) o.push_back(&a);
    options.push_back(std::move(o));
  }
  std::vector<const ScoredLabel*> top;
  for (const auto& c : w.chars) top.push_back(&c.best);
  const double top_score = mean_rating(top);

  constexpr std::size_t kMaxCandidates = 4096;
  std::size_t combos = 1;
  for (const auto& o : options) {
    combos *= o.size();
    if (combos > kMaxCandidates) return;
  }
  std::vector<std::size_t> idx(options.size(), 0);
  std::vector<const ScoredLabel*> best_pick;
  double best_score = -1;
  for (std::size_t k = 0; k < combos; ++k) {
    std::vector<const ScoredLabel*> pick;
    std::string s;
    for (std::size_t i = 0; i < options.size(); ++i) {
      pick.push_back(options[i][idx[i]]);
      s += options[i][idx[i]]->glyph;
    }
    const double score = mean_rating(pick);
    if (score >= top_score - cfg.dict_tie_margin && score > best_score && pack.in_dictionary(s)) {
      best_score = score;
      best_pick = pick;
    }
    for (std::size_t i = options.size(); i-- > 0;) {
      if (++idx[i] < options[i].size()) break;
      idx[i] = 0;
    }
  }
  if (best_pick.empty()) return;
  for (std::size_t i = 0; i < w.chars.size(); ++i) w.chars[i].best = *best_pick[i];
}

}  // namespace detail

/// Segments, classifies and applies character and word rejection.
inline RecognitionResult recognize_page(const LanguagePack& pack, const PageImage& page,
                                        const RecognizerConfig& cfg = {}) {
  RecognitionResult res;
  res.page_id = page.id();
  const PageSegmentation seg = segment_page(page, cfg.seg);
  const bool dict = cfg.use_dict && pack.has_dictionary();
  for (const auto& line : seg.lines) {
    LineResult lr;
    for (const auto& word : line.words) {
      WordResult wr;
      wr.bbox = word.bbox;
      std::size_t rejected = 0;
      for (const auto& g : word.glyphs) {
        CharResult c;
        c.bbox = g.bbox;
        auto scored = classify_glyph(pack, g, cfg);
        if (!scored.empty()) c.best = scored.front();
        if (scored.size() > cfg.max_alternatives) scored.resize(cfg.max_alternatives);
        c.alternatives = std::move(scored);
        c.rejected = c.alternatives.empty() || c.best.rating < cfg.reject_threshold;
        rejected += c.rejected;
        wr.chars.push_back(std::move(c));
      }
      if (double(rejected) > cfg.word_reject_fraction * double(wr.chars.size())) {
        wr.rejected = true;
        for (auto& c : wr.chars) c.rejected = true;
      }
      if (dict) detail::dictionary_tie_break(wr, pack, cfg);
      lr.words.push_back(std::move(wr));
    }
    res.lines.push_back(std::move(lr));
  }
  return res;
}

/// Main text: rejected characters omitted, words separated by one space,
/// one LF after every line.
inline std::string render_text(const RecognitionResult& r) {
  std::string out;
  for (const auto& l : r.lines) {
    bool first = true;
    for (const auto& w : l.words) {
      const std::string s = detail::visible_word(w);
      if (s.empty()) continue;
      if (!first) out += ' ';
      out += s;
      first = false;
    }
    out += '\n';
  }
  return out;
}

/// Like render_text, but every character is shown and rejected ones print as '~'.
inline std::string render_debug(const RecognitionResult& r) {
  std::string out;
  for (const auto& l : r.lines) {
    for (std::size_t i = 0; i < l.words.size(); ++i) {
      if (i) out += ' ';
      for (const auto& c : l.words[i].chars) out += c.rejected ? std::string("~") : c.best.glyph;
    }
    out += '\n';
  }
  return out;
}

struct AmbiguityWarning {
  std::size_t offset = 0;  // byte offset into render_text
  std::string wrong;
  std::string right;
  friend bool operator==(const AmbiguityWarning&, const AmbiguityWarning&) = default;
};

/// Every occurrence of a rule's left side in the rendered text, ordered by
/// offset. Never changes the result.
inline std::vector<AmbiguityWarning> flag_ambiguities(const RecognitionResult& r,
                                                      const AmbigTable& ambigs) {
  std::vector<AmbiguityWarning> out;
  const std::string text = render_text(r);
  for (const auto& rule : ambigs.rules)
    for (auto pos = text.find(rule.wrong); pos != std::string::npos;
         pos = text.find(rule.wrong, pos + 1))
      out.push_back({pos, rule.wrong, rule.right});
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.offset < b.offset; });
  return out;
}

// ---------------------------------------------------------------------------
// JSON form of a result, consumed by the evaluator.

inline nlohmann::json bbox_to_json(const BBox& b) {
  return {{"left", b.left}, {"bottom", b.bottom}, {"right", b.right}, {"top", b.top}};
}

inline BBox bbox_from_json(const nlohmann::json& j) {
  return {j.at("left").get<int>(), j.at("bottom").get<int>(), j.at("right").get<int>(),
          j.at("top").get<int>()};
}

inline nlohmann::json result_to_json(const RecognitionResult& r) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : r.lines) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& w : l.words) {
      nlohmann::json chars = nlohmann::json::array();
      for (const auto& c : w.chars) {
        nlohmann::json alts = nlohmann::json::array();
        for (const auto& a : c.alternatives) alts.push_back({{"glyph", a.glyph}, {"rating", a.rating}});
        chars.push_back({{"bbox", bbox_to_json(c.bbox)},
                         {"glyph", c.best.glyph},
                         {"rating", c.best.rating},
                         {"rejected", c.rejected},
                         {"alternatives", alts}});
      }
      words.push_back({{"bbox", bbox_to_json(w.bbox)}, {"rejected", w.rejected}, {"chars", chars}});
    }
    lines.push_back({{"words", words}});
  }
  return {{"page", r.page_id}, {"lines", lines}};
}

inline RecognitionResult result_from_json(const nlohmann::json& j) {
  try {
    RecognitionResult r;
    r.page_id = j.value("page", std::string{});
    for (const auto& jl : j.at("lines")) {
      LineResult l;
      for (const auto& jw : jl.at("words")) {
        WordResult w;
        w.bbox = bbox_from_json(jw.at("bbox"));
        w.rejected = jw.at("rejected").get<bool>();
        for (const auto& jc : jw.at("chars")) {
          CharResult c;
          c.bbox = bbox_from_json(jc.at("bbox"));
          c.best = {jc.at("glyph").get<std::string>(), jc.at("rating").get<double>()};
          c.rejected = jc.at("rejected").get<bool>();
          for (const auto& ja : jc.value("alternatives", nlohmann::json::array()))
            c.alternatives.push_back({ja.at("glyph").get<std::string>(), ja.at("rating").get<double>()});
          w.chars.push_back(std::move(c));
        }
        l.words.push_back(std::move(w));
      }
      r.lines.push_back(std::move(l));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed recognition result: ") + e.what());
  }
}

}  // namespace hwocr
