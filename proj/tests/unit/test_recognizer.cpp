#include <gtest/gtest.h>

#include <random>

#include "hwocr/makebox.hpp"
#include "hwocr/recognizer.hpp"
#include "stamps.hpp"
#include "synth.hpp"

using namespace hwocr;

namespace {

// Three identical rings forming one word, then a lone bar on a second line.
PageImage rings_page() {
  PageImage p(80, 70, stamps::kPaper);
  for (int i = 0; i < 3; ++i) stamps::ring(p, 10 + 16 * i, 8, 12, 18);
  stamps::fill(p, 10, 45, 3, 18);
  p.set_id("rings");
  return p;
}

TrCharFeatures glyph_features(const PageImage& p, std::size_t index, const std::string& label) {
  auto f = extract_features(*segment_page(p).glyphs().at(index));
  f.glyph = label;
  return f;
}

/// Pack whose classes are trained on the given labeled feature records.
LanguagePack pack_of(const std::vector<TrCharFeatures>& records) {
  std::vector<TrFeatureSet> trs(1);
  trs[0].records = records;
  LanguagePack p;
  p.lang = "tst";
  BoxFile bf;
  for (const auto& r : records) bf.entries.push_back({r.glyph, {0, 0, 1, 1}});
  const std::vector<BoxFile> bfs{bf};
  p.unicharset = extract_unicharset(bfs);
  p.prototypes = cn_training(trs);
  p.micro_protos = mf_training(trs);
  return p;
}

}  // namespace

TEST(MfMatch, ToleranceIsTwoQuantizationSteps) {
  const MicroFeature base{0.5, 0.5, 2, 0.5};
  constexpr double s = 1.0 / 16;
  EXPECT_TRUE(detail::mf_matches(base, {0.5 + 2 * s, 0.5, 2, 0.5}, 2));
  EXPECT_FALSE(detail::mf_matches(base, {0.5 + 3 * s, 0.5, 2, 0.5}, 2));
  EXPECT_TRUE(detail::mf_matches(base, {0.5, 0.5 - 2 * s, 2, 0.5 + 2 * s}, 2));
  EXPECT_TRUE(detail::mf_matches(base, {0.5, 0.5, 3, 0.5}, 2));
  EXPECT_TRUE(detail::mf_matches(base, {0.5, 0.5, 1, 0.5}, 2));
  EXPECT_FALSE(detail::mf_matches(base, {0.5, 0.5, 4, 0.5}, 2));
  EXPECT_TRUE(detail::mf_matches({0.5, 0.5, 7, 0.5}, {0.5, 0.5, 0, 0.5}, 2));
}

TEST(Classify, PerfectMatchRatesOne) {
  const auto page = rings_page();
  const auto ring = glyph_features(page, 0, "o");
  const auto pack = pack_of({ring});
  const auto scored = classify_features(pack, ring);
  ASSERT_EQ(scored.size(), 1u);
  EXPECT_EQ(scored[0].glyph, "o");
  EXPECT_NEAR(scored[0].rating, 1.0, 1e-12);
}

TEST(Classify, RatingIsWeightedSum) {
  const auto page = rings_page();
  const auto ring = glyph_features(page, 0, "o");
  auto pack = pack_of({ring});
  // Move the cn prototype far away: only the micro-feature term remains.
  pack.prototypes.classes["o"][0].mean = {0, 0, 0, 0};
  const auto scored = classify_features(pack, ring);
  ASSERT_EQ(scored.size(), 1u);
  EXPECT_NEAR(scored[0].rating, 0.6, 1e-9);
  RecognizerConfig cfg;
  cfg.w_cn = 0.5;
  cfg.w_mf = 0.5;
  EXPECT_NEAR(classify_features(pack, ring, cfg)[0].rating, 0.5, 1e-9);
}

TEST(Classify, PrunerDropsClassesWithWrongFeatureCount) {
  const auto page = rings_page();
  const auto ring = glyph_features(page, 0, "o");
  auto pack = pack_of({ring});
  const int n = int(ring.micro.size());
  pack.micro_protos.expected_count["o"] = 3 * n;
  EXPECT_TRUE(classify_features(pack, ring).empty());
  pack.micro_protos.expected_count["o"] = n;
  EXPECT_EQ(classify_features(pack, ring).size(), 1u);
}

TEST(Classify, EmptyPackThrows) {
  LanguagePack pack;
  TrCharFeatures f;
  f.micro.push_back({0.5, 0.5, 0, 0});
  EXPECT_THROW(classify_features(pack, f), Error);
}

TEST(Classify, TiesBreakByGlyphOrder) {
  const auto page = rings_page();
  const auto pack = pack_of({glyph_features(page, 0, "q"), glyph_features(page, 0, "o")});
  const auto scored = classify_features(pack, glyph_features(page, 1, ""));
  ASSERT_EQ(scored.size(), 2u);
  EXPECT_EQ(scored[0].rating, scored[1].rating);
  EXPECT_EQ(scored[0].glyph, "o");
}

TEST(Recognize, StructureFollowsSegmentation) {
  const auto page = rings_page();
  const auto pack = pack_of({glyph_features(page, 0, "o"), glyph_features(page, 3, "l")});
  const auto r = recognize_page(pack, page);
  EXPECT_EQ(r.page_id, "rings");
  ASSERT_EQ(r.lines.size(), 2u);
  ASSERT_EQ(r.lines[0].words.size(), 1u);
  EXPECT_EQ(r.char_count(), 4u);
  EXPECT_EQ(render_text(r), "ooo\nl\n");
  EXPECT_EQ(render_debug(r), "ooo\nl\n");
  for (const auto& l : r.lines)
    for (const auto& w : l.words)
      for (const auto& c : w.chars) {
        EXPECT_FALSE(c.rejected);
        EXPECT_LE(c.alternatives.size(), 5u);
        EXPECT_EQ(c.alternatives.front(), c.best);
      }
}

TEST(Recognize, RejectionThresholdAndWordRejection) {
  const auto page = rings_page();
  auto pack = pack_of({glyph_features(page, 0, "o"), glyph_features(page, 3, "l")});
  RecognizerConfig cfg;
  cfg.reject_threshold = 1.01;
  const auto r = recognize_page(pack, page, cfg);
  EXPECT_EQ(render_text(r), "\n\n");
  EXPECT_EQ(render_debug(r), "~~~\n~\n");
  EXPECT_TRUE(r.lines[0].words[0].rejected);

  // Reject only the bar: its word (one char) goes, the rings stay.
  pack.prototypes.classes["l"][0].mean = {0, 0, 0, 0};
  pack.micro_protos.classes["l"] = {{0, 0, 0, 0}};
  cfg.reject_threshold = 0.35;
  const auto r2 = recognize_page(pack, page, cfg);
  EXPECT_EQ(render_text(r2), "ooo\n\n");
  EXPECT_TRUE(r2.lines[1].words[0].rejected);
}

TEST(Recognize, WordRejectedWhenMoreThanHalfItsCharsAre) {
  // Word of 3 glyphs: two rings the pack does not know, one it does.
  PageImage p(80, 40, stamps::kPaper);
  stamps::ring(p, 10, 8, 12, 18);
  stamps::ring(p, 26, 8, 12, 18, 4);
  stamps::ring(p, 42, 8, 12, 18, 4);
  const auto known = glyph_features(p, 0, "o");
  auto pack = pack_of({known});
  RecognizerConfig cfg;
  cfg.prune_tolerance = 100;
  const double thin_rating = classify_features(pack, glyph_features(p, 1, ""), cfg)[0].rating;
  ASSERT_LT(thin_rating, 1.0);
  cfg.reject_threshold = (thin_rating + 1.0) / 2;
  const auto r = recognize_page(pack, p, cfg);
  ASSERT_EQ(r.lines.size(), 1u);
  ASSERT_EQ(r.lines[0].words.size(), 1u);
  EXPECT_TRUE(r.lines[0].words[0].rejected);
  for (const auto& c : r.lines[0].words[0].chars) EXPECT_TRUE(c.rejected);

  // With exactly half rejected (raise the fraction) the word survives.
  cfg.word_reject_fraction = 2.0 / 3.0;
  const auto r2 = recognize_page(pack, p, cfg);
  EXPECT_FALSE(r2.lines[0].words[0].rejected);
  EXPECT_EQ(render_text(r2), "o\n");
  EXPECT_EQ(render_debug(r2), "o~~\n");
}

TEST(Recognize, DictionaryBreaksTies) {
  const auto page = rings_page();
  auto pack = pack_of({glyph_features(page, 0, "o"), glyph_features(page, 0, "q"),
                       glyph_features(page, 3, "l")});
  RecognizerConfig cfg;
  cfg.use_dict = true;
  EXPECT_EQ(render_text(recognize_page(pack, page, cfg)), "ooo\nl\n");
  pack.word_dawg = build_dawg(WordList{{"oqo"}});
  EXPECT_EQ(render_text(recognize_page(pack, page, cfg)), "oqo\nl\n");
  cfg.use_dict = false;
  EXPECT_EQ(render_text(recognize_page(pack, page, cfg)), "ooo\nl\n");
  cfg.use_dict = true;
  pack.word_dawg = Dawg{};
  pack.user_words = WordList{{"qqq"}};
  EXPECT_EQ(render_text(recognize_page(pack, page, cfg)), "qqq\nl\n");
}

TEST(Recognize, BlankDictionaryChangesNothing) {
  const auto page = rings_page();
  const auto pack = pack_of({glyph_features(page, 0, "o"), glyph_features(page, 0, "q"),
                             glyph_features(page, 3, "l")});
  RecognizerConfig cfg;
  const auto plain = recognize_page(pack, page, cfg);
  cfg.use_dict = true;
  EXPECT_EQ(recognize_page(pack, page, cfg), plain);
}

TEST(Recognize, DictionaryNeverPicksOutsideTheMargin) {
  const auto page = rings_page();
  auto pack = pack_of({glyph_features(page, 0, "o"), glyph_features(page, 3, "l")});
  // 'l' scores every ring far below 'o'; "lll" must not win.
  pack.micro_protos.expected_count["l"] = pack.micro_protos.expected_count["o"];
  pack.word_dawg = build_dawg(WordList{{"lll", "lol"}});
  RecognizerConfig cfg;
  cfg.use_dict = true;
  EXPECT_EQ(render_text(recognize_page(pack, page, cfg)).substr(0, 4), "ooo\n");
}

TEST(Recognize, AmbiguitiesAreFlaggedNotApplied) {
  const auto page = rings_page();
  const auto pack = pack_of({glyph_features(page, 0, "o"), glyph_features(page, 3, "l")});
  const auto r = recognize_page(pack, page);
  const auto flags = flag_ambiguities(r, parse_ambigs("oo\tw\nl\t1\n"));
  ASSERT_EQ(flags.size(), 3u);
  EXPECT_EQ(flags[0], (AmbiguityWarning{0, "oo", "w"}));
  EXPECT_EQ(flags[1], (AmbiguityWarning{1, "oo", "w"}));
  EXPECT_EQ(flags[2], (AmbiguityWarning{4, "l", "1"}));
  EXPECT_EQ(render_text(r), "ooo\nl\n");
}

TEST(Recognize, EmptyPage) {
  const auto page = rings_page();
  const auto pack = pack_of({glyph_features(page, 0, "o")});
  const auto r = recognize_page(pack, PageImage(30, 30, stamps::kPaper));
  EXPECT_TRUE(r.lines.empty());
  EXPECT_EQ(render_text(r), "");
}

TEST(ResultJson, RoundTrip) {
  const auto page = rings_page();
  const auto pack = pack_of({glyph_features(page, 0, "o"), glyph_features(page, 0, "q"),
                             glyph_features(page, 3, "l")});
  const auto r = recognize_page(pack, page);
  const auto j = result_to_json(r);
  EXPECT_EQ(j.at("page"), "rings");
  EXPECT_EQ(result_from_json(nlohmann::json::parse(j.dump())), r);
  EXPECT_THROW(result_from_json(nlohmann::json::parse(R"({"lines":[{"words":[{}]}]})")), Error);
}

TEST(MakeBox, UsesPackLabels) {
  const auto page = rings_page();
  const auto pack = pack_of({glyph_features(page, 0, "o"), glyph_features(page, 3, "l")});
  const auto seg = segment_page(page);
  const auto bf = make_boxes(seg, &pack, {}, "rings");
  ASSERT_EQ(bf.entries.size(), 4u);
  EXPECT_EQ(bf.page_id, "rings");
  EXPECT_EQ(bf.entries[0].glyph, "o");
  EXPECT_EQ(bf.entries[3].glyph, "l");
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(bf.entries[i].bbox, seg.glyphs()[i]->bbox);
  EXPECT_EQ(make_boxes(seg).entries[0].glyph, "*");
}

TEST(Recognize, SynthesizedHandwritingIsMostlyRight) {
  std::mt19937 rng(77);
  const auto user = synth::default_users()[0];
  const synth::Jitter jitter;
  std::vector<TrFeatureSet> trs;
  std::vector<BoxFile> boxes;
  for (const auto& pg : synth::make_pages(user, synth::letter_sequence(12, rng), 13, 104, jitter, rng, "tr")) {
    trs.push_back(emit_tr(pg.image, pg.truth).features);
    boxes.push_back(pg.truth);
  }
  LanguagePack pack;
  pack.lang = user.lang;
  pack.unicharset = extract_unicharset(boxes);
  pack.prototypes = cn_training(trs);
  pack.micro_protos = mf_training(trs);

  const auto test = synth::make_page(user, synth::letter_sequence(2, rng), 13, jitter, rng, "te");
  const auto r = recognize_page(pack, test.image);
  std::size_t right = 0, total = 0;
  std::size_t i = 0;
  for (const auto& l : r.lines)
    for (const auto& w : l.words)
      for (const auto& c : w.chars) {
        ++total;
        if (i < test.truth.entries.size() && !c.rejected && c.best.glyph == test.truth.entries[i].glyph) ++right;
        ++i;
      }
  EXPECT_EQ(total, test.truth.entries.size());
  EXPECT_GE(double(right) / double(test.truth.entries.size()), 0.85);
}
