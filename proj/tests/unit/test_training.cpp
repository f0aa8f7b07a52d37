#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hwocr/training.hpp"
#include "stamps.hpp"

using namespace hwocr;

namespace {

TrCharFeatures record(std::string glyph, CnVector cn, std::vector<MicroFeature> micro = {}) {
  if (micro.empty()) micro.push_back({0.5, 0.5, 0, 0.25});
  return {std::move(glyph), cn, std::move(micro)};
}

std::vector<MicroFeature> random_micro(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<MicroFeature> out;
  for (int i = 0; i < n; ++i)
    out.push_back({round6(u(rng)), round6(u(rng)), int(rng() % 8), round6(u(rng))});
  return out;
}

// Glyph-like mask: an 'o' with a tail.
BinaryImage sample_mask() {
  BinaryImage m(9, 12);
  for (int r = 2; r < 9; ++r)
    for (int x = 0; x < 9; ++x)
      if (r == 2 || r == 8 || x == 0 || x == 8 || x == 1 || r == 3) m.set(x, r);
  for (int r = 0; r < 3; ++r) m.set(8, r), m.set(7, r);
  return m;
}

}  // namespace

TEST(Features, FilledSquare) {
  const auto f = extract_features(stamps::filled(6, 6));
  EXPECT_DOUBLE_EQ(f.cn[0], 0.5);
  EXPECT_DOUBLE_EQ(f.cn[1], 1.0);
  EXPECT_DOUBLE_EQ(f.cn[2], 0.5);
  EXPECT_DOUBLE_EQ(f.cn[3], 0.5);
  // A square outline has four straight sides.
  ASSERT_EQ(f.micro.size(), 4u);
  std::set<int> dirs;
  for (const auto& m : f.micro) {
    dirs.insert(m.dir);
    EXPECT_DOUBLE_EQ(m.len, 1.0);
  }
  EXPECT_EQ(dirs, (std::set<int>{0, 2, 4, 6}));
}

TEST(Features, AspectMapping) {
  const auto wide = extract_features(stamps::filled(12, 4));
  EXPECT_DOUBLE_EQ(wide.cn[0], 0.75);  // r = 3
  const auto tall = extract_features(stamps::filled(2, 6));
  EXPECT_DOUBLE_EQ(tall.cn[0], 0.25);  // r = 1/3
}

TEST(Features, CentroidUsesYUp) {
  // Ink only in the bottom row of a 4x4 box (plus one pixel on top for extent).
  auto m = stamps::mask(4, 4, {{0, 0}, {0, 3}, {1, 3}, {2, 3}, {3, 3}});
  const auto f = extract_features(m);
  EXPECT_LT(f.cn[3], 0.5);
}

TEST(Features, SinglePixel) {
  const auto f = extract_features(stamps::mask(3, 3, {{1, 1}}));
  ASSERT_EQ(f.micro.size(), 1u);
  EXPECT_EQ(f.micro[0], (MicroFeature{0.5, 0.5, 0, 0.0}));
  EXPECT_DOUBLE_EQ(f.cn[1], 1.0);
}

TEST(Features, EmptyMaskThrows) { EXPECT_THROW(extract_features(BinaryImage(4, 4)), Error); }

TEST(Features, PaddingAroundTheGlyphDoesNotMatter) {
  const auto m = sample_mask();
  BinaryImage padded(m.width() + 7, m.height() + 3);
  for (int r = 0; r < m.height(); ++r)
    for (int x = 0; x < m.width(); ++x)
      if (m.ink(x, r)) padded.set(x + 5, r + 1);
  EXPECT_EQ(extract_features(m), extract_features(padded));
}

TEST(Features, IntegerScalingGivesTheSameFeatures) {
  const auto m = sample_mask();
  const auto f1 = extract_features(m);
  for (int k : {2, 3}) {
    const auto fk = extract_features(stamps::scaled(m, k));
    for (int d = 0; d < 4; ++d) EXPECT_NEAR(fk.cn[d], f1.cn[d], 0.02);
    ASSERT_EQ(fk.micro.size(), f1.micro.size());
    for (std::size_t i = 0; i < f1.micro.size(); ++i) EXPECT_EQ(quantize(fk.micro[i]), quantize(f1.micro[i]));
  }
}

TEST(Features, ValuesStayInRange) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryImage m(15, 15);
    for (int r = 0; r < 15; ++r)
      for (int x = 0; x < 15; ++x)
        if (rng() % 2) m.set(x, r);
    if (m.ink_count() == 0) continue;
    const auto f = extract_features(m);
    for (double v : f.cn) EXPECT_TRUE(v >= 0 && v <= 1);
    ASSERT_FALSE(f.micro.empty());
    for (const auto& mf : f.micro) {
      EXPECT_TRUE(mf.x >= 0 && mf.x <= 1 && mf.y >= 0 && mf.y <= 1 && mf.len >= 0 && mf.len <= 1);
      EXPECT_TRUE(mf.dir >= 0 && mf.dir < 8);
    }
  }
}

TEST(Features, DirectionSectors) {
  EXPECT_EQ(direction_sector(1, 0), 0);
  EXPECT_EQ(direction_sector(1, 1), 1);
  EXPECT_EQ(direction_sector(0, 1), 2);
  EXPECT_EQ(direction_sector(-1, 0), 4);
  EXPECT_EQ(direction_sector(0, -1), 6);
  EXPECT_EQ(sector_distance(7, 0), 1);
  EXPECT_EQ(sector_distance(2, 6), 4);
}

TEST(EmitTr, EmptyBoxFile) {
  EXPECT_TRUE(emit_tr(PageImage(10, 10, 255), BoxFile{}).features.records.empty());
}

TEST(EmitTr, RecordsFollowBoxOrder) {
  PageImage p(100, 40, stamps::kPaper);
  for (int g = 0; g < 3; ++g) stamps::ring(p, 10 + 25 * g, 10, 10 + 2 * g, 18);
  const auto seg = segment_page(p);
  BoxFile bf;
  const std::string labels = "xyz";
  for (std::size_t i = 0; i < 3; ++i) bf.entries.push_back({std::string(1, labels[i]), seg.glyphs()[i]->bbox});
  const auto res = emit_tr(p, bf);
  ASSERT_EQ(res.features.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(res.features.records[i].glyph, std::string(1, labels[i]));
    auto expected = extract_features(*seg.glyphs()[i]);
    expected.glyph = res.features.records[i].glyph;
    EXPECT_EQ(res.features.records[i], expected);
  }
}

TEST(EmitTr, InklessBoxesAreSkippedWithWarning) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    PageImage p(120, 60, stamps::kPaper);
    BoxFile bf;
    const int n = 1 + int(rng() % 8);
    for (int i = 0; i < n; ++i) {
      const int x = int(rng() % 100), row = int(rng() % 40);
      const bool inked = rng() % 3;
      if (inked) stamps::fill(p, x + 2, row + 2, 4, 4);
      bf.entries.push_back({"a", bbox_from_pixels(x, row, x + 7, row + 7, 60)});
    }
    const auto res = emit_tr(p, bf);
    EXPECT_EQ(res.features.records.size() + res.skipped, bf.entries.size());
    EXPECT_EQ(res.warnings.size(), res.skipped);
  }
}

TEST(TrFormat, RoundTrip) {
  std::mt19937 rng(1);
  TrFeatureSet set;
  for (int i = 0; i < 10; ++i)
    set.records.push_back(record(std::string(1, char('a' + i)), {0.1, 0.2, 0.333333, 1.0},
                                 random_micro(rng, 1 + i)));
  const auto text = serialize_tr(set);
  const auto back = parse_tr(text);
  EXPECT_EQ(back.records, set.records);
  EXPECT_EQ(serialize_tr(back), text);
}

TEST(TrFormat, Layout) {
  TrFeatureSet set;
  set.records.push_back(record("q", {0.5, 1, 0.25, 0.75}, {{0.5, 0.125, 3, 0.4}}));
  EXPECT_EQ(serialize_tr(set),
            "char q 1\n"
            "mf 0.500000 0.125000 3 0.400000\n"
            "cn 0.500000 1.000000 0.250000 0.750000\n");
}

TEST(TrFormat, Errors) {
  EXPECT_THROW(parse_tr("char a 2\nmf 0.1 0.1 0 0.1\ncn 0 0 0 0\n"), ParseError);
  EXPECT_THROW(parse_tr("char a 1\nmf 0.1 0.1 9 0.1\ncn 0 0 0 0\n"), ParseError);
  EXPECT_THROW(parse_tr("char a 1\nmf 0.1 1.5 0 0.1\ncn 0 0 0 0\n"), ParseError);
  try {
    parse_tr("char a 0\ncn 0 0 0 0\nchar b 0\ncn 0 0 x 0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Unicharset, Examples) {
  EXPECT_TRUE(extract_unicharset({}).empty());
  BoxFile bf;
  for (char c : std::string("aab")) bf.entries.push_back({std::string(1, c), {0, 0, 1, 1}});
  const std::vector<BoxFile> files{bf};
  const auto u = extract_unicharset(files);
  ASSERT_EQ(u.entries.size(), 2u);
  EXPECT_EQ(u.entries[0].glyph, "a");
  EXPECT_EQ(u.entries[0].count, 2u);
  EXPECT_EQ(u.entries[1].glyph, "b");
  EXPECT_EQ(u.entries[1].count, 1u);
  EXPECT_EQ(serialize_unicharset(u), "2\na 2\nb 1\n");
}

TEST(Unicharset, CountsEqualFlatConcatenation) {
  std::mt19937 rng(8);
  std::vector<BoxFile> files(5);
  std::string flat;
  for (auto& f : files)
    for (int i = 0; i < 30; ++i) {
      const char c = char('a' + rng() % 26);
      f.entries.push_back({std::string(1, c), {0, 0, 1, 1}});
      flat += c;
    }
  const auto u = extract_unicharset(files);
  std::size_t total = 0;
  std::string order;
  for (const auto& e : u.entries) {
    EXPECT_EQ(e.count, std::size_t(std::count(flat.begin(), flat.end(), e.glyph[0])));
    total += e.count;
    order += e.glyph;
  }
  EXPECT_EQ(total, flat.size());
  // First-appearance order.
  std::string firsts;
  for (char c : flat)
    if (firsts.find(c) == std::string::npos) firsts += c;
  EXPECT_EQ(order, firsts);
  EXPECT_EQ(parse_unicharset(serialize_unicharset(u)).entries, u.entries);
}

TEST(Unicharset, ParseErrors) {
  EXPECT_THROW(parse_unicharset("2\na 1\n"), ParseError);
  EXPECT_THROW(parse_unicharset("1\na 0\n"), ParseError);
  EXPECT_THROW(parse_unicharset("2\na 1\na 2\n"), ParseError);
}

TEST(CnTraining, EmptyInputThrows) {
  EXPECT_THROW(cn_training({}), Error);
  const std::vector<TrFeatureSet> empty_sets(2);
  EXPECT_THROW(cn_training(empty_sets), Error);
}

TEST(CnTraining, SingleSample) {
  std::vector<TrFeatureSet> trs(1);
  trs[0].records.push_back(record("a", {0.3, 0.4, 0.5, 0.6}));
  const auto m = cn_training(trs);
  ASSERT_EQ(m.classes.at("a").size(), 1u);
  const auto& p = m.classes.at("a")[0];
  EXPECT_EQ(p.mean, (CnVector{0.3, 0.4, 0.5, 0.6}));
  EXPECT_EQ(p.var, (CnVector{1e-4, 1e-4, 1e-4, 1e-4}));
  EXPECT_DOUBLE_EQ(p.weight, 1.0);
}

TEST(CnTraining, TwoSeparatedClustersRecoverTheirCentroids) {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  std::vector<TrFeatureSet> trs(1);
  CnVector sum_lo{}, sum_hi{};
  for (int i = 0; i < 10; ++i) {
    CnVector lo{0.2 + jitter(rng), 0.2 + jitter(rng), 0.2 + jitter(rng), 0.2 + jitter(rng)};
    CnVector hi{0.8 + jitter(rng), 0.8 + jitter(rng), 0.8 + jitter(rng), 0.8 + jitter(rng)};
    for (int d = 0; d < 4; ++d) sum_lo[d] += lo[d], sum_hi[d] += hi[d];
    trs[0].records.push_back(record("a", lo));
    trs[0].records.push_back(record("a", hi));
  }
  TrainConfig cfg;
  cfg.max_protos = 2;
  const auto m = cn_training(trs, cfg);
  auto protos = m.classes.at("a");
  ASSERT_EQ(protos.size(), 2u);
  std::sort(protos.begin(), protos.end(), [](const auto& a, const auto& b) { return a.mean < b.mean; });
  for (int d = 0; d < 4; ++d) {
    EXPECT_NEAR(protos[0].mean[d], sum_lo[d] / 10, 1e-6);
    EXPECT_NEAR(protos[1].mean[d], sum_hi[d] / 10, 1e-6);
  }
  EXPECT_DOUBLE_EQ(protos[0].weight, 0.5);
}

TEST(CnTraining, WeightsSumToOneAndVariancesAreFloored) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<TrFeatureSet> trs(3);
  for (auto& s : trs)
    for (int i = 0; i < 40; ++i)
      s.records.push_back(record(std::string(1, char('a' + rng() % 5)), {u(rng), u(rng), u(rng), u(rng)}));
  const auto m = cn_training(trs);
  for (const auto& [g, protos] : m.classes) {
    double w = 0;
    EXPECT_LE(protos.size(), 4u);
    for (const auto& p : protos) {
      w += p.weight;
      for (double v : p.var) EXPECT_GE(v, 1e-4);
    }
    EXPECT_NEAR(w, 1.0, 1e-9) << g;
  }
}

TEST(CnTraining, ClusterCountFollowsSampleCount) {
  std::vector<TrFeatureSet> trs(1);
  for (int i = 0; i < 5; ++i) trs[0].records.push_back(record("a", {0.1 * i, 0.5, 0.5, 0.5}));
  EXPECT_EQ(cn_training(trs).classes.at("a").size(), 2u);  // floor(5/2)
}

TEST(MfTraining, EmptyInputThrows) { EXPECT_THROW(mf_training({}), Error); }

TEST(MfTraining, ExpectedCountIsRoundedMean) {
  std::mt19937 rng(5);
  std::vector<TrFeatureSet> trs(1);
  for (int i = 0; i < 6; ++i) trs[0].records.push_back(record("k", {0.5, 0.5, 0.5, 0.5}, random_micro(rng, 7)));
  trs[0].records.push_back(record("m", {0.5, 0.5, 0.5, 0.5}, random_micro(rng, 2)));
  trs[0].records.push_back(record("m", {0.5, 0.5, 0.5, 0.5}, random_micro(rng, 5)));
  const auto m = mf_training(trs);
  EXPECT_EQ(m.expected_count.at("k"), 7);
  EXPECT_EQ(m.expected_count.at("m"), 4);  // 3.5 rounds up
  EXPECT_LE(m.classes.at("k").size(), 16u);
}

TEST(MfTraining, SingleSamplePrototypesAreItsQuantizedFeatures) {
  std::mt19937 rng(6);
  std::vector<TrFeatureSet> trs(1);
  const auto micro = random_micro(rng, 9);
  trs[0].records.push_back(record("z", {0.5, 0.5, 0.5, 0.5}, micro));
  const auto m = mf_training(trs);
  std::vector<MicroFeature> want;
  for (const auto& f : micro) want.push_back(quantize(f));
  auto got = m.classes.at("z");
  auto key = [](const MicroFeature& f) { return std::tie(f.x, f.y, f.dir, f.len); };
  auto less = [&](const MicroFeature& a, const MicroFeature& b) { return key(a) < key(b); };
  std::sort(got.begin(), got.end(), less);
  std::sort(want.begin(), want.end(), less);
  want.erase(std::unique(want.begin(), want.end()), want.end());
  EXPECT_EQ(got, want);
  for (const auto& p : got) {
    EXPECT_DOUBLE_EQ(p.x * 64, std::round(p.x * 64));
    EXPECT_DOUBLE_EQ(p.len * 64, std::round(p.len * 64));
  }
}

TEST(MfTraining, InvariantUnderInputOrder) {
  std::mt19937 rng(14);
  std::vector<TrFeatureSet> trs(4);
  for (auto& s : trs)
    for (int i = 0; i < 15; ++i)
      s.records.push_back(record(std::string(1, char('a' + rng() % 3)), {0.5, 0.5, 0.5, 0.5},
                                 random_micro(rng, 3 + int(rng() % 10))));
  const auto base = mf_training(trs);
  const auto base_cn = cn_training(trs);
  for (int k = 0; k < 5; ++k) {
    auto shuffled = trs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& s : shuffled) std::shuffle(s.records.begin(), s.records.end(), rng);
    EXPECT_EQ(mf_training(shuffled), base);
    EXPECT_EQ(cn_training(shuffled), base_cn);
  }
}

TEST(ModelFormats, NormprotoRoundTripIsExact) {
  std::mt19937 rng(15);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<TrFeatureSet> trs(1);
  for (int i = 0; i < 60; ++i)
    trs[0].records.push_back(record(std::string(1, char('a' + i % 4)), {u(rng), u(rng), u(rng), u(rng)}));
  const auto m = cn_training(trs);
  EXPECT_EQ(parse_normproto(serialize_normproto(m)), m);
}

TEST(ModelFormats, MicroModelRoundTrip) {
  std::mt19937 rng(16);
  std::vector<TrFeatureSet> trs(1);
  for (int i = 0; i < 40; ++i)
    trs[0].records.push_back(record(std::string(1, char('a' + i % 4)), {0.5, 0.5, 0.5, 0.5}, random_micro(rng, 6)));
  const auto m = mf_training(trs);
  EXPECT_EQ(parse_micro_model(serialize_inttemp(m), serialize_pffmtable(m)), m);
}

TEST(ModelFormats, MicroModelClassSetsMustAgree) {
  EXPECT_THROW(parse_micro_model("class a 1\nmfp 0.5 0.5 0 0.5\n", "a 1\nb 2\n"), Error);
  EXPECT_THROW(parse_micro_model("class a 1\nmfp 0.5 0.5 0 0.5\n", ""), Error);
  EXPECT_THROW(parse_micro_model("class a 1\nmfp 0.5 0.5 0 0.5\n", "a 0\n"), Error);
}

TEST(ModelFormats, NormprotoErrors) {
  EXPECT_THROW(parse_normproto(""), ParseError);
  EXPECT_THROW(parse_normproto("4\nclass a 1\nproto 1 0 0 0 0 0 0 0\n"), ParseError);
  EXPECT_THROW(parse_normproto("4\nclass a 1\nproto 1 0 0 0 0 0 0 0 -1\n"), ParseError);
}

TEST(Microfeat, LogNamesEveryClass) {
  std::mt19937 rng(17);
  std::vector<TrFeatureSet> trs(1);
  for (char c : std::string("abc")) trs[0].records.push_back(record(std::string(1, c), {0.5, 0.5, 0.5, 0.5}, random_micro(rng, 4)));
  const auto log = microfeat_log(trs);
  for (const char* c : {"class a:", "class b:", "class c:"}) EXPECT_NE(log.find(c), std::string::npos);
}
