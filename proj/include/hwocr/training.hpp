#pragma once

// Training: labeled pages -> .tr feature records -> unicharset, normalization
// prototypes (normproto) and micro-feature templates (inttemp + pffmtable).

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hwocr/boxfile.hpp"
#include "hwocr/cluster.hpp"
#include "hwocr/error.hpp"
#include "hwocr/features.hpp"
#include "hwocr/image.hpp"
#include "hwocr/imaging.hpp"
#include "hwocr/textio.hpp"

namespace hwocr {

struct TrFeatureSet {
  std::string page_id;
  std::vector<TrCharFeatures> records;
  friend bool operator==(const TrFeatureSet&, const TrFeatureSet&) = default;
};

struct EmitTrResult {
  TrFeatureSet features;
  std::vector<std::string> warnings;
  std::size_t skipped = 0;
};

/// Extracts one labeled feature record per box. Boxes without ink are skipped
/// with a warning.
inline EmitTrResult emit_tr(const PageImage& page, const BoxFile& boxes,
                            const FeatureConfig& cfg = {}) {
  EmitTrResult out;
  out.features.page_id = page.id();
  const BinaryImage bin = binarize(page);
  for (std::size_t i = 0; i < boxes.entries.size(); ++i) {
    const auto& e = boxes.entries[i];
    const BinaryImage crop = bin.crop(e.bbox);
    if (crop.empty() || crop.ink_count() == 0) {
      ++out.skipped;
      std::ostringstream msg;
      msg << "box " << i << " '" << e.glyph << "' " << e.bbox << " contains no ink; skipped";
      out.warnings.push_back(msg.str());
      continue;
    }
    TrCharFeatures rec = extract_features(crop, cfg);
    rec.glyph = e.glyph;
    out.features.records.push_back(std::move(rec));
  }
  return out;
}

inline std::string serialize_tr(const TrFeatureSet& set) {
  std::string out;
  for (const auto& r : set.records) {
    out += "char " + r.glyph + " " + std::to_string(r.micro.size()) + "\n";
    for (const auto& m : r.micro)
      out += "mf " + textio::fixed6(m.x) + " " + textio::fixed6(m.y) + " " +
             std::to_string(m.dir) + " " + textio::fixed6(m.len) + "\n";
    out += "cn";
    for (double v : r.cn) out += " " + textio::fixed6(v);
    out += "\n";
  }
  return out;
}

inline TrFeatureSet parse_tr(std::string_view text, std::string page_id = {}) {
  TrFeatureSet set;
  set.page_id = std::move(page_id);
  textio::LineReader in(text);
  std::string_view line;
  auto unit = [&](double v, std::size_t ln) {
    if (v < 0 || v > 1) throw ParseError(ln, "value outside [0,1]");
    return v;
  };
  while (in.next_nonblank(line)) {
    auto f = textio::split(line);
    if (f[0] != "char") throw ParseError(in.number(), "expected 'char' record");
    textio::expect_fields(f, 3, in.number(), "char");
    TrCharFeatures rec;
    rec.glyph = std::string(f[1]);
    const auto count = textio::to_int(f[2], in.number());
    if (count < 0) throw ParseError(in.number(), "negative micro-feature count");
    for (long long i = 0; i < count; ++i) {
      if (!in.next_nonblank(line)) throw ParseError(in.number(), "truncated record");
      f = textio::split(line);
      if (f.empty() || f[0] != "mf") throw ParseError(in.number(), "expected 'mf' line");
      textio::expect_fields(f, 5, in.number(), "mf");
      MicroFeature m;
      m.x = unit(textio::to_double(f[1], in.number()), in.number());
      m.y = unit(textio::to_double(f[2], in.number()), in.number());
      const auto dir = textio::to_int(f[3], in.number());
      if (dir < 0 || dir >= kDirectionSectors) throw ParseError(in.number(), "direction outside 0-7");
      m.dir = int(dir);
      m.len = unit(textio::to_double(f[4], in.number()), in.number());
      rec.micro.push_back(m);
    }
    if (!in.next_nonblank(line)) throw ParseError(in.number(), "missing 'cn' line");
    f = textio::split(line);
    if (f.empty() || f[0] != "cn") throw ParseError(in.number(), "expected 'cn' line");
    textio::expect_fields(f, 5, in.number(), "cn");
    for (int i = 0; i < 4; ++i) rec.cn[i] = unit(textio::to_double(f[i + 1], in.number()), in.number());
    set.records.push_back(std::move(rec));
  }
  return set;
}

// ---------------------------------------------------------------------------
// unicharset

struct UnicharsetEntry {
  std::string glyph;
  std::size_t count = 0;
  friend bool operator==(const UnicharsetEntry&, const UnicharsetEntry&) = default;
};

struct Unicharset {
  std::vector<UnicharsetEntry> entries;  // first-appearance order

  bool contains(std::string_view glyph) const { return count(glyph) > 0; }
  std::size_t count(std::string_view glyph) const {
    for (const auto& e : entries)
      if (e.glyph == glyph) return e.count;
    return 0;
  }
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.count;
    return n;
  }
  bool empty() const { return entries.empty(); }
  friend bool operator==(const Unicharset&, const Unicharset&) = default;
};

inline Unicharset extract_unicharset(std::span<const BoxFile> boxfiles) {
  Unicharset u;
  std::map<std::string, std::size_t> index;
  for (const auto& bf : boxfiles)
    for (const auto& e : bf.entries) {
      auto [it, fresh] = index.try_emplace(e.glyph, u.entries.size());
      if (fresh) u.entries.push_back({e.glyph, 0});
      ++u.entries[it->second].count;
    }
  return u;
}

inline std::string serialize_unicharset(const Unicharset& u) {
  std::string out = std::to_string(u.entries.size()) + "\n";
  for (const auto& e : u.entries) out += e.glyph + " " + std::to_string(e.count) + "\n";
  return out;
}

inline Unicharset parse_unicharset(std::string_view text) {
  textio::LineReader in(text);
  std::string_view line;
  if (!in.next_nonblank(line)) throw ParseError(1, "missing entry count");
  auto f = textio::split(line);
  textio::expect_fields(f, 1, in.number(), "entry count");
  const auto n = textio::to_int(f[0], in.number());
  if (n < 0) throw ParseError(in.number(), "negative entry count");
  Unicharset u;
  for (long long i = 0; i < n; ++i) {
    if (!in.next_nonblank(line)) throw ParseError(in.number() + 1, "missing unicharset entry");
    f = textio::split(line);
    textio::expect_fields(f, 2, in.number(), "unicharset entry");
    const auto c = textio::to_int(f[1], in.number());
    if (c < 1) throw ParseError(in.number(), "count must be at least 1");
    if (u.contains(f[0])) throw ParseError(in.number(), "duplicate glyph '" + std::string(f[0]) + "'");
    u.entries.push_back({std::string(f[0]), std::size_t(c)});
  }
  if (in.next_nonblank(line)) throw ParseError(in.number(), "more entries than declared");
  return u;
}

// ---------------------------------------------------------------------------
// Prototype clustering

struct TrainConfig {
  std::size_t max_protos = 4;       // normalization prototypes per class
  double variance_floor = 1e-4;
  std::size_t max_mf_protos = 16;   // micro-feature prototypes per class
  double direction_weight = 0.3;    // radius of the direction circle in mf clustering
  int max_iterations = 100;
};

struct Prototype {
  CnVector mean{};
  CnVector var{};
  double weight = 0;
  friend bool operator==(const Prototype&, const Prototype&) = default;
};

/// The normproto model: per class, weighted diagonal-Gaussian prototypes of
/// the normalization vector.
struct PrototypeModel {
  int dim = 4;
  std::map<std::string, std::vector<Prototype>> classes;
  friend bool operator==(const PrototypeModel&, const PrototypeModel&) = default;
};

/// The inttemp + pffmtable model: per class, quantized micro-feature
/// prototypes and the expected micro-feature count of one sample.
struct MicroProtoModel {
  std::map<std::string, std::vector<MicroFeature>> classes;
  std::map<std::string, int> expected_count;
  friend bool operator==(const MicroProtoModel&, const MicroProtoModel&) = default;
};

namespace detail {

inline std::map<std::string, std::vector<const TrCharFeatures*>> by_class(
    std::span<const TrFeatureSet> trs) {
  std::map<std::string, std::vector<const TrCharFeatures*>> out;
  for (const auto& set : trs)
    for (const auto& r : set.records) out[r.glyph].push_back(&r);
  return out;
}

using MfPoint = FeaturePoint<5>;

inline MfPoint embed(const MicroFeature& m, double dir_weight) {
  const double a = m.dir * 2.0 * std::numbers::pi / kDirectionSectors;
  return {m.x, m.y, m.len, dir_weight * std::cos(a), dir_weight * std::sin(a)};
}

inline MicroFeature unembed(const MfPoint& p) {
  return {p[0], p[1], direction_sector(p[3], p[4]), p[2]};
}

struct MfClassClusters {
  std::size_t samples = 0;
  std::size_t pooled = 0;
  std::vector<Cluster<5>> clusters;
};

inline std::map<std::string, MfClassClusters> cluster_micro(std::span<const TrFeatureSet> trs,
                                                            const TrainConfig& cfg) {
  std::map<std::string, MfClassClusters> out;
  for (const auto& [glyph, recs] : by_class(trs)) {
    std::vector<MfPoint> pool;
    for (const auto* r : recs)
      for (const auto& m : r->micro) pool.push_back(embed(m, cfg.direction_weight));
    auto& cc = out[glyph];
    cc.samples = recs.size();
    cc.pooled = pool.size();
    cc.clusters = kmeans<5>(std::move(pool), cfg.max_mf_protos, cfg.max_iterations);
  }
  return out;
}

inline std::size_t total_records(std::span<const TrFeatureSet> trs) {
  std::size_t n = 0;
  for (const auto& s : trs) n += s.records.size();
  return n;
}

}  // namespace detail

/// Clusters normalization vectors per class with k = min(max_protos,
/// samples/2), at least 1. Throws when there are no records at all.
inline PrototypeModel cn_training(std::span<const TrFeatureSet> trs, const TrainConfig& cfg = {}) {
  if (detail::total_records(trs) == 0) throw Error("cntraining: no training samples");
  PrototypeModel model;
  for (const auto& [glyph, recs] : detail::by_class(trs)) {
    std::vector<FeaturePoint<4>> pts;
    for (const auto* r : recs) pts.push_back(r->cn);
    const std::size_t k = std::max<std::size_t>(1, std::min(cfg.max_protos, recs.size() / 2));
    auto& protos = model.classes[glyph];
    for (const auto& c : kmeans<4>(pts, k, cfg.max_iterations)) {
      Prototype p;
      p.mean = c.center;
      for (int d = 0; d < 4; ++d) {
        double s = 0;
        for (const auto& m : c.members) s += (m[d] - c.center[d]) * (m[d] - c.center[d]);
        p.var[d] = std::max(cfg.variance_floor, s / double(c.members.size()));
      }
      p.weight = double(c.members.size()) / double(recs.size());
      protos.push_back(p);
    }
  }
  return model;
}

/// Pools micro-features per class and clusters them into at most
/// max_mf_protos quantized prototypes. Throws when there are no records.
inline MicroProtoModel mf_training(std::span<const TrFeatureSet> trs, const TrainConfig& cfg = {}) {
  if (detail::total_records(trs) == 0) throw Error("mftraining: no training samples");
  MicroProtoModel model;
  const auto clustered = detail::cluster_micro(trs, cfg);
  for (const auto& [glyph, cc] : clustered) {
    auto& protos = model.classes[glyph];
    for (const auto& c : cc.clusters) {
      const MicroFeature q = quantize(detail::unembed(c.center));
      if (std::find(protos.begin(), protos.end(), q) == protos.end()) protos.push_back(q);
    }
    const double mean = double(cc.pooled) / double(cc.samples);
    model.expected_count[glyph] = std::max(1, int(std::lround(mean)));
  }
  return model;
}

/// Human-readable clustering report (the Microfeat file). Not read back.
inline std::string microfeat_log(std::span<const TrFeatureSet> trs, const TrainConfig& cfg = {}) {
  std::ostringstream out;
  out << "# micro-feature clustering: " << trs.size() << " feature files, max "
      << cfg.max_mf_protos << " prototypes per class\n";
  for (const auto& [glyph, cc] : detail::cluster_micro(trs, cfg)) {
    out << "class " << glyph << ": " << cc.samples << " samples, " << cc.pooled
        << " micro-features, " << cc.clusters.size() << " clusters\n";
    for (const auto& c : cc.clusters) {
      const auto q = quantize(detail::unembed(c.center));
      out << "  size " << c.members.size() << " -> x " << textio::fixed6(q.x) << " y "
          << textio::fixed6(q.y) << " dir " << q.dir << " len " << textio::fixed6(q.len) << "\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Model file formats

inline std::string serialize_normproto(const PrototypeModel& m) {
  std::string out = std::to_string(m.dim) + "\n";
  for (const auto& [glyph, protos] : m.classes) {
    out += "class " + glyph + " " + std::to_string(protos.size()) + "\n";
    for (const auto& p : protos) {
      out += "proto " + textio::exact(p.weight);
      for (double v : p.mean) out += " " + textio::exact(v);
      for (double v : p.var) out += " " + textio::exact(v);
      out += "\n";
    }
  }
  return out;
}

inline PrototypeModel parse_normproto(std::string_view text) {
  textio::LineReader in(text);
  std::string_view line;
  if (!in.next_nonblank(line)) throw ParseError(1, "missing dimension line");
  auto f = textio::split(line);
  textio::expect_fields(f, 1, in.number(), "dimension");
  PrototypeModel m;
  m.dim = int(textio::to_int(f[0], in.number()));
  if (m.dim != 4) throw ParseError(in.number(), "unsupported dimension " + std::to_string(m.dim));
  while (in.next_nonblank(line)) {
    f = textio::split(line);
    if (f[0] != "class") throw ParseError(in.number(), "expected 'class' header");
    textio::expect_fields(f, 3, in.number(), "class");
    const std::string glyph(f[1]);
    if (m.classes.count(glyph)) throw ParseError(in.number(), "duplicate class '" + glyph + "'");
    const auto k = textio::to_int(f[2], in.number());
    if (k < 1) throw ParseError(in.number(), "class needs at least one prototype");
    auto& protos = m.classes[glyph];
    for (long long i = 0; i < k; ++i) {
      if (!in.next_nonblank(line)) throw ParseError(in.number() + 1, "truncated class");
      f = textio::split(line);
      if (f[0] != "proto") throw ParseError(in.number(), "expected 'proto' line");
      textio::expect_fields(f, 2 + 2 * 4, in.number(), "proto");
      Prototype p;
      p.weight = textio::to_double(f[1], in.number());
      for (int d = 0; d < 4; ++d) {
        p.mean[d] = textio::to_double(f[2 + d], in.number());
        p.var[d] = textio::to_double(f[6 + d], in.number());
        if (!(p.var[d] > 0)) throw ParseError(in.number(), "variance must be positive");
      }
      protos.push_back(p);
    }
  }
  return m;
}

inline std::string serialize_inttemp(const MicroProtoModel& m) {
  std::string out;
  for (const auto& [glyph, protos] : m.classes) {
    out += "class " + glyph + " " + std::to_string(protos.size()) + "\n";
    for (const auto& p : protos)
      out += "mfp " + textio::fixed6(p.x) + " " + textio::fixed6(p.y) + " " +
             std::to_string(p.dir) + " " + textio::fixed6(p.len) + "\n";
  }
  return out;
}

inline std::string serialize_pffmtable(const MicroProtoModel& m) {
  std::string out;
  for (const auto& [glyph, n] : m.expected_count) out += glyph + " " + std::to_string(n) + "\n";
  return out;
}

inline std::map<std::string, std::vector<MicroFeature>> parse_inttemp(std::string_view text) {
  std::map<std::string, std::vector<MicroFeature>> classes;
  textio::LineReader in(text);
  std::string_view line;
  while (in.next_nonblank(line)) {
    auto f = textio::split(line);
    if (f[0] != "class") throw ParseError(in.number(), "expected 'class' header");
    textio::expect_fields(f, 3, in.number(), "class");
    const std::string glyph(f[1]);
    if (classes.count(glyph)) throw ParseError(in.number(), "duplicate class '" + glyph + "'");
    const auto p = textio::to_int(f[2], in.number());
    if (p < 0) throw ParseError(in.number(), "negative prototype count");
    auto& protos = classes[glyph];
    for (long long i = 0; i < p; ++i) {
      if (!in.next_nonblank(line)) throw ParseError(in.number() + 1, "truncated class");
      f = textio::split(line);
      if (f[0] != "mfp") throw ParseError(in.number(), "expected 'mfp' line");
      textio::expect_fields(f, 5, in.number(), "mfp");
      MicroFeature mf{textio::to_double(f[1], in.number()), textio::to_double(f[2], in.number()),
                      int(textio::to_int(f[3], in.number())), textio::to_double(f[4], in.number())};
      if (mf.dir < 0 || mf.dir >= kDirectionSectors)
        throw ParseError(in.number(), "direction outside 0-7");
      protos.push_back(mf);
    }
  }
  return classes;
}

inline std::map<std::string, int> parse_pffmtable(std::string_view text) {
  std::map<std::string, int> counts;
  textio::LineReader in(text);
  std::string_view line;
  while (in.next_nonblank(line)) {
    auto f = textio::split(line);
    textio::expect_fields(f, 2, in.number(), "pffmtable entry");
    const auto n = textio::to_int(f[1], in.number());
    if (n < 1) throw ParseError(in.number(), "expected count must be at least 1");
    if (!counts.emplace(std::string(f[0]), int(n)).second)
      throw ParseError(in.number(), "duplicate class '" + std::string(f[0]) + "'");
  }
  return counts;
}

/// Joins the two halves; throws unless their class sets agree.
inline MicroProtoModel make_micro_model(std::map<std::string, std::vector<MicroFeature>> classes,
                                        std::map<std::string, int> counts) {
  for (const auto& [glyph, _] : classes)
    if (!counts.count(glyph)) throw Error("class '" + glyph + "' has templates but no expected count");
  for (const auto& [glyph, _] : counts)
    if (!classes.count(glyph)) throw Error("class '" + glyph + "' has an expected count but no templates");
  return {std::move(classes), std::move(counts)};
}

inline MicroProtoModel parse_micro_model(std::string_view inttemp, std::string_view pffmtable) {
  return make_micro_model(parse_inttemp(inttemp), parse_pffmtable(pffmtable));
}

}  // namespace hwocr
