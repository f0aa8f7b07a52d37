#pragma once

// Scoring against ground truth with the Ct / Cm / Cs / rejected taxonomy,
// plus the sample-distribution and performance tables.

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hwocr/boxfile.hpp"
#include "hwocr/error.hpp"
#include "hwocr/recognizer.hpp"
#include "hwocr/textio.hpp"

namespace hwocr {

struct GroundTruth {
  BoxFile chars;
  std::vector<std::size_t> word_starts;  // index of each word's first char; empty = unknown
};

/// Sidecar format: one 0-based character index per line, the first char of
/// each word, strictly increasing and below `char_count`.
inline std::vector<std::size_t> parse_word_starts(std::string_view text, std::size_t char_count) {
  std::vector<std::size_t> out;
  textio::LineReader in(text);
  std::string_view line;
  while (in.next_nonblank(line)) {
    const auto f = textio::split(line);
    textio::expect_fields(f, 1, in.number(), "word index");
    const auto v = textio::to_int(f[0], in.number());
    if (v < 0 || std::size_t(v) >= char_count)
      throw ParseError(in.number(), "word index out of range");
    if (!out.empty() && std::size_t(v) <= out.back())
      throw ParseError(in.number(), "word indices must increase");
    out.push_back(std::size_t(v));
  }
  return out;
}

enum class OpKind { match, substitute, merge, split, reject, spurious };

inline const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::match: return "match";
    case OpKind::substitute: return "substitute";
    case OpKind::merge: return "merge";
    case OpKind::split: return "split";
    case OpKind::reject: return "reject";
    case OpKind::spurious: return "spurious";
  }
  return "?";
}

/// One alignment step. `gt` and `out` index the ground-truth chars and the
/// output chars (reading order, rejected ones included).
struct AlignOp {
  OpKind kind = OpKind::match;
  std::vector<std::size_t> gt;
  std::vector<std::size_t> out;
  friend bool operator==(const AlignOp&, const AlignOp&) = default;
};

struct Alignment {
  std::vector<AlignOp> ops;
  std::size_t gt_size = 0;
};

namespace detail {

struct FlatChar {
  BBox bbox;
  std::string glyph;
  bool rejected = false;
};

inline std::vector<FlatChar> flatten(const RecognitionResult& r) {
  std::vector<FlatChar> out;
  for (const auto& l : r.lines)
    for (const auto& w : l.words)
      for (const auto& c : w.chars) out.push_back({c.bbox, c.best.glyph, c.rejected});
  return out;
}

inline std::optional<std::size_t> best_iou(const BBox& b, const auto& others, auto&& box_of) {
  std::optional<std::size_t> best;
  double best_v = 0;
  for (std::size_t i = 0; i < others.size(); ++i) {
    const double v = iou(b, box_of(others[i]));
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

/// Box-guided alignment. Every output char links to the gt char it overlaps
/// most and vice versa; each connected group of links becomes one or more
/// ops: 1:1 match/substitute, 1 output over k gt chars merge(k), k outputs
/// over 1 gt char split(k). Groups whose outputs are all rejected, and gt
/// chars nothing overlaps, become reject ops; outputs that overlap no gt
/// char are spurious.
inline Alignment align(const GroundTruth& gt, const RecognitionResult& result) {
  const auto& g = gt.chars.entries;
  const auto o = detail::flatten(result);
  const std::size_t n = g.size(), m = o.size();
  detail::UnionFind uf(n + m);
  for (std::size_t j = 0; j < m; ++j)
    if (auto i = detail::best_iou(o[j].bbox, g, [](const BoxEntry& e) { return e.bbox; }))
      uf.join(int(*i), int(n + j));
  for (std::size_t i = 0; i < n; ++i)
    if (auto j = detail::best_iou(g[i].bbox, o, [](const detail::FlatChar& c) { return c.bbox; }))
      uf.join(int(i), int(n + *j));

  std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[std::size_t(uf.find(int(i)))].first.push_back(i);
  for (std::size_t j = 0; j < m; ++j) groups[std::size_t(uf.find(int(n + j)))].second.push_back(j);

  Alignment a;
  a.gt_size = n;
  auto by_left_g = [&](std::size_t x, std::size_t y) {
    return g[x].bbox.left != g[y].bbox.left ? g[x].bbox.left < g[y].bbox.left : x < y;
  };
  auto by_left_o = [&](std::size_t x, std::size_t y) {
    return o[x].bbox.left != o[y].bbox.left ? o[x].bbox.left < o[y].bbox.left : x < y;
  };
  for (auto& [_, grp] : groups) {
    auto& [gs, os] = grp;
    if (gs.empty()) {
      for (auto j : os) a.ops.push_back({OpKind::spurious, {}, {j}});
      continue;
    }
    std::vector<std::size_t> live;
    for (auto j : os)
      if (!o[j].rejected) live.push_back(j);
    if (live.empty()) {
      for (auto i : gs) a.ops.push_back({OpKind::reject, {i}, {}});
      if (!os.empty()) a.ops.back().out = os;
      continue;
    }
    std::sort(gs.begin(), gs.end(), by_left_g);
    std::sort(live.begin(), live.end(), by_left_o);
    // Pair from the left; whatever is left over forms one merge or split.
    const std::size_t pairs = std::min(gs.size(), live.size()) - 1;
    for (std::size_t k = 0; k < pairs; ++k) {
      const bool same = o[live[k]].glyph == g[gs[k]].glyph;
      a.ops.push_back({same ? OpKind::match : OpKind::substitute, {gs[k]}, {live[k]}});
    }
    std::vector<std::size_t> rg(gs.begin() + long(pairs), gs.end());
    std::vector<std::size_t> ro(live.begin() + long(pairs), live.end());
    if (rg.size() == 1 && ro.size() == 1)
      a.ops.push_back({o[ro[0]].glyph == g[rg[0]].glyph ? OpKind::match : OpKind::substitute, rg, ro});
    else if (rg.size() > 1)
      a.ops.push_back({OpKind::merge, rg, ro});
    else
      a.ops.push_back({OpKind::split, rg, ro});
  }
  std::sort(a.ops.begin(), a.ops.end(), [](const AlignOp& x, const AlignOp& y) {
    const auto kx = x.gt.empty() ? SIZE_MAX : *std::min_element(x.gt.begin(), x.gt.end());
    const auto ky = y.gt.empty() ? SIZE_MAX : *std::min_element(y.gt.begin(), y.gt.end());
    if (kx != ky) return kx < ky;
    return x.out < y.out;
  });
  return a;
}

/// Fallback when the prediction is plain text: Levenshtein alignment of the
/// gt glyph sequence against the predicted characters, whitespace ignored.
/// Substitutions score as substitute, deleted gt chars as reject and
/// inserted chars as spurious.
inline Alignment align_text(const GroundTruth& gt, std::string_view text) {
  std::vector<std::string> g, o;
  for (const auto& e : gt.chars.entries) g.push_back(e.glyph);
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t len = std::max<std::size_t>(1, utf8_sequence_length(text.substr(i)));
    const std::string ch(text.substr(i, len));
    if (ch != " " && ch != "\t" && ch != "\n" && ch != "\r") o.push_back(ch);
    i += len;
  }
  const std::size_t n = g.size(), m = o.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (g[i - 1] != o[j - 1]), d[i - 1][j] + 1, d[i][j - 1] + 1});
  Alignment a;
  a.gt_size = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (g[i - 1] != o[j - 1])) {
      a.ops.push_back({g[i - 1] == o[j - 1] ? OpKind::match : OpKind::substitute, {i - 1}, {j - 1}});
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      a.ops.push_back({OpKind::reject, {i - 1}, {}});
      --i;
    } else {
      a.ops.push_back({OpKind::spurious, {}, {j - 1}});
      --j;
    }
  }
  std::reverse(a.ops.begin(), a.ops.end());
  return a;
}

// ---------------------------------------------------------------------------
// Metrics

struct EvalCounts {
  std::size_t ct = 0;
  std::size_t cm = 0;
  std::size_t cs = 0;
  std::size_t rejected = 0;
  std::size_t spurious = 0;  // output chars with no gt counterpart; not scored

  std::size_t scored() const { return ct + cm + cs; }
  std::size_t total() const { return ct + cm + cs + rejected; }

  /// 100 * Ct / (Ct + Cm + Cs); empty when nothing was scored.
  std::optional<double> accuracy() const {
    if (scored() == 0) return std::nullopt;
    return 100.0 * double(ct) / double(scored());
  }
  std::optional<double> misclassification() const {
    if (scored() == 0) return std::nullopt;
    return 100.0 * double(cm) / double(scored());
  }
  std::optional<double> segmentation_failure() const {
    if (scored() == 0) return std::nullopt;
    return 100.0 * double(cs) / double(scored());
  }
  /// Share of all gt chars that were rejected.
  std::optional<double> rejection() const {
    if (total() == 0) return std::nullopt;
    return 100.0 * double(rejected) / double(total());
  }

  EvalCounts& operator+=(const EvalCounts& o) {
    ct += o.ct, cm += o.cm, cs += o.cs, rejected += o.rejected, spurious += o.spurious;
    return *this;
  }
  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

struct CharTally {
  std::size_t success = 0;
  std::size_t failure = 0;
  std::size_t rejected = 0;
  friend bool operator==(const CharTally&, const CharTally&) = default;
};

struct EvalReport {
  EvalCounts counts;
  std::map<std::string, CharTally> per_char;  // by gt glyph

  EvalReport& operator+=(const EvalReport& o) {
    counts += o.counts;
    for (const auto& [k, v] : o.per_char) {
      auto& t = per_char[k];
      t.success += v.success, t.failure += v.failure, t.rejected += v.rejected;
    }
    return *this;
  }
};

/// Counts from an alignment. A split charges one char to Cm, a merge(k)
/// charges k to Cs. `gt` supplies glyphs for the per-char tally.
inline EvalReport compute_metrics(const Alignment& a, const BoxFile* gt = nullptr) {
  EvalReport r;
  auto tally = [&](std::size_t i) -> CharTally* {
    if (!gt || i >= gt->entries.size()) return nullptr;
    return &r.per_char[gt->entries[i].glyph];
  };
  for (const auto& op : a.ops) {
    switch (op.kind) {
      case OpKind::match:
        ++r.counts.ct;
        for (auto i : op.gt)
          if (auto* t = tally(i)) ++t->success;
        break;
      case OpKind::substitute:
      case OpKind::split:
        ++r.counts.cm;
        for (auto i : op.gt)
          if (auto* t = tally(i)) ++t->failure;
        break;
      case OpKind::merge:
        r.counts.cs += op.gt.size();
        for (auto i : op.gt)
          if (auto* t = tally(i)) ++t->failure;
        break;
      case OpKind::reject:
        r.counts.rejected += op.gt.size();
        for (auto i : op.gt)
          if (auto* t = tally(i)) ++t->rejected;
        break;
      case OpKind::spurious:
        r.counts.spurious += op.out.size();
        break;
    }
  }
  return r;
}

inline std::map<std::string, std::size_t> char_frequency(std::span<const BoxFile> boxfiles) {
  std::map<std::string, std::size_t> h;
  for (const auto& bf : boxfiles)
    for (const auto& e : bf.entries) ++h[e.glyph];
  return h;
}

inline std::string render_frequency(const std::map<std::string, std::size_t>& h) {
  std::string out;
  for (const auto& [g, n] : h) out += g + " " + std::to_string(n) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Dataset manifest

inline constexpr std::string_view kIsolated = "Dataset-1";
inline constexpr std::string_view kFreeFlow = "Dataset-2";

struct ManifestPage {
  std::string image;
  std::string box;
  std::string words;  // optional word-boundary sidecar
  std::string dataset{kIsolated};
};

struct SplitCounts {
  std::size_t isolated_chars = 0;
  std::size_t free_flow_chars = 0;
  std::size_t free_flow_words = 0;
  std::vector<ManifestPage> pages;

  std::size_t total_chars() const { return isolated_chars + free_flow_chars; }
};

struct ManifestUser {
  std::string name;
  std::string lang;
  SplitCounts train;
  SplitCounts test;
};

struct DatasetManifest {
  std::vector<ManifestUser> users;
};

namespace detail {

inline SplitCounts split_from_json(const nlohmann::json& j) {
  SplitCounts s;
  s.isolated_chars = j.value("isolated_chars", std::size_t{0});
  s.free_flow_chars = j.value("free_flow_chars", std::size_t{0});
  s.free_flow_words = j.value("free_flow_words", std::size_t{0});
  for (const auto& p : j.value("pages", nlohmann::json::array())) {
    ManifestPage mp;
    mp.image = p.at("image").get<std::string>();
    mp.box = p.at("box").get<std::string>();
    mp.words = p.value("words", std::string{});
    mp.dataset = p.value("dataset", std::string(kIsolated));
    if (mp.dataset != kIsolated && mp.dataset != kFreeFlow)
      throw Error("unknown dataset '" + mp.dataset + "'");
    s.pages.push_back(std::move(mp));
  }
  return s;
}

inline nlohmann::json split_to_json(const SplitCounts& s) {
  nlohmann::json pages = nlohmann::json::array();
  for (const auto& p : s.pages) {
    nlohmann::json jp = {{"image", p.image}, {"box", p.box}, {"dataset", p.dataset}};
    if (!p.words.empty()) jp["words"] = p.words;
    pages.push_back(jp);
  }
  return {{"isolated_chars", s.isolated_chars},
          {"free_flow_chars", s.free_flow_chars},
          {"free_flow_words", s.free_flow_words},
          {"pages", pages}};
}

}  // namespace detail

inline DatasetManifest parse_manifest(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    DatasetManifest m;
    for (const auto& ju : j.at("users")) {
      ManifestUser u;
      u.name = ju.at("name").get<std::string>();
      u.lang = ju.value("lang", std::string{});
      u.train = detail::split_from_json(ju.value("train", nlohmann::json::object()));
      u.test = detail::split_from_json(ju.value("test", nlohmann::json::object()));
      m.users.push_back(std::move(u));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
}

inline std::string serialize_manifest(const DatasetManifest& m) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : m.users)
    users.push_back({{"name", u.name},
                     {"lang", u.lang},
                     {"train", detail::split_to_json(u.train)},
                     {"test", detail::split_to_json(u.test)}});
  return nlohmann::json{{"users", users}}.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Text and JSON reports

namespace detail {

inline std::string pad(std::string s, std::size_t w, bool right = true) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

inline std::string pct(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

}  // namespace detail

/// Sample-distribution table: one train row and one test row per user.
inline std::string render_manifest(const DatasetManifest& m) {
  using detail::pad;
  std::string out;
  out += pad("", 26, false) + pad("Isolated", 10) + pad("Free-flow", 11) + pad("Words", 7) +
         pad("Total", 8) + "\n";
  auto row = [&](const std::string& label, const SplitCounts& s) {
    out += pad(label, 26, false) + pad(std::to_string(s.isolated_chars), 10) +
           pad(std::to_string(s.free_flow_chars), 11) + pad(std::to_string(s.free_flow_words), 7) +
           pad(std::to_string(s.total_chars()), 8) + "\n";
  };
  for (const auto& u : m.users) {
    row("Train set for " + u.name, u.train);
    row("Test set for " + u.name, u.test);
  }
  return out;
}

/// Per-user results keyed by dataset name.
struct UserReport {
  std::string name;
  std::map<std::string, EvalReport> datasets;
};

/// Columns that render_performance shows for `u`: each dataset present,
/// then Overall when there is more than one.
inline std::vector<std::pair<std::string, EvalCounts>> report_columns(const UserReport& u) {
  std::vector<std::pair<std::string, EvalCounts>> cols;
  EvalCounts overall;
  for (const auto& [name, r] : u.datasets) {
    cols.emplace_back(name, r.counts);
    overall += r.counts;
  }
  if (cols.size() > 1) cols.emplace_back("Overall", overall);
  return cols;
}

/// Performance table per user: success, misclassification and segmentation
/// failure as shares of the scored chars; rejection as a share of all gt chars.
inline std::string render_performance(std::span<const UserReport> users) {
  using detail::pad;
  std::string out;
  for (const auto& u : users) {
    const auto cols = report_columns(u);
    out += u.name + "\n";
    out += pad("", 26, false);
    for (const auto& [name, _] : cols) out += pad(name, 12);
    out += "\n";
    auto row = [&](const std::string& label, auto metric) {
      out += pad(label, 26, false);
      for (const auto& [_, c] : cols) out += pad(detail::pct(metric(c)), 12);
      out += "\n";
    };
    row("Successful Recognition", [](const EvalCounts& c) { return c.accuracy(); });
    row("Misclassification", [](const EvalCounts& c) { return c.misclassification(); });
    row("Segmentation Failure", [](const EvalCounts& c) { return c.segmentation_failure(); });
    row("Rejection", [](const EvalCounts& c) { return c.rejection(); });
    out += "\n";
  }
  out += "Rejection is a percentage of all ground-truth characters; the other rows "
         "exclude rejected characters.\n";
  return out;
}

inline std::string render_report(std::span<const UserReport> users,
                                 const DatasetManifest* manifest = nullptr) {
  std::string out;
  if (manifest) out += render_manifest(*manifest) + "\n";
  return out + render_performance(users);
}

/// One record per user per dataset (and Overall when several datasets).
inline nlohmann::json report_to_json(std::span<const UserReport> users) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& u : users)
    for (const auto& [name, c] : report_columns(u)) {
      nlohmann::json rec = {{"user", u.name},     {"dataset", name},
                            {"ct", c.ct},         {"cm", c.cm},
                            {"cs", c.cs},         {"rejected", c.rejected}};
      const auto acc = c.accuracy();
      rec["accuracy"] = acc ? nlohmann::json(*acc) : nlohmann::json(nullptr);
      out.push_back(rec);
    }
  return out;
}

}  // namespace hwocr
