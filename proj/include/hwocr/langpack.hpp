#pragma once

// A language pack is the set of eight `<lang>.<name>` files in a tessdata
// directory that together form one trained model. Here each user gets one.

#include <algorithm>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hwocr/error.hpp"
#include "hwocr/fileutil.hpp"
#include "hwocr/issue.hpp"
#include "hwocr/lexicon.hpp"
#include "hwocr/training.hpp"

namespace hwocr {

inline constexpr std::array<std::string_view, 8> kPackFileNames{
    "freq-dawg", "word-dawg", "user-words", "inttemp",
    "normproto", "pffmtable", "unicharset", "DangAmbigs"};

struct LanguagePack {
  std::string lang;
  Unicharset unicharset;
  PrototypeModel prototypes;     // normproto
  MicroProtoModel micro_protos;  // inttemp + pffmtable
  Dawg freq_dawg;
  Dawg word_dawg;
  WordList user_words;
  AmbigTable ambigs;

  bool has_dictionary() const {
    return !freq_dawg.accepts_nothing() || !word_dawg.accepts_nothing() || !user_words.empty();
  }

  /// True when `word` is in any of the three dictionaries.
  bool in_dictionary(std::string_view word) const {
    if (freq_dawg.contains(word) || word_dawg.contains(word)) return true;
    for (const auto& w : user_words.words)
      if (w == word) return true;
    return false;
  }
};

/// Inputs to assemble_pack. The dictionaries and ambiguity table may be absent.
struct PackParts {
  std::optional<Unicharset> unicharset;
  std::optional<PrototypeModel> prototypes;
  std::optional<MicroProtoModel> micro_protos;
  std::optional<Dawg> freq_dawg;
  std::optional<Dawg> word_dawg;
  std::optional<WordList> user_words;
  std::optional<AmbigTable> ambigs;
};

inline bool is_valid_lang_code(std::string_view lang) {
  return lang.size() == 3 &&
         std::all_of(lang.begin(), lang.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

inline std::filesystem::path pack_file(const std::filesystem::path& dir, std::string_view lang,
                                       std::string_view name) {
  return dir / (std::string(lang) + "." + std::string(name));
}

/// Checks the cross-file invariant: every model class is in the unicharset.
inline void check_pack_consistency(const LanguagePack& p, const std::filesystem::path& dir) {
  auto fail = [&](std::string_view file, const std::string& what) {
    throw LoadError(pack_file(dir, p.lang, file).string(), what);
  };
  if (p.unicharset.empty()) fail("unicharset", "unicharset is empty");
  for (const auto& [glyph, _] : p.prototypes.classes)
    if (!p.unicharset.contains(glyph))
      fail("normproto", "class '" + glyph + "' is not in the unicharset");
  for (const auto& [glyph, _] : p.micro_protos.classes)
    if (!p.unicharset.contains(glyph))
      fail("inttemp", "class '" + glyph + "' is not in the unicharset");
  for (const auto& [glyph, _] : p.micro_protos.expected_count)
    if (!p.unicharset.contains(glyph))
      fail("pffmtable", "class '" + glyph + "' is not in the unicharset");
}

/// Writes the eight pack files for `lang` into `dir` and returns the pack.
/// Absent dictionaries are written as empty DAWGs; absent user words and
/// ambiguities as zero-length files.
inline LanguagePack assemble_pack(const std::filesystem::path& dir, const std::string& lang,
                                  const PackParts& parts) {
  if (!is_valid_lang_code(lang))
    throw Error("language code must be three lowercase letters: '" + lang + "'");
  if (!parts.unicharset) throw Error("pack is missing the unicharset");
  if (!parts.prototypes) throw Error("pack is missing the normproto model");
  if (!parts.micro_protos) throw Error("pack is missing the inttemp/pffmtable model");

  LanguagePack pack;
  pack.lang = lang;
  pack.unicharset = *parts.unicharset;
  pack.prototypes = *parts.prototypes;
  pack.micro_protos = *parts.micro_protos;
  pack.freq_dawg = parts.freq_dawg.value_or(Dawg{});
  pack.word_dawg = parts.word_dawg.value_or(Dawg{});
  pack.user_words = parts.user_words.value_or(WordList{});
  pack.ambigs = parts.ambigs.value_or(AmbigTable{});
  check_pack_consistency(pack, dir);

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw LoadError(dir.string(), "cannot create directory");

  auto bytes = [](const std::vector<std::uint8_t>& v) { return std::string(v.begin(), v.end()); };
  write_file_atomic(pack_file(dir, lang, "unicharset"), serialize_unicharset(pack.unicharset));
  write_file_atomic(pack_file(dir, lang, "normproto"), serialize_normproto(pack.prototypes));
  write_file_atomic(pack_file(dir, lang, "inttemp"), serialize_inttemp(pack.micro_protos));
  write_file_atomic(pack_file(dir, lang, "pffmtable"), serialize_pffmtable(pack.micro_protos));
  write_file_atomic(pack_file(dir, lang, "freq-dawg"), bytes(serialize_dawg(pack.freq_dawg)));
  write_file_atomic(pack_file(dir, lang, "word-dawg"), bytes(serialize_dawg(pack.word_dawg)));
  write_file_atomic(pack_file(dir, lang, "user-words"), serialize_wordlist(pack.user_words));
  write_file_atomic(pack_file(dir, lang, "DangAmbigs"), serialize_ambigs(pack.ambigs));
  return pack;
}

/// Reads and cross-validates the eight files. The four linguistic files may
/// be zero-length.
inline LanguagePack load_pack(const std::filesystem::path& dir, const std::string& lang) {
  if (!is_valid_lang_code(lang))
    throw Error("language code must be three lowercase letters: '" + lang + "'");
  for (auto name : kPackFileNames) {
    const auto path = pack_file(dir, lang, name);
    if (!std::filesystem::is_regular_file(path)) throw LoadError(path.string(), "missing pack file");
  }
  auto read = [&](std::string_view name) { return read_text_file(pack_file(dir, lang, name)); };
  auto guarded = [&](std::string_view name, auto&& fn) {
    try {
      return fn(read(name));
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw LoadError(pack_file(dir, lang, name).string(), e.what());
    }
  };
  auto dawg = [](const std::string& text) {
    if (text.empty()) return Dawg{};
    const std::vector<std::uint8_t> bytes(text.begin(), text.end());
    return deserialize_dawg(bytes);
  };

  LanguagePack p;
  p.lang = lang;
  p.unicharset = guarded("unicharset", [](const std::string& t) { return parse_unicharset(t); });
  p.prototypes = guarded("normproto", [](const std::string& t) { return parse_normproto(t); });
  auto templates = guarded("inttemp", [](const std::string& t) { return parse_inttemp(t); });
  p.micro_protos = guarded("pffmtable", [&](const std::string& t) {
    return make_micro_model(std::move(templates), parse_pffmtable(t));
  });
  p.freq_dawg = guarded("freq-dawg", dawg);
  p.word_dawg = guarded("word-dawg", dawg);
  p.user_words = guarded("user-words", [](const std::string& t) {
    auto wl = parse_wordlist(t);
    for (const auto& w : wl.words)
      if (!is_lexicon_word(w)) throw Error("word '" + w + "' contains characters outside a-z");
    return wl;
  });
  p.ambigs = guarded("DangAmbigs", [](const std::string& t) { return parse_ambigs(t); });
  check_pack_consistency(p, dir);
  return p;
}

/// Non-fatal findings: blank dictionaries (notices), thinly trained classes
/// and unicharset glyphs without a model (warnings).
inline std::vector<Issue> validate_pack(const LanguagePack& p) {
  std::vector<Issue> out;
  if (p.freq_dawg.accepts_nothing())
    out.push_back({Severity::notice, "empty-dictionary", "freq-dawg is empty", {}});
  if (p.word_dawg.accepts_nothing())
    out.push_back({Severity::notice, "empty-dictionary", "word-dawg is empty", {}});
  if (p.user_words.empty())
    out.push_back({Severity::notice, "empty-dictionary", "user-words is empty", {}});
  if (p.ambigs.empty())
    out.push_back({Severity::notice, "empty-dictionary", "DangAmbigs is empty", {}});
  for (std::size_t i = 0; i < p.unicharset.entries.size(); ++i) {
    const auto& e = p.unicharset.entries[i];
    const bool modeled = p.prototypes.classes.count(e.glyph) && p.micro_protos.classes.count(e.glyph);
    if (!modeled)
      out.push_back({Severity::warning, "unmodeled-glyph",
                     "glyph '" + e.glyph + "' has no trained prototypes", i});
    else if (e.count < 2)
      out.push_back({Severity::warning, "thin-class",
                     "class '" + e.glyph + "' was trained on fewer than 2 samples", i});
  }
  return out;
}

}  // namespace hwocr
