#pragma once

// Command-line front end. Each subcommand reads files, calls one library
// operation and writes its result.

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hwocr/boxfile.hpp"
#include "hwocr/evaluation.hpp"
#include "hwocr/fileutil.hpp"
#include "hwocr/image_io.hpp"
#include "hwocr/imaging.hpp"
#include "hwocr/labeler_service.hpp"
#include "hwocr/langpack.hpp"
#include "hwocr/lexicon.hpp"
#include "hwocr/makebox.hpp"
#include "hwocr/recognizer.hpp"
#include "hwocr/training.hpp"

namespace hwocr::cli {

namespace fs = std::filesystem;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{
      "makebox",       "train",     "mftraining", "cntraining",    "unicharset-extract",
      "unicharset_extractor", "wordlist2dawg", "pack", "recognize", "eval",
      "freq",          "serve-labeler"};
  return names;
}

inline std::string usage() {
  return "usage: hwocr <command> [args]\n"
         "\n"
         "commands:\n"
         "  makebox <image> <base> [-l lang] [-d tessdata]   write <base>.box\n"
         "  train <image> <box> [-o out.tr]                  write features (.tr)\n"
         "  mftraining <tr...> [-d dir]                      write inttemp, pffmtable, Microfeat\n"
         "  cntraining <tr...> [-d dir]                      write normproto\n"
         "  unicharset-extract <box...> [-d dir]             write unicharset\n"
         "  wordlist2dawg <wordlist> <out>                   build a dictionary\n"
         "  pack -l lang -d tessdata <parts...>              assemble a language pack\n"
         "  recognize <image> <out> -l lang [-d tessdata] [--use-dict]\n"
         "  eval --gt <box> --pred <txt|json> [--words <file>]\n"
         "  freq <box...>                                    glyph frequency histogram\n"
         "  serve-labeler --port N --root <dir>              labeling HTTP API\n";
}

/// Box file from disk; parse errors name the file and line.
inline BoxFile load_boxfile(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_boxfile(text, path.stem().string());
  } catch (const Error& e) {
    throw LoadError(path.string(), e.what());
  }
}

inline TrFeatureSet load_tr(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_tr(text, path.stem().string());
  } catch (const Error& e) {
    throw LoadError(path.string(), e.what());
  }
}

inline std::vector<std::uint8_t> to_bytes(const std::string& s) { return {s.begin(), s.end()}; }

inline std::string from_bytes(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------------------

inline int cmd_makebox(const std::vector<std::string>& pos, const std::string& lang,
                       const std::string& tessdata, Streams io) {
  if (pos.size() < 2) throw Error("makebox needs <image> <base>");
  std::vector<std::string> extra(pos.begin() + 2, pos.end());
  for (const auto& e : extra)
    if (e != "batch.nochop" && e != "makebox" && e != "batch")
      throw Error("makebox: unexpected argument '" + e + "'");
  if (!extra.empty()) io.err << "notice: '" << extra.front() << "' and similar arguments are ignored\n";
  const PageImage page = read_page(pos[0]);
  std::optional<LanguagePack> pack;
  if (!lang.empty()) pack = load_pack(tessdata, lang);
  const BoxFile bf = make_boxes(segment_page(page), pack ? &*pack : nullptr, {}, page.id());
  write_file_atomic(pos[1] + ".box", serialize_boxfile(bf));
  return 0;
}

inline int cmd_train(const std::vector<std::string>& pos, const std::string& out_path, Streams io) {
  if (pos.size() < 2) throw Error("train needs <image> <box>");
  const fs::path image = pos[0];
  fs::path box;
  // Accept the historic "<image> junk nobatch box.train" form; the box file
  // is then the image path with a .box extension.
  if (pos.size() >= 2 && (pos[1] == "junk" || pos[1] == "nobatch" || pos[1] == "box.train")) {
    for (std::size_t i = 1; i < pos.size(); ++i)
      if (pos[i] != "junk" && pos[i] != "nobatch" && pos[i] != "box.train")
        throw Error("train: unexpected argument '" + pos[i] + "'");
    io.err << "notice: 'junk nobatch box.train' arguments are ignored\n";
    box = fs::path(image).replace_extension(".box");
  } else {
    if (pos.size() != 2) throw Error("train: unexpected argument '" + pos[2] + "'");
    box = pos[1];
  }
  const PageImage page = read_page(image);
  const BoxFile bf = load_boxfile(box);
  for (const auto& issue : validate_boxes(bf, page))
    if (is_hard_box_issue(issue)) throw LoadError(box.string(), "invalid box: " + issue.message);
  const auto res = emit_tr(page, bf);
  for (const auto& w : res.warnings) io.err << "warning: " << box.string() << ": " << w << "\n";
  const fs::path out = out_path.empty() ? fs::path(image).replace_extension(".tr") : fs::path(out_path);
  write_file_atomic(out, serialize_tr(res.features));
  return 0;
}

inline std::vector<TrFeatureSet> load_trs(const std::vector<std::string>& paths) {
  if (paths.empty()) throw Error("no .tr files given");
  std::vector<TrFeatureSet> trs;
  for (const auto& p : paths) trs.push_back(load_tr(p));
  return trs;
}

inline int cmd_mftraining(const std::vector<std::string>& trs_paths, const fs::path& dir) {
  const auto trs = load_trs(trs_paths);
  const auto model = mf_training(trs);
  fs::create_directories(dir);
  write_file_atomic(dir / "inttemp", serialize_inttemp(model));
  write_file_atomic(dir / "pffmtable", serialize_pffmtable(model));
  write_file_atomic(dir / "Microfeat", microfeat_log(trs));
  return 0;
}

inline int cmd_cntraining(const std::vector<std::string>& trs_paths, const fs::path& dir) {
  const auto model = cn_training(load_trs(trs_paths));
  fs::create_directories(dir);
  write_file_atomic(dir / "normproto", serialize_normproto(model));
  return 0;
}

inline int cmd_unicharset(const std::vector<std::string>& boxes, const fs::path& dir) {
  if (boxes.empty()) throw Error("no box files given");
  std::vector<BoxFile> bfs;
  for (const auto& b : boxes) bfs.push_back(load_boxfile(b));
  fs::create_directories(dir);
  write_file_atomic(dir / "unicharset", serialize_unicharset(extract_unicharset(bfs)));
  return 0;
}

inline int cmd_wordlist2dawg(const std::string& list, const std::string& out) {
  const WordList wl = parse_wordlist(read_text_file(list));
  Dawg d;
  try {
    d = build_dawg(wl);
  } catch (const Error& e) {
    throw LoadError(list, e.what());
  }
  write_file_atomic(out, from_bytes(serialize_dawg(d)));
  return 0;
}

/// Which pack part a file supplies, from its name: either the bare part name
/// or any prefix followed by '.' and the part name.
inline std::optional<std::string> part_name(const fs::path& p) {
  const std::string f = p.filename().string();
  for (auto name : kPackFileNames) {
    const std::string n(name);
    if (f == n || (f.size() > n.size() && f.ends_with("." + n))) return n;
  }
  return std::nullopt;
}

inline int cmd_pack(const std::vector<std::string>& parts, const std::string& lang,
                    const fs::path& tessdata) {
  std::map<std::string, fs::path> by_name;
  for (const auto& p : parts) {
    const auto n = part_name(p);
    if (!n) throw LoadError(p, "not a language pack part");
    if (!by_name.emplace(*n, p).second) throw LoadError(p, "part '" + *n + "' given twice");
  }
  PackParts pp;
  auto guarded = [](const fs::path& path, auto&& fn) {
    try {
      return fn(read_text_file(path));
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw LoadError(path.string(), e.what());
    }
  };
  auto get = [&](const char* n) -> const fs::path* {
    auto it = by_name.find(n);
    return it == by_name.end() ? nullptr : &it->second;
  };
  if (auto p = get("unicharset")) pp.unicharset = guarded(*p, [](auto t) { return parse_unicharset(t); });
  if (auto p = get("normproto")) pp.prototypes = guarded(*p, [](auto t) { return parse_normproto(t); });
  const auto* it = get("inttemp");
  const auto* pf = get("pffmtable");
  if (bool(it) != bool(pf)) throw Error("inttemp and pffmtable must be given together");
  if (it) {
    auto templates = guarded(*it, [](auto t) { return parse_inttemp(t); });
    pp.micro_protos = guarded(*pf, [&](auto t) { return make_micro_model(std::move(templates), parse_pffmtable(t)); });
  }
  auto dawg = [](const std::string& t) { return t.empty() ? Dawg{} : deserialize_dawg(to_bytes(t)); };
  if (auto p = get("freq-dawg")) pp.freq_dawg = guarded(*p, dawg);
  if (auto p = get("word-dawg")) pp.word_dawg = guarded(*p, dawg);
  if (auto p = get("user-words")) pp.user_words = guarded(*p, [](auto t) { return parse_wordlist(t); });
  if (auto p = get("DangAmbigs")) pp.ambigs = guarded(*p, [](auto t) { return parse_ambigs(t); });
  assemble_pack(tessdata, lang, pp);
  return 0;
}

inline int cmd_recognize(const std::string& image, const std::string& out, const std::string& lang,
                         const fs::path& tessdata, const RecognizerConfig& cfg, Streams io) {
  const LanguagePack pack = load_pack(tessdata, lang);
  const PageImage page = read_page(image);
  const RecognitionResult r = recognize_page(pack, page, cfg);
  const std::string text = render_text(r);
  write_file_atomic(out + ".txt", text);
  write_file_atomic(out + ".debug.txt", render_debug(r));
  write_file_atomic(out + ".json", result_to_json(r).dump(1) + "\n");
  for (const auto& w : flag_ambiguities(r, pack.ambigs))
    io.err << "ambiguity: offset " << w.offset << ": '" << w.wrong << "' may be '" << w.right << "'\n";
  return 0;
}

struct EvalArgs {
  std::vector<std::string> gt;
  std::vector<std::string> pred;
  std::vector<std::string> words;
  std::string user = "User";
  std::string dataset{kIsolated};
  std::string manifest;
  std::string json_out;
};

inline int cmd_eval(const EvalArgs& a, Streams io) {
  if (a.gt.empty()) throw Error("eval needs --gt");
  if (a.gt.size() != a.pred.size()) throw Error("eval needs one --pred per --gt");
  if (!a.words.empty() && a.words.size() != a.gt.size())
    throw Error("eval needs one --words per --gt when --words is used");
  if (a.dataset != kIsolated && a.dataset != kFreeFlow)
    throw Error("unknown dataset '" + a.dataset + "'");
  UserReport user{a.user, {}};
  auto& report = user.datasets[a.dataset];
  for (std::size_t i = 0; i < a.gt.size(); ++i) {
    GroundTruth gt{load_boxfile(a.gt[i]), {}};
    if (!a.words.empty()) {
      try {
        gt.word_starts = parse_word_starts(read_text_file(a.words[i]), gt.chars.entries.size());
      } catch (const LoadError&) {
        throw;
      } catch (const Error& e) {
        throw LoadError(a.words[i], e.what());
      }
    }
    const fs::path pred = a.pred[i];
    Alignment al;
    if (pred.extension() == ".json") {
      RecognitionResult r;
      try {
        r = result_from_json(nlohmann::json::parse(read_text_file(pred)));
      } catch (const nlohmann::json::exception& e) {
        throw LoadError(pred.string(), e.what());
      } catch (const LoadError&) {
        throw;
      } catch (const Error& e) {
        throw LoadError(pred.string(), e.what());
      }
      al = align(gt, r);
    } else {
      al = align_text(gt, read_text_file(pred));
    }
    report += compute_metrics(al, &gt.chars);
  }
  std::optional<DatasetManifest> manifest;
  if (!a.manifest.empty()) {
    try {
      manifest = parse_manifest(read_text_file(a.manifest));
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw LoadError(a.manifest, e.what());
    }
  }
  const std::vector<UserReport> users{user};
  io.out << render_report(users, manifest ? &*manifest : nullptr);
  if (!a.json_out.empty()) write_file_atomic(a.json_out, report_to_json(users).dump(2) + "\n");
  return 0;
}

inline int cmd_freq(const std::vector<std::string>& boxes, Streams io) {
  std::vector<BoxFile> bfs;
  for (const auto& b : boxes) bfs.push_back(load_boxfile(b));
  io.out << render_frequency(char_frequency(bfs));
  return 0;
}

inline LabelerService* g_running_service = nullptr;

inline int cmd_serve(int port, const std::string& host, const fs::path& root, const fs::path& assets,
                     Streams io) {
  if (!fs::is_directory(root)) throw LoadError(root.string(), "not a directory");
  LabelerService svc(root, assets);
  const auto bound = svc.bind(host, port);
  if (!bound) {
    io.err << "error: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  io.out << "serving " << root.string() << " on http://" << host << ":" << *bound << "/\n" << std::flush;
  g_running_service = &svc;
  std::signal(SIGINT, [](int) { if (g_running_service) g_running_service->stop(); });
  std::signal(SIGTERM, [](int) { if (g_running_service) g_running_service->stop(); });
  svc.run();
  g_running_service = nullptr;
  return 0;
}

// ---------------------------------------------------------------------------

/// Runs one command. Returns 0 on success, 1 when an input cannot be read
/// or is invalid, 2 on a usage error.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  Streams io{out, err};
  if (argc < 2) {
    err << usage();
    return 2;
  }
  const std::string first = argv[1];
  if (first == "-h" || first == "--help") {
    out << usage();
    return 0;
  }
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), first) == names.end()) {
    err << "unknown command '" << first << "'\n" << usage();
    return 2;
  }

  CLI::App app{"Handwriting OCR toolkit", "hwocr"};
  app.require_subcommand(1);

  std::vector<std::string> pos;
  std::string lang, tessdata = "tessdata", out_path, dir = ".";

  auto* makebox = app.add_subcommand("makebox", "first-pass box file for a page");
  makebox->add_option("args", pos, "<image> <base>")->required();
  makebox->add_option("-l,--lang", lang, "label boxes with this pack");
  makebox->add_option("-d,--tessdata", tessdata, "pack directory");

  auto* train = app.add_subcommand("train", "extract features from a labeled page");
  train->add_option("args", pos, "<image> <box>")->required();
  train->add_option("-o,--output", out_path, "output .tr path");

  auto* mft = app.add_subcommand("mftraining", "cluster micro-feature prototypes");
  mft->add_option("tr", pos, ".tr files")->required();
  mft->add_option("-d,--dir", dir, "output directory");

  auto* cnt = app.add_subcommand("cntraining", "cluster normalization prototypes");
  cnt->add_option("tr", pos, ".tr files")->required();
  cnt->add_option("-d,--dir", dir, "output directory");

  auto* uni = app.add_subcommand("unicharset-extract", "character inventory from box files");
  uni->alias("unicharset_extractor");
  uni->add_option("box", pos, "box files")->required();
  uni->add_option("-d,--dir", dir, "output directory");

  std::string wl_in, wl_out;
  auto* w2d = app.add_subcommand("wordlist2dawg", "build a dictionary from a word list");
  w2d->add_option("wordlist", wl_in)->required();
  w2d->add_option("out", wl_out)->required();

  auto* pack = app.add_subcommand("pack", "assemble a language pack");
  pack->add_option("parts", pos, "part files, named by part (e.g. normproto or x.normproto)");
  pack->add_option("-l,--lang", lang, "three-letter pack code")->required();
  pack->add_option("-d,--tessdata", tessdata, "pack directory");

  RecognizerConfig rcfg;
  std::string image, out_base;
  auto* rec = app.add_subcommand("recognize", "recognize a page");
  rec->add_option("image", image)->required();
  rec->add_option("out", out_base, "output base; writes <out>.txt, .debug.txt, .json")->required();
  rec->add_option("-l,--lang", lang)->required();
  rec->add_option("-d,--tessdata", tessdata);
  rec->add_flag("--use-dict", rcfg.use_dict, "let dictionaries break rating ties");
  rec->add_option("--reject-threshold", rcfg.reject_threshold);
  rec->add_option("--word-gap", rcfg.seg.word_gap_factor);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "score predictions against ground truth");
  ev->add_option("--gt", ea.gt, "ground-truth box file")->required();
  ev->add_option("--pred", ea.pred, "prediction (.json result or plain text)")->required();
  ev->add_option("--words", ea.words, "word-boundary sidecar");
  ev->add_option("--user", ea.user, "row label");
  ev->add_option("--dataset", ea.dataset, "Dataset-1 or Dataset-2");
  ev->add_option("--manifest", ea.manifest, "dataset manifest (JSON)");
  ev->add_option("--json", ea.json_out, "write machine-readable records here");

  auto* freq = app.add_subcommand("freq", "glyph frequency histogram");
  freq->add_option("box", pos, "box files")->required();

  int port = 8080;
  std::string host = "127.0.0.1", root, assets;
  auto* serve = app.add_subcommand("serve-labeler", "serve the labeling API");
  serve->add_option("--port", port)->required();
  serve->add_option("--root", root)->required();
  serve->add_option("--host", host);
  serve->add_option("--static", assets, "UI asset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*makebox) return cmd_makebox(pos, lang, tessdata, io);
    if (*train) return cmd_train(pos, out_path, io);
    if (*mft) return cmd_mftraining(pos, dir);
    if (*cnt) return cmd_cntraining(pos, dir);
    if (*uni) return cmd_unicharset(pos, dir);
    if (*w2d) return cmd_wordlist2dawg(wl_in, wl_out);
    if (*pack) return cmd_pack(pos, lang, tessdata);
    if (*rec) return cmd_recognize(image, out_base, lang, tessdata, rcfg, io);
    if (*ev) return cmd_eval(ea, io);
    if (*freq) return cmd_freq(pos, io);
    if (*serve) return cmd_serve(port, host, root, assets, io);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << usage();
  return 2;
}

}  // namespace hwocr::cli
