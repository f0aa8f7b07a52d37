#pragma once

// HTTP API over a directory of page images and their box files, used by the
// browser labeler. Box coordinates keep the box-file convention.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hwocr/boxfile.hpp"
#include "hwocr/fileutil.hpp"
#include "hwocr/image_io.hpp"

namespace hwocr {

struct LabelerPage {
  std::string id;  // file stem shared by the image and its .box
  std::filesystem::path image;
  std::filesystem::path box;
};

/// Image files in `root` (png, tif, tiff) that have a sibling `<stem>.box`,
/// sorted by id.
inline std::vector<LabelerPage> scan_labeler_root(const std::filesystem::path& root) {
  std::vector<LabelerPage> out;
  std::error_code ec;
  for (const auto& de : std::filesystem::directory_iterator(root, ec)) {
    if (!de.is_regular_file()) continue;
    const auto& p = de.path();
    const auto ext = p.extension().string();
    if (ext != ".png" && ext != ".tif" && ext != ".tiff") continue;
    auto box = p;
    box.replace_extension(".box");
    if (std::filesystem::is_regular_file(box)) out.push_back({p.stem().string(), p, box});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.id != b.id ? a.id < b.id : a.image < b.image;
  });
  // One page per id; the first image in sorted order wins.
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& a, const auto& b) { return a.id == b.id; }),
            out.end());
  return out;
}

inline nlohmann::json boxes_to_json(const BoxFile& bf) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : bf.entries)
    entries.push_back({{"glyph", e.glyph},
                       {"left", e.bbox.left},
                       {"bottom", e.bbox.bottom},
                       {"right", e.bbox.right},
                       {"top", e.bbox.top}});
  return {{"entries", entries}};
}

/// Reads the {entries: [...]} payload. Shape errors throw; box geometry is
/// left to validate_boxes.
inline BoxFile boxes_from_json(const nlohmann::json& j) {
  BoxFile bf;
  if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array())
    throw Error("payload must be an object with an 'entries' array");
  for (const auto& e : j.at("entries")) {
    if (!e.is_object()) throw Error("each entry must be an object");
    BoxEntry be;
    be.glyph = e.at("glyph").get<std::string>();
    be.bbox = {e.at("left").get<int>(), e.at("bottom").get<int>(), e.at("right").get<int>(),
               e.at("top").get<int>()};
    bf.entries.push_back(std::move(be));
  }
  return bf;
}

inline nlohmann::json issues_to_json(const std::vector<Issue>& issues) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& i : issues) {
    nlohmann::json j = {{"severity", to_string(i.severity)}, {"kind", i.kind}, {"message", i.message}};
    j["index"] = i.index ? nlohmann::json(*i.index) : nlohmann::json(nullptr);
    out.push_back(j);
  }
  return out;
}

class LabelerService {
 public:
  /// `static_dir` holds the UI assets; when empty a placeholder page is served.
  explicit LabelerService(std::filesystem::path root, std::filesystem::path static_dir = {})
      : root_(std::move(root)), static_dir_(std::move(static_dir)) {
    // No SO_REUSEPORT: a second server on a busy port must fail to bind.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    routes();
  }

  /// Binds to `port` (0 picks a free one). Returns the bound port or nullopt
  /// when the port is unavailable.
  std::optional<int> bind(const std::string& host, int port) {
    if (port == 0) {
      const int p = server_.bind_to_any_port(host);
      if (p <= 0) return std::nullopt;
      return p;
    }
    if (!server_.bind_to_port(host, port)) return std::nullopt;
    return port;
  }

  /// Serves until stop(); call after a successful bind.
  bool run() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  std::optional<LabelerPage> find(const std::string& id) const {
    for (auto& p : scan_labeler_root(root_))
      if (p.id == id) return p;
    return std::nullopt;
  }

  static void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& msg) {
    send_json(res, status, {{"error", msg}});
  }

  void routes() {
    server_.Get("/api/pages", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json pages = nlohmann::json::array();
      for (const auto& p : scan_labeler_root(root_)) {
        try {
          const PageImage img = read_page(p.image);
          pages.push_back({{"id", p.id},
                           {"image-uri", "/api/pages/" + p.id + "/image"},
                           {"box-uri", "/api/pages/" + p.id + "/boxes"},
                           {"width", img.width()},
                           {"height", img.height()}});
        } catch (const Error&) {
          // Unreadable images are left out of the listing.
        }
      }
      send_json(res, 200, pages);
    });

    server_.Get(R"(/api/pages/([^/]+)/image)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const auto page = find(req.matches[1]);
                  if (!page) return send_error(res, 404, "no such page");
                  try {
                    const auto png = encode_png(read_page(page->image));
                    res.set_content(std::string(png.begin(), png.end()), "image/png");
                  } catch (const Error& e) {
                    send_error(res, 500, e.what());
                  }
                });

    server_.Get(R"(/api/pages/([^/]+)/boxes)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const auto page = find(req.matches[1]);
                  if (!page) return send_error(res, 404, "no such page");
                  try {
                    send_json(res, 200, boxes_to_json(parse_boxfile(read_text_file(page->box))));
                  } catch (const Error& e) {
                    send_error(res, 500, page->box.filename().string() + ": " + e.what());
                  }
                });

    server_.Put(R"(/api/pages/([^/]+)/boxes)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const auto page = find(req.matches[1]);
                  if (!page) return send_error(res, 404, "no such page");
                  BoxFile bf;
                  try {
                    bf = boxes_from_json(nlohmann::json::parse(req.body));
                  } catch (const std::exception& e) {
                    return send_error(res, 400, e.what());
                  }
                  try {
                    const PageImage img = read_page(page->image);
                    const auto issues = validate_boxes(bf, img);
                    if (std::any_of(issues.begin(), issues.end(), is_hard_box_issue))
                      return send_json(res, 422, {{"issues", issues_to_json(issues)}});
                    write_file_atomic(page->box, serialize_boxfile(bf));
                    auto body = boxes_to_json(bf);
                    body["issues"] = issues_to_json(issues);
                    send_json(res, 200, body);
                  } catch (const Error& e) {
                    send_error(res, 500, e.what());
                  }
                });

    if (!static_dir_.empty() && std::filesystem::is_directory(static_dir_)) {
      server_.set_mount_point("/", static_dir_.string());
    } else {
      server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            "<!doctype html><title>hwocr labeler</title>"
            "<p>The labeler UI is not installed. The API is available under /api/pages.</p>",
            "text/html");
      });
    }
  }

  std::filesystem::path root_;
  std::filesystem::path static_dir_;
  httplib::Server server_;
};

}  // namespace hwocr
