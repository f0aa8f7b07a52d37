#pragma once

// Dictionary data: minimal DAWGs built from wordlists, their binary codec,
// user-word lists and the DangAmbigs table.
//
// Binary DAWG layout (little-endian):
//   "SDWG"  version:u8=1  node_count:u32
//   per node: final:u8  edge_count:u8  edge_count x (label:u8 target:u32)
// Node 0 is the root.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hwocr/error.hpp"
#include "hwocr/textio.hpp"

namespace hwocr {

struct WordList {
  std::vector<std::string> words;
  bool empty() const { return words.empty(); }
  friend bool operator==(const WordList&, const WordList&) = default;
};

inline bool is_lexicon_word(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

/// One word per line; surrounding blanks trimmed, empty lines skipped,
/// duplicates dropped (first occurrence kept). Characters are not checked
/// here; build_dawg rejects words outside a-z.
inline WordList parse_wordlist(std::string_view text) {
  WordList wl;
  std::set<std::string, std::less<>> seen;
  textio::LineReader in(text);
  std::string_view line;
  while (in.next(line)) {
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string_view::npos) continue;
    const auto e = line.find_last_not_of(" \t");
    const std::string word(line.substr(b, e - b + 1));
    if (seen.insert(word).second) wl.words.push_back(word);
  }
  return wl;
}

inline std::string serialize_wordlist(const WordList& wl) {
  std::string out;
  for (const auto& w : wl.words) out += w + "\n";
  return out;
}

class Dawg {
 public:
  struct Edge {
    char label;
    std::uint32_t target;
    friend bool operator==(const Edge&, const Edge&) = default;
  };
  struct Node {
    bool final = false;
    std::vector<Edge> edges;  // sorted by label, labels unique
    friend bool operator==(const Node&, const Node&) = default;
  };

  /// The empty language: a single non-final root.
  Dawg() : nodes_(1) {}

  /// Adopts a node table after checking bounds, edge order and acyclicity.
  static Dawg from_nodes(std::vector<Node> nodes) {
    if (nodes.empty()) throw Error("dawg: no root node");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& es = nodes[i].edges;
      for (std::size_t j = 0; j < es.size(); ++j) {
        if (es[j].target >= nodes.size())
          throw Error("dawg: node " + std::to_string(i) + " has a dangling edge");
        if (j > 0 && es[j - 1].label >= es[j].label)
          throw Error("dawg: node " + std::to_string(i) + " has unsorted or duplicate labels");
      }
    }
    // Iterative three-color DFS from every node.
    std::vector<std::uint8_t> color(nodes.size(), 0);
    std::vector<std::pair<std::uint32_t, std::size_t>> stack;
    for (std::uint32_t s = 0; s < nodes.size(); ++s) {
      if (color[s]) continue;
      stack.push_back({s, 0});
      color[s] = 1;
      while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < nodes[n].edges.size()) {
          const auto t = nodes[n].edges[next++].target;
          if (color[t] == 1) throw Error("dawg: cycle detected");
          if (color[t] == 0) {
            color[t] = 1;
            stack.push_back({t, 0});
          }
        } else {
          color[n] = 2;
          stack.pop_back();
        }
      }
    }
    Dawg d;
    d.nodes_ = std::move(nodes);
    return d;
  }

  bool contains(std::string_view word) const {
    std::uint32_t n = 0;
    for (char c : word) {
      const auto& es = nodes_[n].edges;
      const auto it = std::lower_bound(es.begin(), es.end(), c,
                                       [](const Edge& e, char ch) { return e.label < ch; });
      if (it == es.end() || it->label != c) return false;
      n = it->target;
    }
    return nodes_[n].final;
  }

  /// Accepted words in lexicographic order.
  std::vector<std::string> words() const {
    std::vector<std::string> out;
    std::string prefix;
    collect(0, prefix, out);
    return out;
  }

  bool accepts_nothing() const { return words_empty(0); }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes_) n += node.edges.size();
    return n;
  }
  const std::vector<Node>& nodes() const { return nodes_; }

  friend bool operator==(const Dawg&, const Dawg&) = default;

 private:
  void collect(std::uint32_t n, std::string& prefix, std::vector<std::string>& out) const {
    if (nodes_[n].final) out.push_back(prefix);
    for (const auto& e : nodes_[n].edges) {
      prefix.push_back(e.label);
      collect(e.target, prefix, out);
      prefix.pop_back();
    }
  }

  bool words_empty(std::uint32_t n) const {
    if (nodes_[n].final) return false;
    for (const auto& e : nodes_[n].edges)
      if (!words_empty(e.target)) return false;
    return true;
  }

  std::vector<Node> nodes_;
};

namespace detail {

// Incremental construction of a minimal acyclic automaton from sorted,
// unique words (Daciuk, Mihov, Watson and Watson, 2000).
class DawgBuilder {
 public:
  DawgBuilder() { nodes_.emplace_back(); }

  void add(const std::string& word) {
    std::size_t common = 0;
    while (common < word.size() && common < previous_.size() && word[common] == previous_[common])
      ++common;
    // Walk the shared prefix; it always follows the most recent edges.
    std::uint32_t n = 0;
    for (std::size_t i = 0; i < common; ++i) n = nodes_[n].edges.back().target;
    if (!nodes_[n].edges.empty()) minimize_last_child(n);
    for (std::size_t i = common; i < word.size(); ++i) {
      const auto fresh = std::uint32_t(nodes_.size());
      nodes_.emplace_back();
      nodes_[n].edges.push_back({word[i], fresh});
      n = fresh;
    }
    nodes_[n].final = true;
    previous_ = word;
  }

  Dawg finish() {
    if (!nodes_[0].edges.empty()) minimize_last_child(0);
    // Renumber reachable nodes breadth-first from the root.
    std::vector<std::int64_t> remap(nodes_.size(), -1);
    std::vector<std::uint32_t> order{0};
    remap[0] = 0;
    for (std::size_t i = 0; i < order.size(); ++i)
      for (const auto& e : nodes_[order[i]].edges)
        if (remap[e.target] < 0) {
          remap[e.target] = std::int64_t(order.size());
          order.push_back(e.target);
        }
    std::vector<Dawg::Node> out(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      out[i].final = nodes_[order[i]].final;
      for (const auto& e : nodes_[order[i]].edges)
        out[i].edges.push_back({e.label, std::uint32_t(remap[e.target])});
    }
    return Dawg::from_nodes(std::move(out));
  }

 private:
  using Signature = std::pair<bool, std::vector<std::pair<char, std::uint32_t>>>;

  Signature signature(std::uint32_t n) const {
    Signature s{nodes_[n].final, {}};
    for (const auto& e : nodes_[n].edges) s.second.emplace_back(e.label, e.target);
    return s;
  }

  void minimize_last_child(std::uint32_t n) {
    auto& last = nodes_[n].edges.back();
    const std::uint32_t child = last.target;
    if (!nodes_[child].edges.empty()) minimize_last_child(child);
    auto [it, fresh] = register_.try_emplace(signature(child), child);
    if (!fresh) nodes_[n].edges.back().target = it->second;  // child is now garbage
  }

  std::vector<Dawg::Node> nodes_;
  std::map<Signature, std::uint32_t> register_;
  std::string previous_;
};

}  // namespace detail

/// Minimal DAWG accepting exactly the words of `wl`. Throws naming the first
/// word with a character outside a-z.
inline Dawg build_dawg(const WordList& wl) {
  std::vector<std::string> words = wl.words;
  for (const auto& w : words)
    if (!is_lexicon_word(w)) throw Error("word '" + w + "' contains characters outside a-z");
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  detail::DawgBuilder b;
  for (const auto& w : words) b.add(w);
  return b.finish();
}

inline bool dawg_lookup(const Dawg& d, std::string_view word) { return d.contains(word); }

inline std::vector<std::uint8_t> serialize_dawg(const Dawg& d) {
  std::vector<std::uint8_t> out{'S', 'D', 'W', 'G', 1};
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
  };
  put32(std::uint32_t(d.node_count()));
  for (const auto& n : d.nodes()) {
    if (n.edges.size() > 255) throw Error("dawg: node fan-out exceeds 255");
    out.push_back(n.final ? 1 : 0);
    out.push_back(std::uint8_t(n.edges.size()));
    for (const auto& e : n.edges) {
      out.push_back(std::uint8_t(e.label));
      put32(e.target);
    }
  }
  return out;
}

inline Dawg deserialize_dawg(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw Error("dawg: truncated data");
  };
  auto get32 = [&] {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  };
  need(5);
  if (bytes[0] != 'S' || bytes[1] != 'D' || bytes[2] != 'W' || bytes[3] != 'G')
    throw Error("dawg: bad magic");
  if (bytes[4] != 1) throw Error("dawg: unsupported version " + std::to_string(bytes[4]));
  pos = 5;
  const std::uint32_t count = get32();
  if (count == 0) throw Error("dawg: no root node");
  // Each node needs at least two bytes; reject absurd counts before allocating.
  if (std::size_t(count) * 2 > bytes.size() - pos) throw Error("dawg: truncated data");
  std::vector<Dawg::Node> nodes(count);
  for (auto& n : nodes) {
    need(2);
    if (bytes[pos] > 1) throw Error("dawg: bad final flag");
    n.final = bytes[pos] == 1;
    const std::size_t edges = bytes[pos + 1];
    pos += 2;
    for (std::size_t e = 0; e < edges; ++e) {
      need(1);
      const char label = char(bytes[pos++]);
      if (label < 'a' || label > 'z') throw Error("dawg: edge label outside a-z");
      n.edges.push_back({label, get32()});
    }
  }
  if (pos != bytes.size()) throw Error("dawg: trailing bytes");
  return Dawg::from_nodes(std::move(nodes));
}

// ---------------------------------------------------------------------------
// DangAmbigs: `wrong<TAB>right` per line. Advisory only; never used to rewrite.

struct AmbigRule {
  std::string wrong;
  std::string right;
  friend auto operator<=>(const AmbigRule&, const AmbigRule&) = default;
};

struct AmbigTable {
  std::vector<AmbigRule> rules;
  bool empty() const { return rules.empty(); }
  friend bool operator==(const AmbigTable&, const AmbigTable&) = default;
};

inline AmbigTable parse_ambigs(std::string_view text) {
  AmbigTable t;
  textio::LineReader in(text);
  std::string_view line;
  while (in.next(line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos)
      throw ParseError(in.number(), "expected 'wrong<TAB>right'");
    AmbigRule r{std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))};
    if (r.wrong.empty() || r.right.empty()) throw ParseError(in.number(), "empty ambiguity side");
    if (std::find(t.rules.begin(), t.rules.end(), r) == t.rules.end()) t.rules.push_back(std::move(r));
  }
  return t;
}

inline std::string serialize_ambigs(const AmbigTable& t) {
  std::string out;
  for (const auto& r : t.rules) out += r.wrong + "\t" + r.right + "\n";
  return out;
}

}  // namespace hwocr
