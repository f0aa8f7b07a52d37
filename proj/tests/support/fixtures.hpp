#pragma once

// Shared randomized inputs and malformed-input corpora.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "hwocr/boxfile.hpp"

namespace fixtures {

struct MalformedBox {
  std::string text;
  std::size_t line;  // line the parser must report
};

inline const std::vector<MalformedBox>& malformed_boxes() {
  static const std::vector<MalformedBox> corpus{
      {"a 1 2 3\n", 1},                         // too few fields
      {"a 1 2 3 4\nb 1 2 3 4 5\n", 2},          // too many fields
      {"a 1 2 3 4\n\nab 1 2 3 4\n", 3},         // multi-character glyph
      {"a 1 x 3 4\n", 1},                       // non-integer coordinate
      {"a 5 2 5 4\n", 1},                       // left == right
      {"a 1 2 3 4\na 1 9 3 4\n", 2},            // bottom > top
      {"a  1 2 3 4\n", 1},                      // double space
      {"a 1 2 3 4\nb -1 2 3 4\n", 2},           // negative coordinate
      {"a 1 2 3 4\nb 1 2 3 4\nc 01 2 3 4\n", 3},  // leading zero
      {"a 1 2 3 4\tx\n", 1},                    // tab inside a field
  };
  return corpus;
}

inline hwocr::BoxFile random_boxfile(std::mt19937& rng) {
  std::uniform_int_distribution<int> count(0, 40), coord(0, 3000), size(1, 200), letter(0, 25);
  hwocr::BoxFile bf;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const int l = coord(rng), b = coord(rng);
    bf.entries.push_back({std::string(1, char('a' + letter(rng))), {l, b, l + size(rng), b + size(rng)}});
  }
  return bf;
}

inline std::string random_word(std::mt19937& rng, int max_len = 8) {
  std::uniform_int_distribution<int> len(1, max_len), letter(0, 25);
  std::string w(std::size_t(len(rng)), 'a');
  for (auto& c : w) c = char('a' + letter(rng));
  return w;
}

/// `n` distinct words over a small alphabet so prefixes and suffixes repeat.
inline std::vector<std::string> random_wordlist(std::mt19937& rng, std::size_t n, int alphabet = 6) {
  std::uniform_int_distribution<int> len(1, 7), letter(0, alphabet - 1);
  std::set<std::string> s;
  const std::size_t cap = n * 50 + 100;
  for (std::size_t tries = 0; s.size() < n && tries < cap; ++tries) {
    std::string w(std::size_t(len(rng)), 'a');
    for (auto& c : w) c = char('a' + letter(rng));
    s.insert(w);
  }
  std::vector<std::string> out(s.begin(), s.end());
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace fixtures
