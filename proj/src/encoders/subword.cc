#include "eventshift/encoders/subword.h"

#include "eventshift/error.h"

#include <algorithm>
#include <fstream>
#include <set>

namespace eventshift::encoders {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

SubwordVocab::SubwordVocab() {
  for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"}) add(s);
}

void SubwordVocab::add(const std::string& piece) {
  if (ids_.count(piece)) return;
  ids_.emplace(piece, static_cast<int>(pieces_.size()));
  pieces_.push_back(piece);
}

int SubwordVocab::id(std::string_view piece) const {
  auto it = ids_.find(std::string(piece));
  return it == ids_.end() ? kUnk : it->second;
}

SubwordVocab SubwordVocab::build(const std::map<std::string, long>& word_counts, int max_size, int min_word_freq) {
  SubwordVocab v;
  std::map<std::string, long> lowered;
  for (const auto& [w, c] : word_counts) lowered[lower_ascii(w)] += c;

  std::set<std::string> chars;
  std::map<std::string, long> pieces;
  for (const auto& [w, c] : lowered) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      chars.insert(w.substr(i, 1));
      for (std::size_t len = 2; len <= 4 && i + len <= w.size(); ++len) {
        if (i + len == w.size() && i == 0) continue;  // the whole word
        pieces[(i == 0 ? "" : "##") + w.substr(i, len)] += c;
      }
    }
  }
  for (const std::string& ch : chars) {
    v.add(ch);
    v.add("##" + ch);
  }

  std::vector<std::pair<long, std::string>> words;
  for (const auto& [w, c] : lowered)
    if (c >= min_word_freq && w.size() > 1) words.push_back({-c, w});
  std::sort(words.begin(), words.end());
  // Half the remaining budget goes to whole words, the rest to pieces.
  const int budget = std::max(0, max_size - v.size());
  const int word_budget = budget / 2;
  for (int i = 0; i < static_cast<int>(words.size()) && i < word_budget; ++i) v.add(words[i].second);

  std::vector<std::pair<long, std::string>> ranked;
  for (const auto& [p, c] : pieces) ranked.push_back({-c, p});
  std::sort(ranked.begin(), ranked.end());
  for (const auto& [neg, p] : ranked) {
    if (v.size() >= max_size) break;
    v.add(p);
  }
  return v;
}

std::vector<int> SubwordVocab::encode_word(std::string_view raw) const {
  const std::string word = lower_ascii(raw);
  std::vector<int> out;
  if (auto it = ids_.find(word); it != ids_.end()) return {it->second};
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    int found = -1;
    while (end > start) {
      std::string cand = (start == 0 ? "" : "##") + word.substr(start, end - start);
      if (auto it = ids_.find(cand); it != ids_.end()) {
        found = it->second;
        break;
      }
      --end;
    }
    if (found < 0) return {kUnk};
    out.push_back(found);
    start = end;
  }
  if (out.empty()) out.push_back(kUnk);
  return out;
}

void SubwordVocab::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const std::string& p : pieces_) out << p << '\n';
}

SubwordVocab SubwordVocab::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read vocabulary " + file.string());
  SubwordVocab v;
  v.pieces_.clear();
  v.ids_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (v.ids_.count(line)) throw ParseError(file.string() + ": duplicate piece '" + line + "'");
    v.add(line);
  }
  if (v.size() < kNumSpecial || v.piece(kMask) != "[MASK]") throw ParseError(file.string() + ": missing special tokens");
  return v;
}

}  // namespace eventshift::encoders
