#pragma once

// Greedy longest-match sub-word vocabulary in the WordPiece style: a word is
// split into a word-initial piece followed by "##"-prefixed continuation
// pieces.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eventshift::encoders {

class SubwordVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecial = 5;

  SubwordVocab();

  // Whole words seen at least min_word_freq times, every character in both
  // positions, then the most frequent word-initial and continuation pieces
  // of 2..4 characters until max_size is reached. Words are lower-cased.
  static SubwordVocab build(const std::map<std::string, long>& word_counts, int max_size, int min_word_freq = 2);

  int size() const { return static_cast<int>(pieces_.size()); }
  int id(std::string_view piece) const;
  const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  bool is_special(int id) const { return id < kNumSpecial; }

  // Piece ids of one word; [UNK] when some character has no piece.
  std::vector<int> encode_word(std::string_view word) const;

  void save(const std::filesystem::path& file) const;
  static SubwordVocab load(const std::filesystem::path& file);

 private:
  void add(const std::string& piece);
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> ids_;
};

std::string lower_ascii(std::string_view s);

}  // namespace eventshift::encoders
