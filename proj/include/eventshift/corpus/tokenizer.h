#pragma once

#include "eventshift/corpus/records.h"

#include <string>
#include <string_view>
#include <vector>

namespace eventshift::corpus {

// UTF-8 text indexed by code point. Offsets in every record are code-point
// offsets, which is what BRAT uses.
class Utf8Text {
 public:
  explicit Utf8Text(std::string_view text);

  int length() const { return static_cast<int>(byte_offsets_.size()) - 1; }
  // Code points [start, end) as UTF-8. Throws IntegrityError when out of range.
  std::string slice(int start, int end) const;
  char32_t at(int i) const { return code_points_[static_cast<std::size_t>(i)]; }

 private:
  std::string_view text_;
  std::vector<char32_t> code_points_;
  std::vector<std::size_t> byte_offsets_;  // length()+1 entries
};

struct RawToken {
  std::string text;
  int char_start = 0;
  int char_end = 0;
};

// Whitespace and punctuation splitting. Every ASCII punctuation mark is its
// own token except '.' and ',' between digits and '-' or '\'' between
// letters/digits, which stay inside the word.
std::vector<RawToken> tokenize(std::string_view text);

// Tokenizes and groups into sentences. A sentence ends after '.', '!' or
// '?' tokens and at blank lines.
std::vector<std::vector<RawToken>> tokenize_sentences(std::string_view text);

// Builds sentence records from raw tokens (labels all 0).
std::vector<SentenceRecord> to_sentences(const std::vector<std::vector<RawToken>>& raw,
                                         const std::string& doc_id, const std::string& domain);

// Labels every token overlapping [char_start, char_end). Returns how many
// tokens were labeled and whether the span boundaries coincide with token
// boundaries.
struct SpanLabeling {
  int tokens_labeled = 0;
  bool aligned = false;
};
SpanLabeling label_span(std::vector<SentenceRecord>& sentences, int char_start, int char_end,
                        std::optional<EventType> type);

// ASCII lower-casing; bytes outside ASCII are kept.
std::string case_fold(std::string_view s);

}  // namespace eventshift::corpus
