#include "eventshift/corpus/tokenizer.h"

#include "eventshift/error.h"

#include <cctype>

namespace eventshift::corpus {

namespace {

bool is_space(char32_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_punct(char32_t c) { return c < 0x80 && std::ispunct(static_cast<int>(c)); }
bool is_alnum(char32_t c) { return c >= 0x80 || std::isalnum(static_cast<int>(c)); }
bool is_digit(char32_t c) { return c < 0x80 && std::isdigit(static_cast<int>(c)); }

// Decodes one UTF-8 sequence. Invalid bytes decode as themselves.
char32_t decode(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t extra = 0;
  char32_t cp = b0;
  if (b0 >= 0xF0 && b0 < 0xF8) { extra = 3; cp = b0 & 0x07; }
  else if (b0 >= 0xE0 && b0 < 0xF0) { extra = 2; cp = b0 & 0x0F; }
  else if (b0 >= 0xC0 && b0 < 0xE0) { extra = 1; cp = b0 & 0x1F; }
  if (i + extra >= s.size()) extra = 0;
  for (std::size_t k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) { extra = 0; break; }
    cp = (cp << 6) | (b & 0x3F);
  }
  if (extra == 0) cp = b0;
  i += extra + 1;
  return cp;
}

}  // namespace

Utf8Text::Utf8Text(std::string_view text) : text_(text) {
  std::size_t i = 0;
  while (i < text.size()) {
    byte_offsets_.push_back(i);
    code_points_.push_back(decode(text, i));
  }
  byte_offsets_.push_back(text.size());
}

std::string Utf8Text::slice(int start, int end) const {
  if (start < 0 || end < start || end > length())
    throw IntegrityError("offsets [" + std::to_string(start) + ", " + std::to_string(end) +
                         ") outside text of length " + std::to_string(length()));
  const std::size_t b = byte_offsets_[static_cast<std::size_t>(start)];
  const std::size_t e = byte_offsets_[static_cast<std::size_t>(end)];
  return std::string(text_.substr(b, e - b));
}

std::vector<RawToken> tokenize(std::string_view text) {
  Utf8Text u(text);
  std::vector<RawToken> out;
  const int n = u.length();
  int i = 0;
  while (i < n) {
    const char32_t c = u.at(i);
    if (is_space(c)) { ++i; continue; }
    if (is_punct(c)) {
      out.push_back({u.slice(i, i + 1), i, i + 1});
      ++i;
      continue;
    }
    int j = i + 1;
    while (j < n) {
      const char32_t d = u.at(j);
      if (is_space(d)) break;
      if (is_punct(d)) {
        const bool next_ok = j + 1 < n;
        const bool numeric = (d == '.' || d == ',') && is_digit(u.at(j - 1)) && next_ok && is_digit(u.at(j + 1));
        const bool joiner = (d == '-' || d == '\'') && is_alnum(u.at(j - 1)) && next_ok && is_alnum(u.at(j + 1));
        if (!numeric && !joiner) break;
      }
      ++j;
    }
    out.push_back({u.slice(i, j), i, j});
    i = j;
  }
  return out;
}

std::vector<std::vector<RawToken>> tokenize_sentences(std::string_view text) {
  Utf8Text u(text);
  std::vector<RawToken> tokens = tokenize(text);
  std::vector<std::vector<RawToken>> out;
  std::vector<RawToken> cur;
  int prev_end = 0;
  for (RawToken& t : tokens) {
    if (!cur.empty()) {
      int newlines = 0;
      for (int k = prev_end; k < t.char_start; ++k)
        if (u.at(k) == '\n') ++newlines;
      if (newlines >= 2) out.push_back(std::move(cur)), cur.clear();
    }
    prev_end = t.char_end;
    const bool final_punct = t.text == "." || t.text == "!" || t.text == "?";
    cur.push_back(std::move(t));
    if (final_punct) out.push_back(std::move(cur)), cur.clear();
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<SentenceRecord> to_sentences(const std::vector<std::vector<RawToken>>& raw,
                                         const std::string& doc_id, const std::string& domain) {
  std::vector<SentenceRecord> out;
  out.reserve(raw.size());
  for (const auto& s : raw) {
    SentenceRecord rec;
    rec.doc_id = doc_id;
    rec.domain = domain;
    for (const RawToken& t : s) {
      TokenRecord tok;
      tok.text = t.text;
      tok.char_start = t.char_start;
      tok.char_end = t.char_end;
      rec.tokens.push_back(std::move(tok));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

SpanLabeling label_span(std::vector<SentenceRecord>& sentences, int char_start, int char_end,
                        std::optional<EventType> type) {
  SpanLabeling result;
  bool starts_on_token = false;
  bool ends_on_token = false;
  for (SentenceRecord& s : sentences) {
    for (TokenRecord& t : s.tokens) {
      if (t.char_start < char_end && char_start < t.char_end) {
        if (t.label == 0) ++result.tokens_labeled;
        t.label = 1;
        if (type) t.event_type = type;
        if (t.char_start == char_start) starts_on_token = true;
        if (t.char_end == char_end) ends_on_token = true;
      }
    }
  }
  result.aligned = starts_on_token && ends_on_token;
  return result;
}

std::string case_fold(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace eventshift::corpus
