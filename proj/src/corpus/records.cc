#include "eventshift/corpus/records.h"

#include "eventshift/error.h"

#include <algorithm>
#include <cctype>
#include <set>

namespace eventshift::corpus {

namespace {

std::string normalize_type_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(EventType t) {
  switch (t) {
    case EventType::kNone: return "None";
    case EventType::kState: return "State";
    case EventType::kIState: return "I-State";
    case EventType::kOccurrence: return "Occurrence";
    case EventType::kAspectual: return "Aspectual";
    case EventType::kActivityPattern: return "ActivityPattern";
    case EventType::kLongTermState: return "LongTermState";
  }
  return "None";
}

std::optional<EventType> parse_event_type(std::string_view name) {
  const std::string n = normalize_type_name(name);
  for (EventType t : kAllEventTypes)
    if (normalize_type_name(to_string(t)) == n) return t;
  return std::nullopt;
}

std::vector<int> SentenceRecord::labels() const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const TokenRecord& t : tokens) out.push_back(t.label);
  return out;
}

std::vector<std::string> SentenceRecord::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const TokenRecord& t : tokens) out.push_back(t.text);
  return out;
}

std::size_t DocumentRecord::num_tokens() const {
  std::size_t n = 0;
  for (const SentenceRecord& s : sentences) n += s.size();
  return n;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split: " + std::string(s));
}

std::size_t Corpus::num_sentences() const {
  std::size_t n = 0;
  for (const DocumentRecord& d : documents) n += d.sentences.size();
  return n;
}

std::size_t Corpus::num_tokens() const {
  std::size_t n = 0;
  for (const DocumentRecord& d : documents) n += d.num_tokens();
  return n;
}

std::vector<SentenceRecord> Corpus::sentences() const {
  std::vector<SentenceRecord> out;
  out.reserve(num_sentences());
  for (const DocumentRecord& d : documents)
    out.insert(out.end(), d.sentences.begin(), d.sentences.end());
  return out;
}

void validate(const TokenRecord& t) {
  if (t.text.empty()) throw IntegrityError("token with empty text");
  if (t.char_start >= t.char_end)
    throw IntegrityError("token '" + t.text + "' has char_start >= char_end");
  if (t.label != 0 && t.label != 1) throw IntegrityError("token label must be 0 or 1");
  if (t.label == 0 && t.event_type && *t.event_type != EventType::kNone)
    throw IntegrityError("non-event token '" + t.text + "' carries an event type");
}

void validate(const DocumentRecord& d) {
  for (const SentenceRecord& s : d.sentences) {
    if (s.tokens.empty()) throw IntegrityError("empty sentence in document " + d.doc_id);
    if (s.doc_id != d.doc_id) throw IntegrityError("sentence doc_id differs from document " + d.doc_id);
    for (const TokenRecord& t : s.tokens) validate(t);
  }
}

void validate(const Corpus& c) {
  std::set<std::string> ids;
  for (const DocumentRecord& d : c.documents) {
    if (!ids.insert(d.doc_id).second) throw IntegrityError("duplicate doc_id: " + d.doc_id);
    validate(d);
  }
}

}  // namespace eventshift::corpus
