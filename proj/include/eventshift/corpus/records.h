#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eventshift::corpus {

// Event typology used for analysis labels. Never predicted.
enum class EventType {
  kNone,
  kState,
  kIState,
  kOccurrence,
  kAspectual,
  kActivityPattern,
  kLongTermState,
};

inline constexpr EventType kAllEventTypes[] = {
    EventType::kNone,       EventType::kState,           EventType::kIState,
    EventType::kOccurrence, EventType::kAspectual,       EventType::kActivityPattern,
    EventType::kLongTermState,
};

std::string_view to_string(EventType t);
// Case-insensitive; accepts TimeML spellings such as "I_STATE" and
// "OCCURRENCE". Empty optional for names outside the typology.
std::optional<EventType> parse_event_type(std::string_view name);

struct TokenRecord {
  std::string text;
  std::optional<std::string> pos;
  int label = 0;  // 1 = event trigger
  std::optional<EventType> event_type;
  int char_start = 0;  // code-point offsets into the source document
  int char_end = 0;

  bool operator==(const TokenRecord&) const = default;
};

struct SentenceRecord {
  std::vector<TokenRecord> tokens;
  std::string doc_id;
  std::string domain;

  std::size_t size() const { return tokens.size(); }
  std::vector<int> labels() const;
  std::vector<std::string> words() const;
  bool operator==(const SentenceRecord&) const = default;
};

// Annotated span kept alongside the tokens (entities, raw event spans).
struct SpanRecord {
  std::string id;
  std::string type;
  int char_start = 0;
  int char_end = 0;
  std::string surface;

  bool operator==(const SpanRecord&) const = default;
};

struct DocumentRecord {
  std::string doc_id;
  std::string domain;
  std::vector<SentenceRecord> sentences;
  std::vector<SpanRecord> spans;

  std::size_t num_tokens() const;
  bool operator==(const DocumentRecord&) const = default;
};

enum class Split { kTrain, kDev, kTest };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct Corpus {
  std::vector<DocumentRecord> documents;
  Split split = Split::kTrain;

  std::size_t num_sentences() const;
  std::size_t num_tokens() const;
  // Flattened copy of every sentence in document order.
  std::vector<SentenceRecord> sentences() const;
  bool operator==(const Corpus&) const = default;
};

// Position of one token inside a corpus.
struct TokenRef {
  int doc = 0;
  int sentence = 0;
  int token = 0;
  auto operator<=>(const TokenRef&) const = default;
};

// Throws IntegrityError when a record breaks its invariants: empty text,
// char_start >= char_end, label outside {0,1}, a typed negative token,
// empty sentences, or duplicate doc ids.
void validate(const TokenRecord& t);
void validate(const DocumentRecord& d);
void validate(const Corpus& c);

}  // namespace eventshift::corpus
