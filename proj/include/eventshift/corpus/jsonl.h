#pragma once

#include "eventshift/corpus/records.h"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>

namespace eventshift::corpus {

// Canonical interchange: one document per line,
//   {"doc_id", "domain", "sentences": [{"tokens": [{"text", "pos", "label",
//    "event_type", "char_start", "char_end"}]}]}
// with an optional "spans" array for auxiliary annotation spans.
nlohmann::json to_json(const DocumentRecord& d);
DocumentRecord document_from_json(const nlohmann::json& j);

std::string to_jsonl_line(const DocumentRecord& d);
DocumentRecord parse_jsonl_line(std::string_view line);

void write_jsonl(std::ostream& out, const Corpus& c);
Corpus read_jsonl(std::istream& in, Split split);

void write_corpus(const Corpus& c, const std::filesystem::path& file);
Corpus read_corpus(const std::filesystem::path& file, Split split);

}  // namespace eventshift::corpus
