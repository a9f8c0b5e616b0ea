#pragma once

#include "eventshift/corpus/records.h"

#include <string>
#include <string_view>
#include <vector>

namespace eventshift::corpus {

struct ParseDiagnostics {
  std::vector<std::string> warnings;
  int event_spans = 0;
  // Event spans whose boundaries fall inside a token. Every overlapped token
  // is still labeled.
  int misaligned_spans = 0;
};

// BRAT standoff: T-lines `T<id>\t<TYPE> <start> <end>\t<surface>` over the
// paired raw text. Spans typed EVENT label every overlapped token; other
// types are kept as auxiliary spans. Attribute lines
// `A<id>\t<Class|Type|EventType> T<id> <value>` set the event type of the
// referenced EVENT span. Other annotation kinds are ignored.
//
// Throws ParseError (with line number) on malformed T-lines and
// IntegrityError when a surface string disagrees with the text slice.
DocumentRecord parse_brat(std::string_view ann_text, std::string_view txt_text,
                          const std::string& doc_id = "doc", const std::string& domain = "",
                          ParseDiagnostics* diag = nullptr);

// TimeML subset: EVENT elements (optional class attribute) label their
// tokens; every other element is stripped. Character entities are decoded
// and offsets refer to the stripped text. Throws ParseError on unbalanced
// tags. Unknown classes produce EventType::kNone and a warning.
DocumentRecord parse_timeml(std::string_view xml_text, const std::string& doc_id = "doc",
                            const std::string& domain = "news", ParseDiagnostics* diag = nullptr);

}  // namespace eventshift::corpus
