#include "eventshift/corpus/formats.h"

#include "eventshift/corpus/tokenizer.h"
#include "eventshift/error.h"

#include <spdlog/spdlog.h>

#include <charconv>
#include <map>
#include <sstream>

namespace eventshift::corpus {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

int parse_int(std::string_view s, std::size_t line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
    throw ParseError("bad offset '" + std::string(s) + "'", line);
  return v;
}

bool iequals(std::string_view a, std::string_view b) {
  return case_fold(a) == case_fold(b);
}

// BRAT writes newlines inside spans as spaces.
std::string flatten_newlines(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

DocumentRecord parse_brat(std::string_view ann_text, std::string_view txt_text,
                          const std::string& doc_id, const std::string& domain,
                          ParseDiagnostics* diag) {
  ParseDiagnostics local;
  ParseDiagnostics& d = diag ? *diag : local;

  DocumentRecord doc;
  doc.doc_id = doc_id;
  doc.domain = domain;
  doc.sentences = to_sentences(tokenize_sentences(txt_text), doc_id, domain);
  Utf8Text text(txt_text);

  struct PendingEvent {
    int start, end;
    std::optional<EventType> type;
  };
  std::map<std::string, PendingEvent> events;
  std::vector<std::string> event_order;

  std::size_t line_no = 0;
  for (std::string_view line : split(ann_text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line[0] == 'A') {
      auto fields = split(line, '\t');
      if (fields.size() < 2) throw ParseError("malformed attribute line", line_no);
      auto parts = split(fields[1], ' ');
      if (parts.size() == 3 && (iequals(parts[0], "class") || iequals(parts[0], "type") ||
                                iequals(parts[0], "eventtype"))) {
        auto it = events.find(std::string(parts[1]));
        if (it != events.end()) {
          auto t = parse_event_type(parts[2]);
          if (!t) {
            d.warnings.push_back("unknown event class '" + std::string(parts[2]) + "'");
            t = EventType::kNone;
          }
          it->second.type = t;
        }
      }
      continue;
    }
    if (line[0] != 'T') continue;

    auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError("T-line must have 3 tab-separated fields", line_no);
    auto head = split(fields[1], ' ');
    if (head.size() != 3) {
      if (fields[1].find(';') != std::string_view::npos)
        throw ParseError("discontinuous spans are not supported", line_no);
      throw ParseError("T-line needs '<TYPE> <start> <end>'", line_no);
    }
    SpanRecord span;
    span.id = std::string(fields[0]);
    span.type = std::string(head[0]);
    span.char_start = parse_int(head[1], line_no);
    span.char_end = parse_int(head[2], line_no);
    span.surface = std::string(fields[2]);
    if (span.char_start >= span.char_end) throw ParseError("empty or reversed span", line_no);

    const std::string slice = text.slice(span.char_start, span.char_end);
    if (flatten_newlines(slice) != flatten_newlines(span.surface))
      throw IntegrityError("line " + std::to_string(line_no) + ": span " + span.id + " surface '" +
                           span.surface + "' does not match text '" + slice + "'");
    if (iequals(span.type, "EVENT")) {
      events[span.id] = {span.char_start, span.char_end, std::nullopt};
      event_order.push_back(span.id);
    }
    doc.spans.push_back(std::move(span));
  }

  for (const std::string& id : event_order) {
    const PendingEvent& e = events[id];
    ++d.event_spans;
    SpanLabeling l = label_span(doc.sentences, e.start, e.end, e.type);
    if (!l.aligned) {
      ++d.misaligned_spans;
      spdlog::debug("{}: event span {} [{}, {}) is not token-aligned", doc_id, id, e.start, e.end);
    }
  }
  for (const std::string& w : d.warnings) spdlog::warn("{}: {}", doc_id, w);
  return doc;
}

}  // namespace eventshift::corpus
