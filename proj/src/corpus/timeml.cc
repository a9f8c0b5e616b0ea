#include "eventshift/corpus/formats.h"

#include "eventshift/corpus/tokenizer.h"
#include "eventshift/error.h"

#include <spdlog/spdlog.h>

#include <cctype>
#include <optional>

namespace eventshift::corpus {

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct Tag {
  std::string name;
  bool closing = false;
  bool self_closing = false;
  std::string body;  // attribute text
};

Tag parse_tag(std::string_view inner, std::size_t line) {
  Tag t;
  std::size_t i = 0;
  if (i < inner.size() && inner[i] == '/') {
    t.closing = true;
    ++i;
  }
  if (!inner.empty() && inner.back() == '/') {
    t.self_closing = true;
    inner.remove_suffix(1);
  }
  const std::size_t name_start = i;
  while (i < inner.size() && !std::isspace(static_cast<unsigned char>(inner[i]))) ++i;
  t.name = std::string(inner.substr(name_start, i - name_start));
  if (t.name.empty()) throw ParseError("tag without a name", line);
  t.body = std::string(inner.substr(i));
  return t;
}

std::optional<std::string> attribute(const std::string& body, std::string_view key) {
  std::size_t pos = 0;
  while ((pos = body.find(key, pos)) != std::string::npos) {
    const bool word_start = pos == 0 || std::isspace(static_cast<unsigned char>(body[pos - 1]));
    std::size_t j = pos + key.size();
    while (j < body.size() && std::isspace(static_cast<unsigned char>(body[j]))) ++j;
    if (word_start && j < body.size() && body[j] == '=') {
      ++j;
      while (j < body.size() && std::isspace(static_cast<unsigned char>(body[j]))) ++j;
      if (j < body.size() && (body[j] == '"' || body[j] == '\'')) {
        const char q = body[j];
        const std::size_t end = body.find(q, j + 1);
        if (end != std::string::npos) return body.substr(j + 1, end - j - 1);
      }
    }
    pos += key.size();
  }
  return std::nullopt;
}

}  // namespace

DocumentRecord parse_timeml(std::string_view xml, const std::string& doc_id, const std::string& domain,
                            ParseDiagnostics* diag) {
  ParseDiagnostics local;
  ParseDiagnostics& d = diag ? *diag : local;

  struct OpenEvent {
    int start;
    std::optional<EventType> type;
  };
  struct EventSpan {
    int start, end;
    std::optional<EventType> type;
  };

  std::string text;
  int cp_len = 0;
  std::vector<std::string> stack;
  std::vector<OpenEvent> open_events;
  std::vector<EventSpan> spans;
  std::size_t line = 1;

  auto emit_byte = [&](char c) {
    text.push_back(c);
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++cp_len;
  };
  auto emit_cp = [&](char32_t cp) {
    std::string tmp;
    append_utf8(tmp, cp);
    for (char c : tmp) emit_byte(c);
  };

  std::size_t i = 0;
  while (i < xml.size()) {
    const char c = xml[i];
    if (c == '\n') ++line;
    if (c == '<') {
      auto skip_to = [&](std::string_view terminator) {
        const std::size_t end = xml.find(terminator, i);
        if (end == std::string_view::npos) throw ParseError("unterminated markup", line);
        for (std::size_t k = i; k < end; ++k)
          if (xml[k] == '\n') ++line;
        i = end + terminator.size();
      };
      if (xml.substr(i, 4) == "<!--") { skip_to("-->"); continue; }
      if (xml.substr(i, 2) == "<?") { skip_to("?>"); continue; }
      if (xml.substr(i, 2) == "<!") { skip_to(">"); continue; }
      const std::size_t end = xml.find('>', i);
      if (end == std::string_view::npos) throw ParseError("unterminated tag", line);
      Tag tag = parse_tag(xml.substr(i + 1, end - i - 1), line);
      for (std::size_t k = i; k < end; ++k)
        if (xml[k] == '\n') ++line;
      i = end + 1;
      if (tag.self_closing) continue;
      if (tag.closing) {
        if (stack.empty() || stack.back() != tag.name)
          throw ParseError("unbalanced closing tag </" + tag.name + ">", line);
        stack.pop_back();
        if (tag.name == "EVENT") {
          spans.push_back({open_events.back().start, cp_len, open_events.back().type});
          open_events.pop_back();
        }
        continue;
      }
      stack.push_back(tag.name);
      if (tag.name == "EVENT") {
        std::optional<EventType> type;
        if (auto cls = attribute(tag.body, "class")) {
          type = parse_event_type(*cls);
          if (!type) {
            d.warnings.push_back("unknown EVENT class '" + *cls + "'");
            type = EventType::kNone;
          }
        }
        open_events.push_back({cp_len, type});
      }
      continue;
    }
    if (c == '>') throw ParseError("stray '>'", line);
    if (c == '&') {
      const std::size_t semi = xml.find(';', i);
      if (semi == std::string_view::npos || semi - i > 10) throw ParseError("bad character entity", line);
      const std::string_view ent = xml.substr(i + 1, semi - i - 1);
      if (ent == "amp") emit_byte('&');
      else if (ent == "lt") emit_byte('<');
      else if (ent == "gt") emit_byte('>');
      else if (ent == "quot") emit_byte('"');
      else if (ent == "apos") emit_byte('\'');
      else if (!ent.empty() && ent[0] == '#') {
        const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
        try {
          emit_cp(static_cast<char32_t>(std::stoul(std::string(ent.substr(hex ? 2 : 1)), nullptr, hex ? 16 : 10)));
        } catch (const std::exception&) {
          throw ParseError("bad numeric entity &" + std::string(ent) + ";", line);
        }
      } else {
        throw ParseError("unknown entity &" + std::string(ent) + ";", line);
      }
      i = semi + 1;
      continue;
    }
    emit_byte(c);
    ++i;
  }
  if (!stack.empty()) throw ParseError("unclosed tag <" + stack.back() + ">", line);

  DocumentRecord doc;
  doc.doc_id = doc_id;
  doc.domain = domain;
  doc.sentences = to_sentences(tokenize_sentences(text), doc_id, domain);
  Utf8Text u(text);
  int n = 0;
  for (const EventSpan& e : spans) {
    ++d.event_spans;
    if (e.start == e.end) continue;
    SpanLabeling l = label_span(doc.sentences, e.start, e.end, e.type);
    if (!l.aligned) ++d.misaligned_spans;
    doc.spans.push_back({"E" + std::to_string(++n), "EVENT", e.start, e.end, u.slice(e.start, e.end)});
  }
  for (const std::string& w : d.warnings) spdlog::warn("{}: {}", doc_id, w);
  return doc;
}

}  // namespace eventshift::corpus
