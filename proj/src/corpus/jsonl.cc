#include "eventshift/corpus/jsonl.h"

#include "eventshift/error.h"

#include <fstream>
#include <istream>
#include <ostream>

namespace eventshift::corpus {

using nlohmann::json;

json to_json(const DocumentRecord& d) {
  json sentences = json::array();
  for (const SentenceRecord& s : d.sentences) {
    json tokens = json::array();
    for (const TokenRecord& t : s.tokens) {
      tokens.push_back({
          {"text", t.text},
          {"pos", t.pos ? json(*t.pos) : json(nullptr)},
          {"label", t.label},
          {"event_type", t.event_type ? json(std::string(to_string(*t.event_type))) : json(nullptr)},
          {"char_start", t.char_start},
          {"char_end", t.char_end},
      });
    }
    sentences.push_back({{"tokens", std::move(tokens)}});
  }
  json j = {{"doc_id", d.doc_id}, {"domain", d.domain}, {"sentences", std::move(sentences)}};
  if (!d.spans.empty()) {
    json spans = json::array();
    for (const SpanRecord& s : d.spans)
      spans.push_back({{"id", s.id}, {"type", s.type}, {"char_start", s.char_start},
                       {"char_end", s.char_end}, {"surface", s.surface}});
    j["spans"] = std::move(spans);
  }
  return j;
}

DocumentRecord document_from_json(const json& j) {
  try {
    DocumentRecord d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.domain = j.at("domain").get<std::string>();
    for (const json& js : j.at("sentences")) {
      SentenceRecord s;
      s.doc_id = d.doc_id;
      s.domain = d.domain;
      for (const json& jt : js.at("tokens")) {
        TokenRecord t;
        t.text = jt.at("text").get<std::string>();
        if (jt.contains("pos") && !jt["pos"].is_null()) t.pos = jt["pos"].get<std::string>();
        t.label = jt.at("label").get<int>();
        if (jt.contains("event_type") && !jt["event_type"].is_null()) {
          const auto name = jt["event_type"].get<std::string>();
          auto type = parse_event_type(name);
          if (!type) throw ParseError("unknown event_type '" + name + "'");
          t.event_type = type;
        }
        t.char_start = jt.at("char_start").get<int>();
        t.char_end = jt.at("char_end").get<int>();
        s.tokens.push_back(std::move(t));
      }
      d.sentences.push_back(std::move(s));
    }
    if (j.contains("spans")) {
      for (const json& sp : j["spans"])
        d.spans.push_back({sp.at("id").get<std::string>(), sp.at("type").get<std::string>(),
                           sp.at("char_start").get<int>(), sp.at("char_end").get<int>(),
                           sp.at("surface").get<std::string>()});
    }
    return d;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid document JSON: ") + e.what());
  }
}

std::string to_jsonl_line(const DocumentRecord& d) { return to_json(d).dump(); }

DocumentRecord parse_jsonl_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return document_from_json(j);
}

void write_jsonl(std::ostream& out, const Corpus& c) {
  for (const DocumentRecord& d : c.documents) out << to_jsonl_line(d) << '\n';
}

Corpus read_jsonl(std::istream& in, Split split) {
  Corpus c;
  c.split = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      c.documents.push_back(parse_jsonl_line(line));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  validate(c);
  return c;
}

void write_corpus(const Corpus& c, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  write_jsonl(out, c);
}

Corpus read_corpus(const std::filesystem::path& file, Split split) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read corpus " + file.string());
  return read_jsonl(in, split);
}

}  // namespace eventshift::corpus
