#include "eventshift/corpus/ingest.h"

#include "eventshift/corpus/jsonl.h"
#include "eventshift/error.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace eventshift::corpus {

namespace fs = std::filesystem;

InputFormat input_format_from_string(const std::string& s) {
  if (s == "auto") return InputFormat::kAuto;
  if (s == "jsonl") return InputFormat::kJsonl;
  if (s == "brat") return InputFormat::kBrat;
  if (s == "timeml") return InputFormat::kTimeml;
  throw ConfigError("unknown input format '" + s + "' (expected auto, jsonl, brat or timeml)");
}

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool is_timeml(const fs::path& p) { return p.extension() == ".tml" || p.extension() == ".xml"; }

InputFormat detect(const fs::path& p) {
  if (fs::is_directory(p)) {
    bool ann = false, tml = false;
    for (const auto& e : fs::directory_iterator(p)) {
      ann |= e.path().extension() == ".ann";
      tml |= is_timeml(e.path());
    }
    if (ann && tml) throw ConfigError(p.string() + " mixes BRAT and TimeML files; pass the format explicitly");
    if (ann) return InputFormat::kBrat;
    if (tml) return InputFormat::kTimeml;
    throw ConfigError(p.string() + " holds no .ann, .tml or .xml files");
  }
  if (p.extension() == ".jsonl") return InputFormat::kJsonl;
  if (p.extension() == ".ann") return InputFormat::kBrat;
  if (is_timeml(p)) return InputFormat::kTimeml;
  throw ConfigError("cannot tell the format of " + p.string());
}

DocumentRecord load_one(const fs::path& p, InputFormat f, const std::string& domain, ParseDiagnostics* diag) {
  const std::string id = p.stem().string();
  if (f == InputFormat::kBrat) {
    fs::path txt = p;
    txt.replace_extension(".txt");
    if (!fs::is_regular_file(txt)) throw ConfigError("missing text file " + txt.string() + " for " + p.string());
    try {
      return parse_brat(slurp(p), slurp(txt), id, domain, diag);
    } catch (const ParseError& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  }
  try {
    return parse_timeml(slurp(p), id, domain.empty() ? "news" : domain, diag);
  } catch (const ParseError& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

}  // namespace

Corpus load_corpus(const fs::path& path, InputFormat format, const std::string& domain, Split split,
                   ParseDiagnostics* diag) {
  if (!fs::exists(path)) throw ConfigError("no such file or directory: " + path.string());
  if (format == InputFormat::kAuto) format = detect(path);
  if (format == InputFormat::kJsonl) {
    Corpus c = read_corpus(path, split);
    if (!domain.empty())
      for (auto& d : c.documents) {
        d.domain = domain;
        for (auto& s : d.sentences) s.domain = domain;
      }
    return c;
  }
  Corpus c;
  c.split = split;
  if (!fs::is_directory(path)) {
    c.documents.push_back(load_one(path, format, domain, diag));
    return c;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    const auto& p = e.path();
    if (format == InputFormat::kBrat ? p.extension() == ".ann" : is_timeml(p)) files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) c.documents.push_back(load_one(f, format, domain, diag));
  return c;
}

}  // namespace eventshift::corpus
