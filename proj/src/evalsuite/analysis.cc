#include "eventshift/evalsuite/analysis.h"

#include "eventshift/corpus/tokenizer.h"
#include "eventshift/error.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <ostream>
#include <random>

namespace eventshift::evalsuite {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

MorphReport morph_pattern_report(std::span<const corpus::TokenRecord> events) {
  MorphReport r;
  for (const corpus::TokenRecord& t : events) {
    ++r.total;
    const std::string w = corpus::case_fold(t.text);
    const std::string pos = t.pos.value_or("");
    const bool verbal = pos == "VERB" || pos == "AUX";
    const bool ed = ends_with(w, "ed");
    const bool ing = ends_with(w, "ing");
    const bool tion = ends_with(w, "tion") || ends_with(w, "sion");
    r.ed += ed;
    r.ing += ing;
    r.tion_sion += tion;
    r.ed_pos += ed && verbal;
    r.ing_pos += ing && verbal;
    r.tion_sion_pos += tion && pos == "NOUN";
    r.any += ed || ing || tion;
  }
  r.any_fraction = r.total ? static_cast<double>(r.any) / static_cast<double>(r.total) : 0.0;
  return r;
}

std::vector<TypeAnalysisRow> sample_type_analysis(const TypeAnalysisInput& input, std::size_t k,
                                                  unsigned long seed) {
  if (!input.gold || !input.partition) throw ConfigError("type analysis needs gold corpus and partition");
  const corpus::Corpus& gold = *input.gold;
  std::vector<std::size_t> sentence_base(gold.documents.size(), 0);
  for (std::size_t d = 1; d < gold.documents.size(); ++d)
    sentence_base[d] = sentence_base[d - 1] + gold.documents[d - 1].sentences.size();

  std::vector<corpus::TokenRef> population;
  for (const corpus::TokenRef& r : input.partition->oov)
    if (gold.documents[r.doc].sentences[r.sentence].tokens[r.token].label == 1) population.push_back(r);
  std::sort(population.begin(), population.end());

  if (k > population.size()) {
    spdlog::warn("type analysis: requested {} tokens but only {} OOV events in {}; using all", k,
                 population.size(), input.target);
    k = population.size();
  }
  std::vector<corpus::TokenRef> sample;
  std::mt19937_64 rng(seed);
  std::sample(population.begin(), population.end(), std::back_inserter(sample), k, rng);

  std::vector<TypeAnalysisRow> rows;
  rows.reserve(sample.size() * input.models.size());
  for (const corpus::TokenRef& r : sample) {
    const auto& tok = gold.documents[r.doc].sentences[r.sentence].tokens[r.token];
    for (const auto& [model, pred] : input.models) {
      const std::size_t si = sentence_base[r.doc] + r.sentence;
      if (si >= pred.size() || static_cast<std::size_t>(r.token) >= pred[si].size())
        throw IntegrityError("predictions of model " + model + " do not cover the gold corpus");
      rows.push_back({tok.text, model, input.target, tok.event_type.value_or(corpus::EventType::kNone),
                      pred[si][r.token] == 1 ? 1 : 0});
    }
  }
  return rows;
}

void write_type_analysis_csv(std::ostream& out, std::span<const TypeAnalysisRow> rows) {
  out << "token,model,target,event_type,correct\n";
  for (const TypeAnalysisRow& r : rows)
    out << csv_field(r.token) << ',' << csv_field(r.model) << ',' << csv_field(r.target) << ','
        << corpus::to_string(r.event_type) << ',' << r.correct << '\n';
}

}  // namespace eventshift::evalsuite
