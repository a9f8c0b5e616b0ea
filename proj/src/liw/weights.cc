#include "eventshift/liw/weights.h"

#include "eventshift/error.h"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace eventshift::liw {

WeightSet compute_weights(const std::vector<double>& logliks, const std::vector<int>* token_counts) {
  if (logliks.empty()) throw std::invalid_argument("compute_weights: no log-likelihoods");
  if (token_counts && token_counts->size() != logliks.size())
    throw std::invalid_argument("compute_weights: token counts do not match");
  WeightSet w;
  w.logliks = logliks;
  w.n = logliks.size();
  std::vector<double> scores(logliks.size());
  for (std::size_t i = 0; i < logliks.size(); ++i) {
    if (!std::isfinite(logliks[i])) throw std::invalid_argument("compute_weights: non-finite log-likelihood");
    scores[i] = logliks[i];
    if (token_counts) scores[i] /= std::max(1, (*token_counts)[i]);
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  if (!(sum > 0.0) || !std::isfinite(sum)) throw TrainingError("compute_weights: likelihoods underflow");
  const double log_norm = std::log(static_cast<double>(w.n)) - std::log(sum);
  const double scale = static_cast<double>(w.n) / sum;
  for (double s : scores) {
    w.log_alphas.push_back(s - m + log_norm);
    w.alphas.push_back(std::exp(s - m) * scale);
  }
  return w;
}

WeightSet weigh_corpus(const LanguageModel& lm, const corpus::Corpus& train, bool per_token_normalized) {
  std::vector<double> ll;
  std::vector<int> lengths;
  for (const auto& d : train.documents)
    for (const auto& s : d.sentences) {
      ll.push_back(sentence_loglik(lm, s));
      lengths.push_back(static_cast<int>(s.tokens.size()));
    }
  return compute_weights(ll, per_token_normalized ? &lengths : nullptr);
}

std::vector<SidecarRow> sidecar_rows(const corpus::Corpus& train, const WeightSet& w) {
  std::vector<SidecarRow> rows;
  std::size_t k = 0;
  for (const auto& d : train.documents)
    for (std::size_t s = 0; s < d.sentences.size(); ++s, ++k) {
      if (k >= w.n) throw IntegrityError("weight set shorter than corpus");
      rows.push_back({d.doc_id, static_cast<int>(s), w.logliks[k], w.alphas[k]});
    }
  if (k != w.n) throw IntegrityError("weight set longer than corpus");
  return rows;
}

void write_sidecar(std::ostream& out, const std::vector<SidecarRow>& rows) {
  for (const auto& r : rows)
    out << nlohmann::json{{"doc_id", r.doc_id}, {"sentence_index", r.sentence_index}, {"loglik", r.loglik},
                          {"alpha", r.alpha}}
               .dump()
        << '\n';
}

void write_sidecar(const std::filesystem::path& file, const std::vector<SidecarRow>& rows) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  write_sidecar(out, rows);
}

std::vector<SidecarRow> read_sidecar(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read weights " + file.string());
  std::vector<SidecarRow> rows;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      rows.push_back({j.at("doc_id").get<std::string>(), j.at("sentence_index").get<int>(),
                      j.at("loglik").get<double>(), j.at("alpha").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), no);
    }
    if (!(rows.back().alpha >= 0.0)) throw ParseError("negative alpha", no);
  }
  return rows;
}

std::vector<double> alphas_for(const corpus::Corpus& train, const std::vector<SidecarRow>& rows) {
  std::map<std::pair<std::string, int>, double> by_key;
  for (const auto& r : rows)
    if (!by_key.emplace(std::make_pair(r.doc_id, r.sentence_index), r.alpha).second)
      throw IntegrityError("duplicate weight for " + r.doc_id + ":" + std::to_string(r.sentence_index));
  std::vector<double> out;
  for (const auto& d : train.documents)
    for (std::size_t s = 0; s < d.sentences.size(); ++s) {
      auto it = by_key.find({d.doc_id, static_cast<int>(s)});
      if (it == by_key.end())
        throw IntegrityError("no weight for " + d.doc_id + ":" + std::to_string(s));
      out.push_back(it->second);
    }
  if (out.size() != rows.size()) throw IntegrityError("weights cover sentences that are not in the corpus");
  return out;
}

}  // namespace eventshift::liw
