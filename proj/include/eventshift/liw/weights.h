#pragma once

// Per-sentence training weights from target-LM likelihoods:
//   alpha_t = L_t / sum_i L_i * N
// evaluated in log space after subtracting the largest log-likelihood.

#include "eventshift/corpus/records.h"
#include "eventshift/liw/lm.h"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace eventshift::liw {

struct WeightSet {
  std::vector<double> logliks;     // log L_t as supplied
  std::vector<double> log_alphas;  // log alpha_t, finite even where alpha_t underflows
  std::vector<double> alphas;
  std::size_t n = 0;
};

// logliks must be non-empty and finite. token_counts, when given, switches to
// the per-token-normalized variant (log L_t / length_t); off by default.
WeightSet compute_weights(const std::vector<double>& logliks, const std::vector<int>* token_counts = nullptr);

struct SidecarRow {
  std::string doc_id;
  int sentence_index = 0;  // within the document
  double loglik = 0.0;
  double alpha = 1.0;
};

// Scores every sentence of train with the LM and attaches weights in corpus
// order.
WeightSet weigh_corpus(const LanguageModel& lm, const corpus::Corpus& train, bool per_token_normalized = false);
std::vector<SidecarRow> sidecar_rows(const corpus::Corpus& train, const WeightSet& w);

// JSONL: {"doc_id", "sentence_index", "loglik", "alpha"} per line.
void write_sidecar(std::ostream& out, const std::vector<SidecarRow>& rows);
void write_sidecar(const std::filesystem::path& file, const std::vector<SidecarRow>& rows);
std::vector<SidecarRow> read_sidecar(const std::filesystem::path& file);
// Alphas aligned to the corpus order; throws IntegrityError when the rows do
// not cover the corpus sentences exactly.
std::vector<double> alphas_for(const corpus::Corpus& train, const std::vector<SidecarRow>& rows);

}  // namespace eventshift::liw
