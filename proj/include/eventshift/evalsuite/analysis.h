#pragma once

#include "eventshift/corpus/records.h"
#include "eventshift/evalsuite/score.h"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace eventshift::evalsuite {

// Suffix counts over correctly identified OOV events. Matching is
// case-folded. The *_pos counts additionally require a compatible POS tag
// (VERB/AUX for -ed and -ing, NOUN for -tion/-sion). Patterns may overlap;
// any_fraction counts each token once.
struct MorphReport {
  long total = 0;
  long ed = 0;
  long ing = 0;
  long tion_sion = 0;
  long ed_pos = 0;
  long ing_pos = 0;
  long tion_sion_pos = 0;
  long any = 0;
  double any_fraction = 0.0;
};

MorphReport morph_pattern_report(std::span<const corpus::TokenRecord> correct_oov_events);

struct TypeAnalysisRow {
  std::string token;
  std::string model;
  std::string target;
  corpus::EventType event_type = corpus::EventType::kNone;
  int correct = 0;
};

// OOV gold event tokens of one target domain together with each model's
// predictions over the same corpus.
struct TypeAnalysisInput {
  const corpus::Corpus* gold = nullptr;
  const corpus::IvOovPartition* partition = nullptr;
  std::string target;
  // model id -> predictions over gold
  std::map<std::string, Predictions> models;
};

// Seeded uniform sample without replacement of k OOV gold event tokens, one
// row per (token, model). When k exceeds the population the whole
// population is used and a warning is logged.
std::vector<TypeAnalysisRow> sample_type_analysis(const TypeAnalysisInput& input, std::size_t k,
                                                  unsigned long seed);

// Header: token,model,target,event_type,correct
void write_type_analysis_csv(std::ostream& out, std::span<const TypeAnalysisRow> rows);

}  // namespace eventshift::evalsuite
