#pragma once

#include "eventshift/corpus/records.h"

#include "json.hpp"

#include <span>
#include <string>

namespace eventshift::corpus {

struct StatsRecord {
  std::size_t n_files = 0;
  std::size_t n_tokens = 0;
  std::size_t n_events = 0;
  double event_density = 0.0;  // n_events / n_tokens, 0 for an empty corpus
  std::size_t vocab_size = 0;
  std::size_t event_vocab_size = 0;  // distinct case-folded trigger words
  bool case_folded = true;

  bool operator==(const StatsRecord&) const = default;
};

StatsRecord corpus_stats(const Corpus& c);

// Flat "key: value" lines.
std::string format_stats(const StatsRecord& s);
nlohmann::json stats_to_json(const StatsRecord& s);

// Chance-corrected agreement between two annotators labeling the same
// tokens. Labels may be any integers; chance agreement is the product of
// the two marginals. Returns 1.0 when chance agreement is 1 (both sequences
// constant and equal). Throws std::invalid_argument on length mismatch or
// empty input.
double cohens_kappa(std::span<const int> a, std::span<const int> b);

}  // namespace eventshift::corpus
