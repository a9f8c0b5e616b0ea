#pragma once

#include "eventshift/corpus/records.h"
#include "eventshift/corpus/vocab.h"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace eventshift::evalsuite {

// One label sequence per sentence, in corpus order.
using Predictions = std::vector<std::vector<int>>;

struct Scores {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;  // 0 when nothing is predicted
  double recall = 0.0;
  double f1 = 0.0;  // 2PR/(P+R), 0 when P+R == 0

  bool operator==(const Scores&) const = default;
};

Scores scores_from_counts(long tp, long fp, long fn);

struct ReportMeta {
  std::string model_id;
  std::string source;
  std::string target;
  long seed = 0;

  bool operator==(const ReportMeta&) const = default;
};

struct EvalReport {
  Scores overall;
  std::optional<Scores> iv;
  std::optional<Scores> oov;
  ReportMeta meta;

  bool operator==(const EvalReport&) const = default;
};

// Token-level scoring of binary trigger labels. Throws IntegrityError naming
// the first misaligned sentence or token.
EvalReport score(const Predictions& pred, const corpus::Corpus& gold);

// Attributes each token's tp/fp/fn to its IV or OOV bucket. Throws
// IntegrityError when a token is in neither bucket.
EvalReport bucket_score(const Predictions& pred, const corpus::Corpus& gold,
                        const corpus::IvOovPartition& partition);

// Gold events that were predicted and fall in the OOV bucket.
std::vector<corpus::TokenRecord> correct_oov_events(const Predictions& pred, const corpus::Corpus& gold,
                                                    const corpus::IvOovPartition& partition);

nlohmann::json to_json(const Scores& s);
Scores scores_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

}  // namespace eventshift::evalsuite
