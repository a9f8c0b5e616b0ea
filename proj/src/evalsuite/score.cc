#include "eventshift/evalsuite/score.h"

#include "eventshift/error.h"

namespace eventshift::evalsuite {

using corpus::Corpus;
using corpus::TokenRef;

namespace {

void check_alignment(const Predictions& pred, const Corpus& gold) {
  std::size_t si = 0;
  for (std::size_t di = 0; di < gold.documents.size(); ++di) {
    const auto& doc = gold.documents[di];
    for (std::size_t k = 0; k < doc.sentences.size(); ++k, ++si) {
      if (si >= pred.size())
        throw IntegrityError("predictions end before sentence " + std::to_string(si) + " (document " +
                             doc.doc_id + ")");
      if (pred[si].size() != doc.sentences[k].size())
        throw IntegrityError("sentence " + std::to_string(si) + " (document " + doc.doc_id + "): " +
                             std::to_string(pred[si].size()) + " predictions for " +
                             std::to_string(doc.sentences[k].size()) + " tokens");
    }
  }
  if (si != pred.size())
    throw IntegrityError("predictions have " + std::to_string(pred.size()) + " sentences, gold has " +
                         std::to_string(si));
}

enum class Outcome { kTp, kFp, kFn, kTn };

Outcome outcome(int p, int g) {
  if (p == 1 && g == 1) return Outcome::kTp;
  if (p == 1) return Outcome::kFp;
  if (g == 1) return Outcome::kFn;
  return Outcome::kTn;
}

struct Tally {
  long tp = 0, fp = 0, fn = 0;
  void add(Outcome o) {
    if (o == Outcome::kTp) ++tp;
    else if (o == Outcome::kFp) ++fp;
    else if (o == Outcome::kFn) ++fn;
  }
  Scores scores() const { return scores_from_counts(tp, fp, fn); }
};

}  // namespace

Scores scores_from_counts(long tp, long fp, long fn) {
  Scores s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

EvalReport score(const Predictions& pred, const Corpus& gold) {
  check_alignment(pred, gold);
  Tally t;
  std::size_t si = 0;
  for (const auto& doc : gold.documents)
    for (const auto& s : doc.sentences) {
      for (std::size_t i = 0; i < s.tokens.size(); ++i) t.add(outcome(pred[si][i], s.tokens[i].label));
      ++si;
    }
  EvalReport r;
  r.overall = t.scores();
  return r;
}

EvalReport bucket_score(const Predictions& pred, const Corpus& gold, const corpus::IvOovPartition& partition) {
  check_alignment(pred, gold);
  // 0 = unassigned, 1 = IV, 2 = OOV
  std::vector<std::vector<std::vector<char>>> bucket(gold.documents.size());
  for (std::size_t d = 0; d < gold.documents.size(); ++d) {
    bucket[d].resize(gold.documents[d].sentences.size());
    for (std::size_t s = 0; s < gold.documents[d].sentences.size(); ++s)
      bucket[d][s].assign(gold.documents[d].sentences[s].size(), 0);
  }
  auto assign = [&](const std::vector<TokenRef>& refs, char b) {
    for (const TokenRef& r : refs) {
      if (r.doc < 0 || static_cast<std::size_t>(r.doc) >= bucket.size() || r.sentence < 0 ||
          static_cast<std::size_t>(r.sentence) >= bucket[r.doc].size() || r.token < 0 ||
          static_cast<std::size_t>(r.token) >= bucket[r.doc][r.sentence].size())
        throw IntegrityError("partition refers to a token outside the gold corpus");
      char& slot = bucket[r.doc][r.sentence][r.token];
      if (slot != 0) throw IntegrityError("token assigned to both IV and OOV buckets");
      slot = b;
    }
  };
  assign(partition.iv, 1);
  assign(partition.oov, 2);

  Tally all, iv, oov;
  std::size_t si = 0;
  for (std::size_t d = 0; d < gold.documents.size(); ++d) {
    const auto& doc = gold.documents[d];
    for (std::size_t s = 0; s < doc.sentences.size(); ++s, ++si) {
      for (std::size_t i = 0; i < doc.sentences[s].size(); ++i) {
        const char b = bucket[d][s][i];
        if (b == 0)
          throw IntegrityError("token " + std::to_string(i) + " of sentence " + std::to_string(si) +
                               " is in neither IV nor OOV bucket");
        const Outcome o = outcome(pred[si][i], doc.sentences[s].tokens[i].label);
        all.add(o);
        (b == 1 ? iv : oov).add(o);
      }
    }
  }
  EvalReport r;
  r.overall = all.scores();
  r.iv = iv.scores();
  r.oov = oov.scores();
  return r;
}

std::vector<corpus::TokenRecord> correct_oov_events(const Predictions& pred, const Corpus& gold,
                                                    const corpus::IvOovPartition& partition) {
  check_alignment(pred, gold);
  std::vector<std::size_t> sentence_base(gold.documents.size(), 0);
  for (std::size_t d = 1; d < gold.documents.size(); ++d)
    sentence_base[d] = sentence_base[d - 1] + gold.documents[d - 1].sentences.size();
  std::vector<corpus::TokenRecord> out;
  for (const TokenRef& r : partition.oov) {
    const auto& tok = gold.documents[r.doc].sentences[r.sentence].tokens[r.token];
    if (tok.label == 1 && pred[sentence_base[r.doc] + r.sentence][r.token] == 1) out.push_back(tok);
  }
  return out;
}

nlohmann::json to_json(const Scores& s) {
  return {{"tp", s.tp},
          {"fp", s.fp},
          {"fn", s.fn},
          {"precision", s.precision},
          {"recall", s.recall},
          {"f1", s.f1}};
}

Scores scores_from_json(const nlohmann::json& j) {
  Scores s;
  s.tp = j.at("tp").get<long>();
  s.fp = j.at("fp").get<long>();
  s.fn = j.at("fn").get<long>();
  s.precision = j.at("precision").get<double>();
  s.recall = j.at("recall").get<double>();
  s.f1 = j.at("f1").get<double>();
  return s;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j = {
      {"overall", to_json(r.overall)},
      {"meta", {{"model_id", r.meta.model_id}, {"source", r.meta.source}, {"target", r.meta.target},
                {"seed", r.meta.seed}}},
  };
  if (r.iv) j["iv"] = to_json(*r.iv);
  if (r.oov) j["oov"] = to_json(*r.oov);
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.overall = scores_from_json(j.at("overall"));
  if (j.contains("iv")) r.iv = scores_from_json(j["iv"]);
  if (j.contains("oov")) r.oov = scores_from_json(j["oov"]);
  const auto& m = j.at("meta");
  r.meta = {m.at("model_id").get<std::string>(), m.at("source").get<std::string>(),
            m.at("target").get<std::string>(), m.at("seed").get<long>()};
  return r;
}

}  // namespace eventshift::evalsuite
