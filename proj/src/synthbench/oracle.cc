#include "eventshift/synthbench/oracle.h"

#include "eventshift/corpus/stats.h"
#include "eventshift/corpus/vocab.h"

#include <algorithm>

namespace eventshift::synthbench {

namespace {

CheckResult compare_stats(const std::string& name, const corpus::Corpus& c, const GroundTruth& gt) {
  CheckResult r{"stats:" + name, false, ""};
  auto it = gt.corpora.find(name);
  if (it == gt.corpora.end()) {
    r.detail = "no ground truth";
    return r;
  }
  const CorpusTruth& t = it->second;
  const corpus::StatsRecord s = corpus::corpus_stats(c);
  auto field = [&](const char* f, std::size_t got, std::size_t want) {
    if (got != want) r.detail += std::string(f) + " " + std::to_string(got) + "!=" + std::to_string(want) + " ";
  };
  field("n_files", s.n_files, t.n_files);
  field("n_tokens", s.n_tokens, t.n_tokens);
  field("n_events", s.n_events, t.n_events);
  field("vocab_size", s.vocab_size, t.vocab_size);
  field("event_vocab_size", s.event_vocab_size, t.event_vocab_size);
  if (s.event_density != t.event_density()) r.detail += "event_density ";
  r.passed = r.detail.empty();
  return r;
}

}  // namespace

std::vector<CheckResult> oracle_checks(const corpus::Corpus& source_train, const corpus::Corpus& source_dev,
                                       const corpus::Corpus& target_test, const GroundTruth& gt) {
  std::vector<CheckResult> out;
  out.push_back(compare_stats("source_train", source_train, gt));
  out.push_back(compare_stats("source_dev", source_dev, gt));
  out.push_back(compare_stats("target_test", target_test, gt));

  const auto part = corpus::iv_oov_partition(target_test, corpus::build_vocab(source_train));
  std::vector<corpus::TokenRef> measured;
  for (const auto& ref : part.oov) {
    const auto& doc = target_test.documents[static_cast<std::size_t>(ref.doc)];
    if (doc.sentences[static_cast<std::size_t>(ref.sentence)].tokens[static_cast<std::size_t>(ref.token)].label == 1)
      measured.push_back(ref);
  }
  std::sort(measured.begin(), measured.end());
  std::vector<corpus::TokenRef> expected = gt.oov_events;
  std::sort(expected.begin(), expected.end());
  CheckResult oov{"oov_events", measured == expected, ""};
  if (!oov.passed)
    oov.detail = "measured " + std::to_string(measured.size()) + " expected " + std::to_string(expected.size());
  out.push_back(oov);

  CheckResult flags{"contains_target_vocab", true, ""};
  std::size_t i = 0, mismatches = 0;
  for (const auto& d : source_train.documents)
    for (const auto& s : d.sentences) {
      bool has = false;
      for (const auto& t : s.tokens) has = has || gt.target_vocab.count(t.text) > 0;
      if (i >= gt.contains_target_vocab.size() || gt.contains_target_vocab[i] != has) ++mismatches;
      ++i;
    }
  if (i != gt.contains_target_vocab.size() || mismatches) {
    flags.passed = false;
    flags.detail = std::to_string(mismatches) + " mismatched flags over " + std::to_string(i) + " sentences";
  }
  out.push_back(flags);
  return out;
}

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

}  // namespace eventshift::synthbench
