#include "eventshift/corpus/stats.h"

#include "eventshift/corpus/tokenizer.h"

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace eventshift::corpus {

StatsRecord corpus_stats(const Corpus& c) {
  StatsRecord s;
  std::set<std::string> vocab;
  std::set<std::string> event_vocab;
  s.n_files = c.documents.size();
  for (const DocumentRecord& d : c.documents) {
    for (const SentenceRecord& sent : d.sentences) {
      for (const TokenRecord& t : sent.tokens) {
        ++s.n_tokens;
        std::string key = case_fold(t.text);
        if (t.label == 1) {
          ++s.n_events;
          event_vocab.insert(key);
        }
        vocab.insert(std::move(key));
      }
    }
  }
  s.vocab_size = vocab.size();
  s.event_vocab_size = event_vocab.size();
  s.event_density = s.n_tokens ? static_cast<double>(s.n_events) / static_cast<double>(s.n_tokens) : 0.0;
  return s;
}

std::string format_stats(const StatsRecord& s) {
  std::ostringstream out;
  out << "n_files: " << s.n_files << '\n'
      << "n_tokens: " << s.n_tokens << '\n'
      << "n_events: " << s.n_events << '\n'
      << "event_density: " << s.event_density << '\n'
      << "vocab_size: " << s.vocab_size << '\n'
      << "event_vocab_size: " << s.event_vocab_size << '\n'
      << "case_folded: " << (s.case_folded ? "true" : "false") << '\n';
  return out.str();
}

nlohmann::json stats_to_json(const StatsRecord& s) {
  return {{"n_files", s.n_files},       {"n_tokens", s.n_tokens},
          {"n_events", s.n_events},     {"event_density", s.event_density},
          {"vocab_size", s.vocab_size}, {"event_vocab_size", s.event_vocab_size},
          {"case_folded", s.case_folded}};
}

double cohens_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cohens_kappa: sequences differ in length");
  if (a.empty()) throw std::invalid_argument("cohens_kappa: empty sequences");
  const double n = static_cast<double>(a.size());
  std::map<int, double> ma, mb;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma[a[i]] += 1.0;
    mb[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, count] : ma) {
    auto it = mb.find(label);
    if (it != mb.end()) p_e += (count / n) * (it->second / n);
  }
  if (p_e >= 1.0) return 1.0;
  return (p_o - p_e) / (1.0 - p_e);
}

}  // namespace eventshift::corpus
