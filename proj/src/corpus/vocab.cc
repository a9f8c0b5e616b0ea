#include "eventshift/corpus/vocab.h"

#include "eventshift/corpus/tokenizer.h"

namespace eventshift::corpus {

Vocab::Vocab(bool case_fold) : case_fold_(case_fold) {
  words_.emplace_back(kUnkToken);
  ids_.emplace(std::string(kUnkToken), kUnk);
}

std::string Vocab::key(std::string_view word) const {
  return case_fold_ ? case_fold(word) : std::string(word);
}

int Vocab::add(std::string_view word) {
  std::string k = key(word);
  auto [it, inserted] = ids_.emplace(k, size());
  if (inserted) words_.push_back(std::move(k));
  return it->second;
}

int Vocab::id(std::string_view word) const {
  auto it = ids_.find(key(word));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view word) const {
  auto it = ids_.find(key(word));
  return it != ids_.end() && it->second != kUnk;
}

Vocab build_vocab(const Corpus& train, bool case_fold) {
  Vocab v(case_fold);
  for (const DocumentRecord& d : train.documents)
    for (const SentenceRecord& s : d.sentences)
      for (const TokenRecord& t : s.tokens) v.add(t.text);
  return v;
}

IvOovPartition iv_oov_partition(const Corpus& test, const Vocab& vocab) {
  IvOovPartition p;
  for (std::size_t di = 0; di < test.documents.size(); ++di) {
    const DocumentRecord& d = test.documents[di];
    for (std::size_t si = 0; si < d.sentences.size(); ++si) {
      const SentenceRecord& s = d.sentences[si];
      for (std::size_t ti = 0; ti < s.tokens.size(); ++ti) {
        const TokenRef ref{static_cast<int>(di), static_cast<int>(si), static_cast<int>(ti)};
        (vocab.contains(s.tokens[ti].text) ? p.iv : p.oov).push_back(ref);
      }
    }
  }
  return p;
}

}  // namespace eventshift::corpus
