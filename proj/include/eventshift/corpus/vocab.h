#pragma once

#include "eventshift/corpus/records.h"

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eventshift::corpus {

// Dense word ids from 0. Id 0 is reserved for unknown words.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  explicit Vocab(bool case_fold = true);

  // Adds a word if absent; returns its id.
  int add(std::string_view word);
  int id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(words_.size()); }
  bool case_folded() const { return case_fold_; }
  std::string key(std::string_view word) const;

 private:
  bool case_fold_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

Vocab build_vocab(const Corpus& train, bool case_fold = true);

struct IvOovPartition {
  std::vector<TokenRef> iv;
  std::vector<TokenRef> oov;
};

// Every token of test lands in exactly one bucket.
IvOovPartition iv_oov_partition(const Corpus& test, const Vocab& vocab);

}  // namespace eventshift::corpus
