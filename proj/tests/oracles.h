#pragma once

// Independent reference computations used by unit and acceptance tests.
// None of these call into the code paths they check.

#include "eventshift/corpus/records.h"
#include "eventshift/evalsuite/score.h"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>
#include <set>
#include <tuple>
#include <vector>

namespace eventshift::oracles {

using Position = std::tuple<int, int>;  // (sentence, token)

struct Counts {
  long tp = 0, fp = 0, fn = 0;
};

// tp = |pred ∩ gold|, fp = |pred \ gold|, fn = |gold \ pred| over positive
// positions.
inline Counts positive_intersection(const evalsuite::Predictions& pred, const corpus::Corpus& gold) {
  std::set<Position> p, g;
  int si = 0;
  for (const auto& d : gold.documents)
    for (const auto& s : d.sentences) {
      for (int i = 0; i < static_cast<int>(s.tokens.size()); ++i) {
        if (s.tokens[i].label == 1) g.insert({si, i});
        if (pred[si][i] == 1) p.insert({si, i});
      }
      ++si;
    }
  std::vector<Position> inter, ponly, gonly;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(inter));
  std::set_difference(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(ponly));
  std::set_difference(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(gonly));
  return {static_cast<long>(inter.size()), static_cast<long>(ponly.size()), static_cast<long>(gonly.size())};
}

// Random single-document corpus with random predictions, sentences of
// 1..max_tokens tokens drawn from a small word list.
inline std::pair<corpus::Corpus, evalsuite::Predictions> random_scoring_case(std::mt19937_64& rng,
                                                                               int max_tokens) {
  static const char* words[] = {"a", "b", "c", "d", "e", "f", "g", "h"};
  corpus::Corpus c;
  corpus::DocumentRecord d;
  d.doc_id = "r";
  d.domain = "x";
  evalsuite::Predictions pred;
  const int n_sent = 1 + static_cast<int>(rng() % 3);
  int remaining = max_tokens;
  int offset = 0;
  for (int s = 0; s < n_sent && remaining > 0; ++s) {
    const int len = 1 + static_cast<int>(rng() % static_cast<unsigned long>(std::max(1, remaining / (n_sent - s))));
    remaining -= len;
    corpus::SentenceRecord sent;
    sent.doc_id = "r";
    sent.domain = "x";
    std::vector<int> p;
    for (int i = 0; i < len; ++i) {
      corpus::TokenRecord t;
      t.text = words[rng() % 8];
      t.label = rng() % 4 == 0;
      t.char_start = offset;
      t.char_end = offset + 1;
      offset += 2;
      sent.tokens.push_back(t);
      p.push_back(rng() % 4 == 0);
    }
    d.sentences.push_back(sent);
    pred.push_back(p);
  }
  c.documents.push_back(d);
  return {c, pred};
}

}  // namespace eventshift::oracles
