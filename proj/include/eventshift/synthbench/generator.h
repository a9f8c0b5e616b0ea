#pragma once

// Seeded generator of paired source/target corpora with controlled lexical,
// morphological and event-type shift.
//
// Sentences come from per-domain frame templates whose slots are filled from
// type-tagged lexicons of pseudo-words. The target domain replaces a fixed
// fraction of content-word types with target-only words and uses its own
// frame words. A fraction of source sentences ("bridge" sentences) use target
// frames with source content words. Ground truth is recorded while
// generating, not measured afterwards.

#include "eventshift/corpus/records.h"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace eventshift::synthbench {

struct ShiftSpec {
  double substitution_rate = 0.5;  // fraction of content-word types replaced in the target
  double morph_pattern_rate = 0.8;  // target-only event words bearing -ed/-ing/-tion/-sion
  double source_morph_rate = 0.5;   // same for source event words
  std::map<corpus::EventType, double> type_mix = {
      {corpus::EventType::kOccurrence, 0.35},      {corpus::EventType::kState, 0.15},
      {corpus::EventType::kIState, 0.10},          {corpus::EventType::kAspectual, 0.10},
      {corpus::EventType::kActivityPattern, 0.15}, {corpus::EventType::kLongTermState, 0.15},
  };
  double bridge_rate = 0.1;           // source sentences drawn from target frames
  double shared_frame_fraction = 0.3;  // target frames identical to source frames
  double ambiguous_fraction = 0.25;    // event nouns that also fill non-event noun slots

  int event_words = 72;
  int noun_words = 80;
  int adjective_words = 30;
  int frames_per_domain = 20;
  int frame_words_per_domain = 24;

  int source_train_docs = 40;
  int source_dev_docs = 8;
  int target_test_docs = 20;
  int sentences_per_doc = 15;
  int target_raw_tokens = 20000;

  unsigned long seed = 0;
};

void validate(const ShiftSpec& spec);
nlohmann::json to_json(const ShiftSpec& spec);
ShiftSpec shift_spec_from_json(const nlohmann::json& j);

struct CorpusTruth {
  std::size_t n_files = 0;
  std::size_t n_tokens = 0;
  std::size_t n_events = 0;
  std::size_t vocab_size = 0;
  std::size_t event_vocab_size = 0;
  double event_density() const {
    return n_tokens ? static_cast<double>(n_events) / static_cast<double>(n_tokens) : 0.0;
  }
};

struct GroundTruth {
  std::map<std::string, CorpusTruth> corpora;  // source_train, source_dev, target_test
  // Target-test event tokens whose word never occurs in source_train.
  std::vector<corpus::TokenRef> oov_events;
  // Words specific to the target domain: its frame words and its
  // replacement content words.
  std::set<std::string> target_vocab;
  std::set<std::string> source_content_vocab;
  std::set<std::string> target_content_vocab;
  // One flag per source_train sentence (corpus order): contains a word from
  // target_vocab.
  std::vector<bool> contains_target_vocab;
};

nlohmann::json to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

struct SynthOutput {
  corpus::Corpus source_train;
  corpus::Corpus source_dev;
  corpus::Corpus target_test;
  // Unlabeled target sentences as token lists.
  std::vector<std::vector<std::string>> target_raw;
  std::vector<std::vector<std::string>> target_raw_pos;  // universal tags, parallel to target_raw
  GroundTruth truth;
};

// Deterministic per spec.seed. Throws ConfigError when the sizes cannot
// cover every source lexicon entry in source_train.
SynthOutput generate(const ShiftSpec& spec);

// Raw text helpers: one sentence per line, tokens separated by spaces.
std::string raw_text(const std::vector<std::vector<std::string>>& sentences);
std::vector<std::vector<std::string>> parse_raw_text(std::string_view text);
// Wraps raw sentences as an unlabeled corpus (labels 0) of one document,
// with POS tags when given.
corpus::Corpus raw_corpus(const std::vector<std::vector<std::string>>& sentences, const std::string& domain,
                          const std::vector<std::vector<std::string>>* pos = nullptr);

// Writes source_train.jsonl, source_dev.jsonl, target_test.jsonl,
// target_raw.txt, target_raw_tagged.jsonl,
// ground_truth.json and spec.json into dir.
void write_output(const SynthOutput& out, const ShiftSpec& spec, const std::filesystem::path& dir);

}  // namespace eventshift::synthbench
