#pragma once

// Experiment configuration and the end-to-end run: adapt, train, evaluate
// in and out of domain, report, and record a ledger of output hashes.

#include "eventshift/ada/ada.h"
#include "eventshift/daft/daft.h"
#include "eventshift/encoders/features.h"
#include "eventshift/evalsuite/score.h"
#include "eventshift/liw/lm.h"
#include "eventshift/tagger/train.h"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eventshift::experiment {

enum class Technique { kNone, kLiw, kAda, kDaft, kDaftSyn };
enum class ModelType { kBert, kDelex, kVerb };

std::string to_string(Technique t);
Technique technique_from_string(const std::string& s);
std::string to_string(ModelType m);
ModelType model_type_from_string(const std::string& s);

struct LiwSettings {
  liw::LmConfig lm;
  liw::LmTrainConfig train;
  bool per_token_normalized = false;
  std::filesystem::path embeddings;  // optional static-embedding file for LM initialization
};

struct TargetSpec {
  std::string name;
  std::filesystem::path test;
};

struct ExperimentConfig {
  std::string name = "run";
  std::filesystem::path source_train;
  std::filesystem::path source_dev;
  std::vector<TargetSpec> targets;
  // One sentence per line (.txt) or a canonical corpus (.jsonl). DAFT-SYN
  // needs the latter with POS tags.
  std::filesystem::path target_raw;
  ModelType model = ModelType::kBert;
  encoders::EncoderConfig encoder;
  int pos_dim = 50;  // DELEX embedding size
  tagger::TaggerArch arch;
  tagger::TrainConfig train;
  Technique technique = Technique::kNone;
  std::optional<LiwSettings> liw;
  std::optional<ada::AdaConfig> ada;
  std::optional<daft::DaftConfig> daft;
  unsigned long seed = 0;
  std::filesystem::path output_dir;
};

// Relative paths are resolved against base_dir. The seed is propagated into
// every sub-config. Throws ConfigError on any inconsistency.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& file);
// Every field with defaults materialized.
nlohmann::json to_json(const ExperimentConfig& c);
void validate(const ExperimentConfig& c);
// Checks that every referenced input exists and the output directory is
// absent or empty.
void validate_inputs(const ExperimentConfig& c);

// Target raw text as sentences, or as a corpus (with POS when present).
corpus::Corpus load_raw_corpus(const std::filesystem::path& file, const std::string& domain = "target");

struct RunResult {
  std::filesystem::path run_dir;
  evalsuite::EvalReport in_domain;
  std::map<std::string, evalsuite::EvalReport> out_of_domain;
  std::string ledger_hash;
};

RunResult run(const ExperimentConfig& cfg);

// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
// Hashes every regular file under dir except the listed top-level names,
// keyed by relative path; the combined hash covers paths and contents.
struct Ledger {
  std::map<std::string, std::string> files;
  std::string hash;
};
Ledger hash_outputs(const std::filesystem::path& dir, const std::vector<std::string>& exclude);

// Builds a sub-word vocabulary from the text, initializes a transformer and
// pretrains it with the masked-LM objective. Saves to out_dir.
struct EncoderInitConfig {
  encoders::TransformerConfig model;
  int vocab_size = 2000;
  int min_word_freq = 2;
  daft::DaftConfig pretrain;
};
nlohmann::json to_json(const EncoderInitConfig& c);
EncoderInitConfig encoder_init_config_from_json(const nlohmann::json& j);
daft::FinetuneResult init_encoder(const std::vector<std::vector<std::string>>& sentences, const EncoderInitConfig& cfg,
                                  const std::filesystem::path& out_dir);

// Description of a featurizer, stored as featurizer.json next to tagger
// checkpoints so evaluation can rebuild the same features.
nlohmann::json contextual_featurizer_spec(const encoders::EncoderConfig& c);
nlohmann::json pos_featurizer_spec(int dim, unsigned long seed);
std::unique_ptr<encoders::Featurizer> make_featurizer(const nlohmann::json& spec);

// Predictions for each sentence of c under a trained tagger and featurizer.
evalsuite::Predictions predict_corpus(tagger::TaggerModel& m, const encoders::Featurizer& f, const corpus::Corpus& c,
                                      double threshold = 0.5);
evalsuite::Predictions verb_predictions(const corpus::Corpus& c);

// Overall, IV and OOV scores, with IV/OOV relative to the training vocab.
evalsuite::EvalReport evaluate_predictions(const evalsuite::Predictions& pred, const corpus::Corpus& gold,
                                           const corpus::Corpus& train, const evalsuite::ReportMeta& meta);

void write_predictions(const std::filesystem::path& file, const evalsuite::Predictions& pred);
evalsuite::Predictions read_predictions(const std::filesystem::path& file);

}  // namespace eventshift::experiment
