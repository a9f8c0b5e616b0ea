#pragma once

// Domain-adaptive fine-tuning of the contextual encoder on a mix of source
// and target text, by masked language modeling or by POS tagging. The
// tagger is then trained as usual on features from the fine-tuned encoder.

#include "eventshift/corpus/records.h"
#include "eventshift/encoders/transformer.h"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace eventshift::daft {

enum class Objective { kMlm, kPos };

struct DaftConfig {
  int epochs = 3;
  int batch = 4;
  Objective objective = Objective::kMlm;
  double mask_rate = 0.15;
  double mask_token_share = 0.8;    // selected positions replaced by [MASK]
  double random_token_share = 0.1;  // replaced by a random piece; the rest keep their piece
  double lr = 5e-5;
  unsigned long seed = 0;
};

nlohmann::json to_json(const DaftConfig& c);
DaftConfig daft_config_from_json(const nlohmann::json& j);
void validate(const DaftConfig& c);
Objective objective_from_string(const std::string& s);
std::string to_string(Objective o);

struct MixedSentence {
  std::vector<std::string> words;
  std::vector<std::optional<std::string>> pos;
  std::string doc_id;
  bool target = false;
};

struct MixedCorpus {
  std::vector<MixedSentence> sentences;
  long n_source = 0;
  long n_target = 0;
  long source_tokens = 0;
  long target_tokens = 0;
};

nlohmann::json mixing_record(const MixedCorpus& m);

// The larger side is cut to a seeded random subset of its sentences whose
// token count first reaches the smaller side's; the result is shuffled.
MixedCorpus build_mixed_corpus(const corpus::Corpus& src, const corpus::Corpus& tgt, unsigned long seed);

// Sentences as encoder windows: [CLS] pieces [SEP], split at word
// boundaries so every window fits max_len.
struct Window {
  std::vector<int> ids;
  std::vector<int> word_rows;  // row of each word's first piece
  std::vector<int> words;      // index of each word in the sentence
};
std::vector<Window> windows(const std::vector<std::string>& words, const encoders::SubwordVocab& vocab,
                            int max_len);

struct MaskedExample {
  std::vector<int> input;
  std::vector<int> target;  // original piece at selected positions, -1 elsewhere
  int selected() const;
};

// Selects each non-special position with probability mask_rate and corrupts
// it by the mask/random/keep split.
MaskedExample mask_pieces(const std::vector<int>& ids, const encoders::SubwordVocab& vocab, const DaftConfig& cfg,
                          std::mt19937_64& rng);

// Masked-LM loss summed over the selected positions of one example.
nn::Var mlm_loss(nn::Graph& g, const encoders::TransformerEncoder& enc, const MaskedExample& ex, nn::Rng* dropout,
                 bool trainable = true);
// Cross-entropy at every position, weighted by selection: 0 wherever
// ex.target is -1.
std::vector<double> mlm_position_losses(const encoders::TransformerEncoder& enc, const MaskedExample& ex);

struct FinetuneResult {
  std::vector<double> epoch_loss;  // mean loss per epoch
  long steps = 0;
};

// Updates enc in place for exactly cfg.epochs passes over the sentences.
// Masks are redrawn every epoch.
FinetuneResult mlm_finetune(encoders::TransformerEncoder& enc, const std::vector<std::vector<std::string>>& sentences,
                            const DaftConfig& cfg);
FinetuneResult mlm_finetune(encoders::TransformerEncoder& enc, const MixedCorpus& mixed, const DaftConfig& cfg);

// Trains enc together with a temporary linear tag head over
// encoders::universal_tagset() on the top layer, then drops the head.
// Every token needs a tag from that set.
FinetuneResult pos_finetune(encoders::TransformerEncoder& enc, const MixedCorpus& mixed, const DaftConfig& cfg,
                            double* final_accuracy = nullptr);

// Loads base_checkpoint, fine-tunes a copy and saves it to out_dir. The base
// is never written.
FinetuneResult daft_finetune(const std::string& base_checkpoint, const MixedCorpus& mixed, const DaftConfig& cfg,
                             const std::filesystem::path& out_dir);

}  // namespace eventshift::daft
