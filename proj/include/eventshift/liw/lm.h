#pragma once

// Word-level target-domain language model: a multi-layer LSTM with tied
// input/output embeddings, trained with truncated backpropagation and SGD.

#include "eventshift/corpus/records.h"
#include "eventshift/encoders/features.h"
#include "eventshift/nn/layers.h"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace eventshift::liw {

// Scores of each word of a sentence given its prefix, the context starting
// at a sentence boundary. The end-of-sentence event is not scored.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual std::vector<double> token_log_probs(const std::vector<std::string>& words) const = 0;
};

// log of P(w_1) * prod P(w_i | w_1..w_{i-1}).
double sentence_loglik(const LanguageModel& lm, const corpus::SentenceRecord& s);
double sentence_loglik(const LanguageModel& lm, const std::vector<std::string>& words);

class LmVocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kEos = 1;
  LmVocab();
  // Words seen at least min_count times; the rest map to <unk>.
  static LmVocab build(const std::vector<std::vector<std::string>>& sentences, int min_count = 2);
  int id(const std::string& w) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }
  static LmVocab from_words(const std::vector<std::string>& words);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

struct LmConfig {
  int layers = 3;
  int hidden = 300;  // also the embedding size, required by tying
  double dropout = 0.2;
  int min_count = 2;
  unsigned long seed = 0;
};

struct LmTrainConfig {
  double lr = 20.0;
  double lr_decay = 4.0;     // divisor applied on a validation plateau
  int plateau_patience = 1;  // epochs without validation-loss decrease
  double clip = 0.25;
  int batch_size = 16;
  int bptt = 35;
  int epochs = 25;
  double valid_fraction = 0.1;  // trailing sentences held out
};

nlohmann::json to_json(const LmConfig& c);
nlohmann::json to_json(const LmTrainConfig& c);
LmConfig lm_config_from_json(const nlohmann::json& j);
LmTrainConfig lm_train_config_from_json(const nlohmann::json& j);

// Divides the rate by `decay` whenever `patience` consecutive epochs fail
// to lower the validation loss.
class LrSchedule {
 public:
  LrSchedule(double lr, double decay, int patience);
  // Returns the rate for the next epoch.
  double on_epoch_end(double valid_loss);
  double lr() const { return lr_; }
  int plateaus() const { return plateaus_; }

 private:
  double lr_, decay_;
  int patience_;
  int bad_epochs_ = 0;
  int plateaus_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

class LstmLm : public LanguageModel {
 public:
  LstmLm(const LmConfig& cfg, LmVocab vocab);

  const LmConfig& config() const { return cfg_; }
  const LmVocab& vocab() const { return vocab_; }

  struct State {
    std::vector<nn::Matrix> h, c;  // per layer, batch x hidden
  };
  State zero_state(int batch) const;

  // steps[t][b] is the input id at time t for stream b. Returns the
  // (T*B) x vocab logits, row t*B+b predicting the next id of stream b, and
  // advances state. Dropout only when rng is non-null.
  nn::Var forward(nn::Graph& g, const std::vector<std::vector<int>>& steps, State& state, nn::Rng* rng,
                  bool trainable) const;

  std::vector<double> token_log_probs(const std::vector<std::string>& words) const override;

  // Copies rows for known words; dims must match the hidden size.
  void init_embeddings(const encoders::StaticEmbeddings& e);

  nn::ParamList params() const;
  // The single embedding matrix used on both input and output sides.
  const nn::Parameter& embedding() const { return emb_; }

  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<LstmLm> load(const std::filesystem::path& dir);

 private:
  LmConfig cfg_;
  LmVocab vocab_;
  mutable nn::Parameter emb_;
  mutable std::vector<nn::Lstm> layers_;
  mutable nn::Parameter out_bias_;
};

struct LmEpoch {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_ppl = 0.0;
};

struct LmTrainResult {
  std::unique_ptr<LstmLm> lm;
  std::vector<LmEpoch> history;
};

// Holds out the trailing valid_fraction of sentences for validation and
// keeps the parameters of the best validation epoch.
LmTrainResult train_lm(const std::vector<std::vector<std::string>>& sentences, const LmConfig& cfg,
                       const LmTrainConfig& tcfg, const encoders::StaticEmbeddings* init = nullptr);

// Mean next-word negative log-likelihood over a token stream (sentences
// separated by end-of-sentence), with the same batching as training.
double stream_loss(LstmLm& lm, const std::vector<std::vector<std::string>>& sentences, int batch_size, int bptt);

}  // namespace eventshift::liw
