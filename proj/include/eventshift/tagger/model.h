#pragma once

// Token-level event classifiers. BiLSTM tagger: input dropout -> BiLSTM
// (parameter group R) -> MLP head (parameter group E). DELEX tagger: the MLP
// head applied directly to POS-embedding features (R is empty).

#include "eventshift/corpus/records.h"
#include "eventshift/nn/layers.h"

#include "json.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace eventshift::tagger {

enum class ModelKind { kBiLstm, kDelex };

struct TaggerArch {
  ModelKind kind = ModelKind::kBiLstm;
  int input_dim = 0;
  int lstm_hidden = 100;   // per direction
  int mlp_hidden = 100;
  double input_dropout = 0.5;
  unsigned long seed = 0;  // initialization
};

nlohmann::json to_json(const TaggerArch& a);
TaggerArch tagger_arch_from_json(const nlohmann::json& j);

class TaggerModel {
 public:
  explicit TaggerModel(const TaggerArch& arch);

  const TaggerArch& arch() const { return arch_; }

  struct Forward {
    nn::Var logits;  // N x 1 over the stacked tokens of the batch
    nn::Var reprs;   // N x repr_dim, what the head consumes
    std::vector<int> lengths;
  };
  // Stacks the sentences of a batch. Input dropout is applied only when
  // dropout_rng is non-null. train_r / train_e select which groups receive
  // gradients.
  Forward forward(nn::Graph& g, std::span<const nn::Matrix* const> feats, nn::Rng* dropout_rng,
                  bool train_r = true, bool train_e = true);

  // Evaluation-mode probabilities for one sentence.
  std::vector<double> predict_proba(const nn::Matrix& feats);
  std::vector<int> predict(const nn::Matrix& feats, double threshold = 0.5);

  int repr_dim() const;
  nn::ParamList repr_params();
  nn::ParamList head_params();
  nn::ParamList params();

  void save(const std::filesystem::path& dir);
  static TaggerModel load(const std::filesystem::path& dir);

 private:
  TaggerArch arch_;
  nn::BiLstm bilstm_;
  nn::Mlp head_;
};

// Sequence representation handed to a domain predictor: the mean of the
// token rows.
nn::Var pool_sequence(nn::Graph& g, nn::Var token_reprs);
// One pooled row per sentence of a stacked batch (B x dim).
nn::Var pool_batch(nn::Graph& g, nn::Var stacked, std::span<const int> lengths);

// Labels every token whose POS is VERB (and AUX when include_aux) as an
// event. Throws IntegrityError when a token has no POS tag.
std::vector<int> verb_baseline(const corpus::SentenceRecord& s, bool include_aux = true);

}  // namespace eventshift::tagger
