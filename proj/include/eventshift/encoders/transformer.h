#pragma once

// Small bidirectional transformer encoder (post-layer-norm, learned
// positions, GELU feed-forward) with a tied masked-LM head.

#include "eventshift/encoders/subword.h"
#include "eventshift/nn/layers.h"

#include "json.hpp"

#include <filesystem>
#include <memory>
#include <vector>

namespace eventshift::encoders {

struct TransformerConfig {
  int hidden = 32;
  int layers = 4;
  int heads = 2;
  int ffn = 64;
  int max_len = 64;  // pieces per window including [CLS] and [SEP]
  double dropout = 0.1;
  unsigned long seed = 0;
};

nlohmann::json to_json(const TransformerConfig& c);
TransformerConfig transformer_config_from_json(const nlohmann::json& j);

class TransformerEncoder {
 public:
  TransformerEncoder(const TransformerConfig& cfg, SubwordVocab vocab);

  const TransformerConfig& config() const { return cfg_; }
  const SubwordVocab& vocab() const { return vocab_; }

  struct Output {
    std::vector<nn::Var> layers;  // one n x hidden matrix per layer, bottom to top
  };
  // ids must fit in max_len. Dropout is active only when rng is non-null.
  Output forward(nn::Graph& g, const std::vector<int>& ids, nn::Rng* rng, bool trainable) const;

  // Vocabulary logits for the rows of hidden (k x hidden -> k x vocab).
  nn::Var mlm_logits(nn::Graph& g, nn::Var hidden, bool trainable) const;

  // Encoder body parameters (everything the features depend on).
  nn::ParamList body_params() const;
  nn::ParamList mlm_head_params() const;
  nn::ParamList all_params() const;

  // Checkpoint directory: config.json, vocab.txt, weights.bin.
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = {}) const;
  static std::unique_ptr<TransformerEncoder> load(const std::filesystem::path& dir);

 private:
  struct Block {
    nn::Linear q, k, v, o;
    nn::Parameter ln1_g, ln1_b;
    nn::Linear ff1, ff2;
    nn::Parameter ln2_g, ln2_b;
  };

  TransformerConfig cfg_;
  SubwordVocab vocab_;
  // mutable: graphs bind parameters by non-const reference even when frozen.
  mutable nn::Parameter tok_emb_;
  mutable nn::Parameter pos_emb_;
  mutable nn::Parameter emb_ln_g_, emb_ln_b_;
  mutable std::vector<Block> blocks_;
  mutable nn::Linear mlm_transform_;
  mutable nn::Parameter mlm_ln_g_, mlm_ln_b_, mlm_bias_;
};

}  // namespace eventshift::encoders
