#pragma once

// Per-word feature extraction: contextual encoder features and POS-tag
// embeddings, behind one Featurizer interface the taggers consume.

#include "eventshift/corpus/records.h"
#include "eventshift/encoders/transformer.h"

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace eventshift::encoders {

enum class SubwordToWord { kFirstSubtoken };

struct EncoderConfig {
  std::string checkpoint_id;
  int layers_to_concat = 4;
  SubwordToWord subword_to_word = SubwordToWord::kFirstSubtoken;
  bool trainable = false;
};

nlohmann::json to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

// Directory of EVENTSHIFT_CACHE, or ./checkpoints when unset.
std::filesystem::path checkpoint_cache();
// An existing directory path is used as is; otherwise the id is looked up
// in the cache. Throws ConfigError for an unknown id.
std::filesystem::path resolve_checkpoint(const std::string& checkpoint_id);

// n_words x (layers_to_concat * hidden). Sentences longer than the encoder
// window are embedded in half-overlapping windows; each word takes its
// vector from the window where its first piece has the most context.
nn::Matrix embed_contextual(const std::vector<std::string>& words, const TransformerEncoder& enc,
                            int layers_to_concat);
nn::Matrix embed_contextual(const corpus::SentenceRecord& s, const TransformerEncoder& enc, int layers_to_concat);

// Universal POS tags plus a final row for anything else.
const std::vector<std::string>& universal_tagset();

struct PosEmbeddingTable {
  std::vector<std::string> tagset;
  int dim = 0;
  nn::Matrix matrix;  // (tagset.size() + 1) x dim, last row = unknown

  static PosEmbeddingTable random(int dim, unsigned long seed,
                                  const std::vector<std::string>& tagset = universal_tagset());
  int row_of(const std::optional<std::string>& tag) const;
};

nn::Matrix embed_pos(const corpus::SentenceRecord& s, const PosEmbeddingTable& tbl);

class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual int dim() const = 0;
  virtual nn::Matrix features(const corpus::SentenceRecord& s) const = 0;
  virtual std::string describe() const = 0;
};

class ContextualFeaturizer : public Featurizer {
 public:
  ContextualFeaturizer(std::shared_ptr<const TransformerEncoder> enc, int layers_to_concat, std::string id = "");
  int dim() const override;
  nn::Matrix features(const corpus::SentenceRecord& s) const override;
  std::string describe() const override { return "contextual:" + id_; }
  const TransformerEncoder& encoder() const { return *enc_; }

 private:
  std::shared_ptr<const TransformerEncoder> enc_;
  int layers_;
  std::string id_;
};

class PosFeaturizer : public Featurizer {
 public:
  explicit PosFeaturizer(PosEmbeddingTable tbl) : tbl_(std::move(tbl)) {}
  int dim() const override { return tbl_.dim; }
  nn::Matrix features(const corpus::SentenceRecord& s) const override { return embed_pos(s, tbl_); }
  std::string describe() const override { return "pos"; }

 private:
  PosEmbeddingTable tbl_;
};

// Loads the checkpoint named by cfg and validates layers_to_concat.
std::unique_ptr<ContextualFeaturizer> make_contextual_featurizer(const EncoderConfig& cfg);

// Features of every sentence of a corpus, in corpus order.
std::vector<nn::Matrix> featurize(const Featurizer& f, const corpus::Corpus& c);

// Text embedding file: one word followed by dim floats per line.
struct StaticEmbeddings {
  int dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
};
StaticEmbeddings load_static_embeddings(const std::filesystem::path& file, int expected_dim = 300);

}  // namespace eventshift::encoders
