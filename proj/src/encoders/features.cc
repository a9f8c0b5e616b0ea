#include "eventshift/encoders/features.h"

#include "eventshift/error.h"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace eventshift::encoders {

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"checkpoint_id", c.checkpoint_id},
          {"layers_to_concat", c.layers_to_concat},
          {"subword_to_word", "first_subtoken"},
          {"trainable", c.trainable}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.checkpoint_id = j.value("checkpoint_id", c.checkpoint_id);
  c.layers_to_concat = j.value("layers_to_concat", c.layers_to_concat);
  if (j.value("subword_to_word", std::string("first_subtoken")) != "first_subtoken")
    throw ConfigError("subword_to_word must be first_subtoken");
  c.trainable = j.value("trainable", c.trainable);
  if (c.trainable) throw ConfigError("trainable encoders are not supported; features are frozen");
  return c;
}

std::filesystem::path checkpoint_cache() {
  const char* env = std::getenv("EVENTSHIFT_CACHE");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("checkpoints");
}

std::filesystem::path resolve_checkpoint(const std::string& id) {
  if (id.empty()) throw ConfigError("empty checkpoint_id");
  std::filesystem::path direct(id);
  if (std::filesystem::is_regular_file(direct / "config.json")) return direct;
  std::filesystem::path cached = checkpoint_cache() / id;
  if (std::filesystem::is_regular_file(cached / "config.json")) return cached;
  throw ConfigError("unknown checkpoint_id '" + id + "' (looked in " + checkpoint_cache().string() + ")");
}

nn::Matrix embed_contextual(const std::vector<std::string>& words, const TransformerEncoder& enc,
                            int layers_to_concat) {
  const TransformerConfig& cfg = enc.config();
  if (layers_to_concat < 1 || layers_to_concat > cfg.layers)
    throw ConfigError("layers_to_concat must be in [1, " + std::to_string(cfg.layers) + "]");
  const int n = static_cast<int>(words.size());
  const int d = cfg.hidden;
  nn::Matrix out(n, layers_to_concat * d);
  if (n == 0) return out;

  std::vector<int> pieces, first(n);
  for (int i = 0; i < n; ++i) {
    first[i] = static_cast<int>(pieces.size());
    for (int id : enc.vocab().encode_word(words[i])) pieces.push_back(id);
  }
  const int P = static_cast<int>(pieces.size());
  const int W = cfg.max_len - 2;
  std::vector<int> starts{0};
  if (P > W) {
    const int stride = std::max(1, W / 2);
    for (int s = stride; s + W < P + stride; s += stride) starts.push_back(std::min(s, P - W));
  }
  std::vector<int> owner(n, 0);
  for (int i = 0; i < n; ++i) {
    int best = -1;
    for (int w = 0; w < static_cast<int>(starts.size()); ++w) {
      const int lo = starts[w], hi = std::min(P, starts[w] + W);
      if (first[i] < lo || first[i] >= hi) continue;
      const int ctx = std::min(first[i] - lo, hi - 1 - first[i]);
      if (ctx > best) best = ctx, owner[i] = w;
    }
  }
  for (int w = 0; w < static_cast<int>(starts.size()); ++w) {
    const int lo = starts[w], hi = std::min(P, starts[w] + W);
    std::vector<int> ids{SubwordVocab::kCls};
    ids.insert(ids.end(), pieces.begin() + lo, pieces.begin() + hi);
    ids.push_back(SubwordVocab::kSep);
    nn::Graph g;
    auto o = enc.forward(g, ids, nullptr, false);
    const int L = static_cast<int>(o.layers.size());
    for (int i = 0; i < n; ++i) {
      if (owner[i] != w) continue;
      const int row = first[i] - lo + 1;
      for (int k = 0; k < layers_to_concat; ++k)
        out.block(i, k * d, 1, d) = g.value(o.layers[L - layers_to_concat + k]).row(row);
    }
  }
  return out;
}

nn::Matrix embed_contextual(const corpus::SentenceRecord& s, const TransformerEncoder& enc, int layers_to_concat) {
  return embed_contextual(s.words(), enc, layers_to_concat);
}

const std::vector<std::string>& universal_tagset() {
  static const std::vector<std::string> tags = {"ADJ",  "ADP", "ADV",  "AUX",   "CCONJ", "DET",
                                                "INTJ", "NOUN", "NUM", "PART",  "PRON",  "PROPN",
                                                "PUNCT", "SCONJ", "SYM", "VERB", "X"};
  return tags;
}

PosEmbeddingTable PosEmbeddingTable::random(int dim, unsigned long seed, const std::vector<std::string>& tagset) {
  if (dim < 1) throw ConfigError("POS embedding dim must be positive");
  PosEmbeddingTable t;
  t.tagset = tagset;
  t.dim = dim;
  t.matrix.resize(static_cast<Eigen::Index>(tagset.size()) + 1, dim);
  nn::Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index i = 0; i < t.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j) t.matrix(i, j) = n(rng);
  return t;
}

int PosEmbeddingTable::row_of(const std::optional<std::string>& tag) const {
  if (tag)
    for (std::size_t i = 0; i < tagset.size(); ++i)
      if (tagset[i] == *tag) return static_cast<int>(i);
  return static_cast<int>(tagset.size());
}

nn::Matrix embed_pos(const corpus::SentenceRecord& s, const PosEmbeddingTable& tbl) {
  nn::Matrix out(static_cast<Eigen::Index>(s.tokens.size()), tbl.dim);
  for (std::size_t i = 0; i < s.tokens.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = tbl.matrix.row(tbl.row_of(s.tokens[i].pos));
  return out;
}

ContextualFeaturizer::ContextualFeaturizer(std::shared_ptr<const TransformerEncoder> enc, int layers_to_concat,
                                           std::string id)
    : enc_(std::move(enc)), layers_(layers_to_concat), id_(std::move(id)) {
  if (layers_ < 1 || layers_ > enc_->config().layers)
    throw ConfigError("layers_to_concat must be in [1, " + std::to_string(enc_->config().layers) + "]");
}

int ContextualFeaturizer::dim() const { return layers_ * enc_->config().hidden; }

nn::Matrix ContextualFeaturizer::features(const corpus::SentenceRecord& s) const {
  return embed_contextual(s, *enc_, layers_);
}

std::unique_ptr<ContextualFeaturizer> make_contextual_featurizer(const EncoderConfig& cfg) {
  std::shared_ptr<const TransformerEncoder> enc = TransformerEncoder::load(resolve_checkpoint(cfg.checkpoint_id));
  return std::make_unique<ContextualFeaturizer>(enc, cfg.layers_to_concat, cfg.checkpoint_id);
}

std::vector<nn::Matrix> featurize(const Featurizer& f, const corpus::Corpus& c) {
  std::vector<nn::Matrix> out;
  out.reserve(c.num_sentences());
  for (const auto& d : c.documents)
    for (const auto& s : d.sentences) out.push_back(f.features(s));
  return out;
}

StaticEmbeddings load_static_embeddings(const std::filesystem::path& file, int expected_dim) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read embeddings " + file.string());
  StaticEmbeddings e;
  e.dim = expected_dim;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(expected_dim));
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') throw ParseError("bad float '" + tok + "'", no);
      v.push_back(x);
    }
    if (static_cast<int>(v.size()) != expected_dim)
      throw ParseError("expected " + std::to_string(expected_dim) + " values, got " + std::to_string(v.size()), no);
    e.vectors[word] = std::move(v);
  }
  return e;
}

}  // namespace eventshift::encoders
