#include "eventshift/encoders/transformer.h"

#include "eventshift/error.h"
#include "eventshift/nn/param_io.h"

#include <cmath>
#include <fstream>

namespace eventshift::encoders {

namespace {

nn::Parameter normal_param(const std::string& name, int r, int c, double sd, nn::Rng& rng) {
  std::normal_distribution<double> n(0.0, sd);
  nn::Matrix m(r, c);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = n(rng);
  return nn::Parameter(name, m);
}

nn::Parameter constant_param(const std::string& name, int c, double v) {
  return nn::Parameter(name, nn::Matrix::Constant(1, c, v));
}

}  // namespace

nlohmann::json to_json(const TransformerConfig& c) {
  return {{"hidden", c.hidden}, {"layers", c.layers},   {"heads", c.heads}, {"ffn", c.ffn},
          {"max_len", c.max_len}, {"dropout", c.dropout}, {"seed", c.seed}};
}

TransformerConfig transformer_config_from_json(const nlohmann::json& j) {
  TransformerConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.ffn = j.value("ffn", c.ffn);
  c.max_len = j.value("max_len", c.max_len);
  c.dropout = j.value("dropout", c.dropout);
  c.seed = j.value("seed", c.seed);
  if (c.hidden < 1 || c.layers < 1 || c.heads < 1 || c.hidden % c.heads != 0 || c.ffn < 1 || c.max_len < 3)
    throw ConfigError("invalid transformer config");
  return c;
}

TransformerEncoder::TransformerEncoder(const TransformerConfig& cfg, SubwordVocab vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  if (cfg.hidden % cfg.heads != 0) throw ConfigError("hidden must be divisible by heads");
  nn::Rng rng(cfg.seed);
  const int d = cfg.hidden;
  tok_emb_ = normal_param("tok_emb", vocab_.size(), d, 0.1, rng);
  pos_emb_ = normal_param("pos_emb", cfg.max_len, d, 0.02, rng);
  emb_ln_g_ = constant_param("emb_ln.g", d, 1.0);
  emb_ln_b_ = constant_param("emb_ln.b", d, 0.0);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    Block b{nn::Linear(p + "q", d, d, rng),
            nn::Linear(p + "k", d, d, rng),
            nn::Linear(p + "v", d, d, rng),
            nn::Linear(p + "o", d, d, rng),
            constant_param(p + "ln1.g", d, 1.0),
            constant_param(p + "ln1.b", d, 0.0),
            nn::Linear(p + "ff1", d, cfg.ffn, rng),
            nn::Linear(p + "ff2", cfg.ffn, d, rng),
            constant_param(p + "ln2.g", d, 1.0),
            constant_param(p + "ln2.b", d, 0.0)};
    blocks_.push_back(std::move(b));
  }
  mlm_transform_ = nn::Linear("mlm.transform", d, d, rng);
  mlm_ln_g_ = constant_param("mlm.ln.g", d, 1.0);
  mlm_ln_b_ = constant_param("mlm.ln.b", d, 0.0);
  mlm_bias_ = nn::Parameter("mlm.bias", nn::Matrix::Zero(1, vocab_.size()));
}

TransformerEncoder::Output TransformerEncoder::forward(nn::Graph& g, const std::vector<int>& ids, nn::Rng* rng,
                                                       bool trainable) const {
  const int n = static_cast<int>(ids.size());
  if (n == 0 || n > cfg_.max_len) throw std::invalid_argument("transformer: sequence length out of range");
  const double p = rng ? cfg_.dropout : 0.0;
  auto drop = [&](nn::Var x) { return p > 0.0 ? g.dropout(x, p, *rng) : x; };

  std::vector<int> positions(n);
  for (int i = 0; i < n; ++i) positions[i] = i;
  nn::Var x = g.add(g.gather_rows(g.param(tok_emb_, trainable), ids),
                    g.gather_rows(g.param(pos_emb_, trainable), positions));
  x = drop(g.layer_norm_rows(x, g.param(emb_ln_g_, trainable), g.param(emb_ln_b_, trainable)));

  const int d = cfg_.hidden;
  const int dh = d / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Output out;
  for (Block& b : blocks_) {
    nn::Var q = b.q.forward(g, x, trainable);
    nn::Var k = b.k.forward(g, x, trainable);
    nn::Var v = b.v.forward(g, x, trainable);
    std::vector<nn::Var> heads;
    for (int h = 0; h < cfg_.heads; ++h) {
      nn::Var qh = g.slice_cols(q, h * dh, dh);
      nn::Var kh = g.slice_cols(k, h * dh, dh);
      nn::Var vh = g.slice_cols(v, h * dh, dh);
      nn::Var att = g.softmax_rows(g.scale(g.matmul(qh, g.transpose(kh)), scale));
      heads.push_back(g.matmul(drop(att), vh));
    }
    nn::Var ctx = cfg_.heads == 1 ? heads[0] : g.concat_cols(heads);
    nn::Var a = drop(b.o.forward(g, ctx, trainable));
    x = g.layer_norm_rows(g.add(x, a), g.param(b.ln1_g, trainable), g.param(b.ln1_b, trainable));
    nn::Var f = drop(b.ff2.forward(g, g.gelu(b.ff1.forward(g, x, trainable)), trainable));
    x = g.layer_norm_rows(g.add(x, f), g.param(b.ln2_g, trainable), g.param(b.ln2_b, trainable));
    out.layers.push_back(x);
  }
  return out;
}

nn::Var TransformerEncoder::mlm_logits(nn::Graph& g, nn::Var hidden, bool trainable) const {
  nn::Var h = g.gelu(mlm_transform_.forward(g, hidden, trainable));
  h = g.layer_norm_rows(h, g.param(mlm_ln_g_, trainable), g.param(mlm_ln_b_, trainable));
  nn::Var logits = g.matmul(h, g.transpose(g.param(tok_emb_, trainable)));
  return g.add_row(logits, g.param(mlm_bias_, trainable));
}

nn::ParamList TransformerEncoder::body_params() const {
  nn::ParamList out{&tok_emb_, &pos_emb_, &emb_ln_g_, &emb_ln_b_};
  for (Block& b : blocks_) {
    b.q.collect(out);
    b.k.collect(out);
    b.v.collect(out);
    b.o.collect(out);
    out.push_back(&b.ln1_g);
    out.push_back(&b.ln1_b);
    b.ff1.collect(out);
    b.ff2.collect(out);
    out.push_back(&b.ln2_g);
    out.push_back(&b.ln2_b);
  }
  return out;
}

nn::ParamList TransformerEncoder::mlm_head_params() const {
  nn::ParamList out;
  mlm_transform_.collect(out);
  out.push_back(&mlm_ln_g_);
  out.push_back(&mlm_ln_b_);
  out.push_back(&mlm_bias_);
  return out;
}

nn::ParamList TransformerEncoder::all_params() const {
  nn::ParamList out = body_params();
  for (nn::Parameter* p : mlm_head_params()) out.push_back(p);
  return out;
}

void TransformerEncoder::save(const std::filesystem::path& dir, const nlohmann::json& extra) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j = {{"architecture", "transformer"}, {"model", to_json(cfg_)}};
  if (!extra.is_null()) j["metadata"] = extra;
  std::ofstream(dir / "config.json") << j.dump(2) << '\n';
  vocab_.save(dir / "vocab.txt");
  nn::save_params(all_params(), dir / "weights.bin");
}

std::unique_ptr<TransformerEncoder> TransformerEncoder::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw ConfigError("checkpoint " + dir.string() + " has no config.json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "config.json").string() + ": " + e.what());
  }
  auto enc = std::make_unique<TransformerEncoder>(transformer_config_from_json(j.at("model")),
                                                  SubwordVocab::load(dir / "vocab.txt"));
  nn::load_params(enc->all_params(), dir / "weights.bin");
  return enc;
}

}  // namespace eventshift::encoders
