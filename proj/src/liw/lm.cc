#include "eventshift/liw/lm.h"

#include "eventshift/error.h"
#include "eventshift/nn/optim.h"
#include "eventshift/nn/param_io.h"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <map>

namespace eventshift::liw {

double sentence_loglik(const LanguageModel& lm, const std::vector<std::string>& words) {
  double total = 0.0;
  for (double lp : lm.token_log_probs(words)) total += lp;
  return total;
}

double sentence_loglik(const LanguageModel& lm, const corpus::SentenceRecord& s) {
  return sentence_loglik(lm, s.words());
}

LmVocab::LmVocab() {
  for (const char* w : {"<unk>", "<eos>"}) {
    ids_[w] = static_cast<int>(words_.size());
    words_.push_back(w);
  }
}

LmVocab LmVocab::build(const std::vector<std::vector<std::string>>& sentences, int min_count) {
  std::map<std::string, long> counts;
  long total = 0;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[w], ++total;
  if (total == 0) throw ConfigError("cannot build a language-model vocabulary from empty text");
  LmVocab v;
  for (const auto& [w, c] : counts)
    if (c >= min_count && !v.ids_.count(w)) {
      v.ids_[w] = static_cast<int>(v.words_.size());
      v.words_.push_back(w);
    }
  return v;
}

LmVocab LmVocab::from_words(const std::vector<std::string>& words) {
  if (words.size() < 2 || words[0] != "<unk>" || words[1] != "<eos>")
    throw ParseError("language-model vocabulary must start with <unk>, <eos>");
  LmVocab v;
  for (std::size_t i = 2; i < words.size(); ++i) {
    if (v.ids_.count(words[i])) throw ParseError("duplicate vocabulary word '" + words[i] + "'");
    v.ids_[words[i]] = static_cast<int>(v.words_.size());
    v.words_.push_back(words[i]);
  }
  return v;
}

int LmVocab::id(const std::string& w) const {
  auto it = ids_.find(w);
  return it == ids_.end() ? kUnk : it->second;
}

nlohmann::json to_json(const LmConfig& c) {
  return {{"layers", c.layers}, {"hidden", c.hidden}, {"dropout", c.dropout}, {"min_count", c.min_count},
          {"seed", c.seed},     {"tied_embeddings", true}};
}

nlohmann::json to_json(const LmTrainConfig& c) {
  return {{"optimizer", "sgd"},     {"lr", c.lr},
          {"lr_decay", c.lr_decay}, {"plateau_patience", c.plateau_patience},
          {"clip", c.clip},         {"batch_size", c.batch_size},
          {"bptt", c.bptt},         {"epochs", c.epochs},
          {"valid_fraction", c.valid_fraction}};
}

LmConfig lm_config_from_json(const nlohmann::json& j) {
  LmConfig c;
  c.layers = j.value("layers", c.layers);
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.min_count = j.value("min_count", c.min_count);
  c.seed = j.value("seed", c.seed);
  if (c.layers < 1 || c.hidden < 1 || c.dropout < 0.0 || c.dropout >= 1.0 || c.min_count < 1)
    throw ConfigError("invalid language-model config");
  return c;
}

LmTrainConfig lm_train_config_from_json(const nlohmann::json& j) {
  LmTrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
  c.clip = j.value("clip", c.clip);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.bptt = j.value("bptt", c.bptt);
  c.epochs = j.value("epochs", c.epochs);
  c.valid_fraction = j.value("valid_fraction", c.valid_fraction);
  if (!(c.lr > 0.0) || !(c.lr_decay >= 1.0) || c.plateau_patience < 1 || !(c.clip > 0.0) || c.batch_size < 1 ||
      c.bptt < 1 || c.epochs < 1 || !(c.valid_fraction > 0.0 && c.valid_fraction < 1.0))
    throw ConfigError("invalid language-model training config");
  return c;
}

LrSchedule::LrSchedule(double lr, double decay, int patience) : lr_(lr), decay_(decay), patience_(patience) {
  if (!(lr > 0.0) || !(decay >= 1.0) || patience < 1) throw ConfigError("invalid learning-rate schedule");
}

double LrSchedule::on_epoch_end(double valid_loss) {
  if (valid_loss < best_) {
    best_ = valid_loss;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= patience_) {
    lr_ /= decay_;
    ++plateaus_;
    bad_epochs_ = 0;
  }
  return lr_;
}

LstmLm::LstmLm(const LmConfig& cfg, LmVocab vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
  if (cfg.layers < 1 || cfg.hidden < 1) throw ConfigError("invalid language-model config");
  nn::Rng rng(cfg.seed);
  nn::Matrix e(vocab_.size(), cfg.hidden);
  nn::uniform_init(e, 0.1, rng);
  emb_ = nn::Parameter("lm.embedding", e);
  for (int l = 0; l < cfg.layers; ++l)
    layers_.emplace_back("lm.lstm" + std::to_string(l), cfg.hidden, cfg.hidden, rng);
  out_bias_ = nn::Parameter("lm.out_bias", nn::Matrix::Zero(1, vocab_.size()));
}

LstmLm::State LstmLm::zero_state(int batch) const {
  State s;
  for (int l = 0; l < cfg_.layers; ++l) {
    s.h.push_back(nn::Matrix::Zero(batch, cfg_.hidden));
    s.c.push_back(nn::Matrix::Zero(batch, cfg_.hidden));
  }
  return s;
}

nn::Var LstmLm::forward(nn::Graph& g, const std::vector<std::vector<int>>& steps, State& state, nn::Rng* rng,
                        bool trainable) const {
  const double p = rng ? cfg_.dropout : 0.0;
  auto drop = [&](nn::Var x) { return p > 0.0 ? g.dropout(x, p, *rng) : x; };
  nn::Var emb = g.param(emb_, trainable);
  std::vector<nn::Lstm::Bound> bound;
  std::vector<nn::LstmState> s;
  for (int l = 0; l < cfg_.layers; ++l) {
    bound.push_back(layers_[l].bind(g, trainable));
    s.push_back({g.input(state.h[l]), g.input(state.c[l])});
  }
  std::vector<nn::Var> tops;
  for (const auto& ids : steps) {
    nn::Var x = drop(g.gather_rows(emb, ids));
    for (int l = 0; l < cfg_.layers; ++l) {
      s[l] = layers_[l].step(g, bound[l], x, s[l]);
      x = drop(s[l].h);
    }
    tops.push_back(x);
  }
  for (int l = 0; l < cfg_.layers; ++l) {
    state.h[l] = g.value(s[l].h);
    state.c[l] = g.value(s[l].c);
  }
  nn::Var top = tops.size() == 1 ? tops[0] : g.concat_rows(tops);
  return g.add_row(g.matmul(top, g.transpose(emb)), g.param(out_bias_, trainable));
}

std::vector<double> LstmLm::token_log_probs(const std::vector<std::string>& words) const {
  std::vector<double> out;
  if (words.empty()) return out;
  std::vector<std::vector<int>> steps;
  steps.push_back({LmVocab::kEos});
  for (std::size_t i = 0; i + 1 < words.size(); ++i) steps.push_back({vocab_.id(words[i])});
  nn::Graph g;
  State st = zero_state(1);
  nn::Var logits = forward(g, steps, st, nullptr, false);
  const nn::Matrix& z = g.value(logits);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto row = z.row(static_cast<Eigen::Index>(i));
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    out.push_back(row(vocab_.id(words[i])) - lse);
  }
  return out;
}

void LstmLm::init_embeddings(const encoders::StaticEmbeddings& e) {
  if (e.dim != cfg_.hidden)
    throw ConfigError("embedding file has dim " + std::to_string(e.dim) + " but the LM hidden size is " +
                      std::to_string(cfg_.hidden));
  for (int i = 0; i < vocab_.size(); ++i) {
    auto it = e.vectors.find(vocab_.word(i));
    if (it == e.vectors.end()) continue;
    for (int j = 0; j < e.dim; ++j) emb_.value(i, j) = it->second[static_cast<std::size_t>(j)];
  }
}

nn::ParamList LstmLm::params() const {
  nn::ParamList out{&emb_};
  for (auto& l : layers_) l.collect(out);
  out.push_back(&out_bias_);
  return out;
}

void LstmLm::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j = {{"config", to_json(cfg_)}, {"vocab", vocab_.words()}};
  std::ofstream(dir / "lm.json") << j.dump() << '\n';
  nn::save_params(params(), dir / "params.bin");
}

std::unique_ptr<LstmLm> LstmLm::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "lm.json");
  if (!in) throw ConfigError("no language model at " + dir.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "lm.json").string() + ": " + e.what());
  }
  auto lm = std::make_unique<LstmLm>(lm_config_from_json(j.at("config")),
                                     LmVocab::from_words(j.at("vocab").get<std::vector<std::string>>()));
  nn::load_params(lm->params(), dir / "params.bin");
  return lm;
}

namespace {

// Column-major streams: stream b is a contiguous slice of the token stream.
std::vector<std::vector<int>> batchify(const LmVocab& v, const std::vector<std::vector<std::string>>& sentences,
                                       int batch) {
  std::vector<int> ids{LmVocab::kEos};
  for (const auto& s : sentences) {
    for (const auto& w : s) ids.push_back(v.id(w));
    ids.push_back(LmVocab::kEos);
  }
  const std::size_t n = ids.size() / static_cast<std::size_t>(batch);
  std::vector<std::vector<int>> streams(static_cast<std::size_t>(batch));
  for (std::size_t b = 0; b < streams.size(); ++b)
    streams[b].assign(ids.begin() + static_cast<long>(b * n), ids.begin() + static_cast<long>((b + 1) * n));
  return streams;
}

struct Window {
  std::vector<std::vector<int>> inputs;
  std::vector<int> targets;  // row-aligned with the logits
};

Window window(const std::vector<std::vector<int>>& streams, std::size_t start, std::size_t len) {
  Window w;
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<int> in;
    for (const auto& s : streams) {
      in.push_back(s[start + t]);
      w.targets.push_back(s[start + t + 1]);
    }
    w.inputs.push_back(std::move(in));
  }
  return w;
}

}  // namespace

double stream_loss(LstmLm& lm, const std::vector<std::vector<std::string>>& sentences, int batch_size, int bptt) {
  auto streams = batchify(lm.vocab(), sentences, batch_size);
  const std::size_t n = streams[0].size();
  if (n < 2) throw ConfigError("validation text too short for the batch size");
  auto state = lm.zero_state(batch_size);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < n; i += static_cast<std::size_t>(bptt)) {
    const std::size_t len = std::min(static_cast<std::size_t>(bptt), n - 1 - i);
    Window w = window(streams, i, len);
    nn::Graph g;
    nn::Var logits = lm.forward(g, w.inputs, state, nullptr, false);
    std::vector<double> ones(w.targets.size(), 1.0);
    total += g.scalar(g.softmax_xent(logits, w.targets, ones));
    count += w.targets.size();
  }
  return total / static_cast<double>(count);
}

LmTrainResult train_lm(const std::vector<std::vector<std::string>>& sentences, const LmConfig& cfg,
                       const LmTrainConfig& tcfg, const encoders::StaticEmbeddings* init) {
  std::vector<std::vector<std::string>> nonempty;
  for (const auto& s : sentences)
    if (!s.empty()) nonempty.push_back(s);
  if (nonempty.size() < 2) throw ConfigError("language-model training needs at least two sentences");
  const std::size_t n_valid =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(tcfg.valid_fraction * nonempty.size())));
  std::vector<std::vector<std::string>> train(nonempty.begin(), nonempty.end() - static_cast<long>(n_valid));
  std::vector<std::vector<std::string>> valid(nonempty.end() - static_cast<long>(n_valid), nonempty.end());

  LmTrainResult r;
  r.lm = std::make_unique<LstmLm>(cfg, LmVocab::build(train, cfg.min_count));
  if (init) r.lm->init_embeddings(*init);
  LstmLm& lm = *r.lm;
  auto streams = batchify(lm.vocab(), train, tcfg.batch_size);
  const std::size_t n = streams[0].size();
  if (n < 2) throw ConfigError("training text too short for the batch size");

  nn::ParamList params = lm.params();
  nn::Sgd opt(params, tcfg.lr);
  LrSchedule schedule(tcfg.lr, tcfg.lr_decay, tcfg.plateau_patience);
  nn::Rng rng(cfg.seed + 1);
  nn::Snapshot best = nn::snapshot(params);
  double best_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    auto state = lm.zero_state(tcfg.batch_size);
    double total = 0.0;
    int windows = 0;
    for (std::size_t i = 0; i + 1 < n; i += static_cast<std::size_t>(tcfg.bptt)) {
      const std::size_t len = std::min(static_cast<std::size_t>(tcfg.bptt), n - 1 - i);
      Window w = window(streams, i, len);
      nn::Graph g;
      nn::Var logits = lm.forward(g, w.inputs, state, &rng, true);
      std::vector<double> weights(w.targets.size(), 1.0 / static_cast<double>(w.targets.size()));
      nn::Var loss = g.softmax_xent(logits, w.targets, weights);
      const double value = g.scalar(loss);
      if (!std::isfinite(value))
        throw TrainingError("non-finite language-model loss at epoch " + std::to_string(epoch));
      opt.zero_grad();
      g.backward(loss);
      nn::clip_grad_norm(params, tcfg.clip);
      opt.step();
      total += value;
      ++windows;
    }
    LmEpoch rec;
    rec.epoch = epoch;
    rec.lr = opt.lr();
    rec.train_loss = total / windows;
    rec.valid_loss = stream_loss(lm, valid, 1, tcfg.bptt);
    rec.valid_ppl = std::exp(rec.valid_loss);
    r.history.push_back(rec);
    spdlog::info("lm epoch {} lr {:.4g} train {:.4f} valid ppl {:.3f}", epoch, rec.lr, rec.train_loss, rec.valid_ppl);
    if (rec.valid_loss < best_loss) {
      best_loss = rec.valid_loss;
      best = nn::snapshot(params);
    }
    opt.set_lr(schedule.on_epoch_end(rec.valid_loss));
  }
  nn::restore(params, best);
  return r;
}

}  // namespace eventshift::liw
