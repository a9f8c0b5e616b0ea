#include "eventshift/daft/daft.h"

#include "eventshift/encoders/features.h"
#include "eventshift/error.h"
#include "eventshift/nn/optim.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eventshift::daft {

using encoders::SubwordVocab;
using encoders::TransformerEncoder;

Objective objective_from_string(const std::string& s) {
  if (s == "mlm") return Objective::kMlm;
  if (s == "pos") return Objective::kPos;
  throw ConfigError("unknown DAFT objective '" + s + "' (expected mlm or pos)");
}

std::string to_string(Objective o) { return o == Objective::kMlm ? "mlm" : "pos"; }

nlohmann::json to_json(const DaftConfig& c) {
  return {{"epochs", c.epochs},
          {"batch", c.batch},
          {"objective", to_string(c.objective)},
          {"mask_rate", c.mask_rate},
          {"mask_token_share", c.mask_token_share},
          {"random_token_share", c.random_token_share},
          {"lr", c.lr},
          {"seed", c.seed}};
}

void validate(const DaftConfig& c) {
  if (c.epochs < 0) throw ConfigError("daft: epochs must be >= 0");
  if (c.batch < 1) throw ConfigError("daft: batch must be >= 1");
  if (!(c.mask_rate > 0.0 && c.mask_rate < 1.0)) throw ConfigError("daft: mask_rate must be in (0, 1)");
  if (c.mask_token_share < 0.0 || c.random_token_share < 0.0 || c.mask_token_share + c.random_token_share > 1.0)
    throw ConfigError("daft: corruption shares must be non-negative and sum to at most 1");
  if (!(c.lr > 0.0)) throw ConfigError("daft: lr must be positive");
}

DaftConfig daft_config_from_json(const nlohmann::json& j) {
  DaftConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  if (j.contains("objective")) c.objective = objective_from_string(j.at("objective").get<std::string>());
  c.mask_rate = j.value("mask_rate", c.mask_rate);
  c.mask_token_share = j.value("mask_token_share", c.mask_token_share);
  c.random_token_share = j.value("random_token_share", c.random_token_share);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
  validate(c);
  return c;
}

nlohmann::json mixing_record(const MixedCorpus& m) {
  return {{"n_source", m.n_source},
          {"n_target", m.n_target},
          {"source_tokens", m.source_tokens},
          {"target_tokens", m.target_tokens}};
}

namespace {

std::vector<MixedSentence> sentences_of(const corpus::Corpus& c, bool target) {
  std::vector<MixedSentence> out;
  for (const auto& d : c.documents)
    for (const auto& s : d.sentences) {
      if (s.tokens.empty()) continue;
      MixedSentence m;
      m.doc_id = s.doc_id.empty() ? d.doc_id : s.doc_id;
      m.target = target;
      for (const auto& t : s.tokens) {
        m.words.push_back(t.text);
        m.pos.push_back(t.pos);
      }
      out.push_back(std::move(m));
    }
  return out;
}

long token_count(const std::vector<MixedSentence>& v) {
  long n = 0;
  for (const auto& s : v) n += static_cast<long>(s.words.size());
  return n;
}

}  // namespace

MixedCorpus build_mixed_corpus(const corpus::Corpus& src, const corpus::Corpus& tgt, unsigned long seed) {
  auto s = sentences_of(src, false);
  auto t = sentences_of(tgt, true);
  if (s.empty()) throw ConfigError("daft: source text is empty");
  if (t.empty()) throw ConfigError("daft: target text is empty");
  std::mt19937_64 rng(seed);
  std::shuffle(s.begin(), s.end(), rng);
  std::shuffle(t.begin(), t.end(), rng);
  const long budget = std::min(token_count(s), token_count(t));
  auto cut = [budget](std::vector<MixedSentence>& v) {
    long n = 0;
    std::size_t keep = 0;
    while (keep < v.size() && n < budget) n += static_cast<long>(v[keep++].words.size());
    v.resize(keep);
  };
  cut(s);
  cut(t);
  MixedCorpus m;
  m.n_source = static_cast<long>(s.size());
  m.n_target = static_cast<long>(t.size());
  m.source_tokens = token_count(s);
  m.target_tokens = token_count(t);
  m.sentences = std::move(s);
  std::move(t.begin(), t.end(), std::back_inserter(m.sentences));
  std::shuffle(m.sentences.begin(), m.sentences.end(), rng);
  return m;
}

std::vector<Window> windows(const std::vector<std::string>& words, const SubwordVocab& vocab, int max_len) {
  const int room = max_len - 2;
  if (room < 1) throw std::invalid_argument("windows: max_len too small");
  std::vector<Window> out;
  Window cur;
  auto flush = [&] {
    if (cur.words.empty()) return;
    cur.ids.insert(cur.ids.begin(), SubwordVocab::kCls);
    cur.ids.push_back(SubwordVocab::kSep);
    for (int& r : cur.word_rows) ++r;
    out.push_back(std::move(cur));
    cur = Window{};
  };
  for (int i = 0; i < static_cast<int>(words.size()); ++i) {
    std::vector<int> p = vocab.encode_word(words[static_cast<std::size_t>(i)]);
    if (static_cast<int>(p.size()) > room) p.resize(static_cast<std::size_t>(room));
    if (static_cast<int>(cur.ids.size() + p.size()) > room) flush();
    cur.word_rows.push_back(static_cast<int>(cur.ids.size()));
    cur.words.push_back(i);
    cur.ids.insert(cur.ids.end(), p.begin(), p.end());
  }
  flush();
  return out;
}

int MaskedExample::selected() const {
  return static_cast<int>(std::count_if(target.begin(), target.end(), [](int t) { return t >= 0; }));
}

MaskedExample mask_pieces(const std::vector<int>& ids, const SubwordVocab& vocab, const DaftConfig& cfg,
                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> any_piece(SubwordVocab::kNumSpecial, std::max(SubwordVocab::kNumSpecial, vocab.size() - 1));
  MaskedExample ex{ids, std::vector<int>(ids.size(), -1)};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (vocab.is_special(ids[i]) && ids[i] != SubwordVocab::kUnk) continue;
    if (u(rng) >= cfg.mask_rate) continue;
    ex.target[i] = ids[i];
    const double r = u(rng);
    if (r < cfg.mask_token_share)
      ex.input[i] = SubwordVocab::kMask;
    else if (r < cfg.mask_token_share + cfg.random_token_share)
      ex.input[i] = any_piece(rng);
  }
  return ex;
}

nn::Var mlm_loss(nn::Graph& g, const TransformerEncoder& enc, const MaskedExample& ex, nn::Rng* dropout,
                 bool trainable) {
  std::vector<int> rows, targets;
  for (std::size_t i = 0; i < ex.target.size(); ++i)
    if (ex.target[i] >= 0) {
      rows.push_back(static_cast<int>(i));
      targets.push_back(ex.target[i]);
    }
  if (rows.empty()) throw std::invalid_argument("mlm_loss: no selected positions");
  auto out = enc.forward(g, ex.input, dropout, trainable);
  nn::Var logits = enc.mlm_logits(g, g.gather_rows(out.layers.back(), rows), trainable);
  const std::vector<double> w(rows.size(), 1.0);
  return g.softmax_xent(logits, targets, w);
}

std::vector<double> mlm_position_losses(const TransformerEncoder& enc, const MaskedExample& ex) {
  nn::Graph g;
  auto out = enc.forward(g, ex.input, nullptr, false);
  const nn::Matrix& z = g.value(enc.mlm_logits(g, out.layers.back(), false));
  std::vector<double> losses(ex.target.size(), 0.0);
  for (std::size_t i = 0; i < ex.target.size(); ++i) {
    const double weight = ex.target[i] >= 0 ? 1.0 : 0.0;
    const int label = ex.target[i] >= 0 ? ex.target[i] : ex.input[i];
    const auto row = z.row(static_cast<Eigen::Index>(i));
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    losses[i] = weight * (lse - row(label));
  }
  return losses;
}

namespace {

struct Item {
  Window w;
  std::vector<int> tags;  // per word, POS objective only
};

// Shared epoch loop: batches of cfg.batch items in a seeded order, one
// optimizer step per batch. loss_of adds one item's summed loss to the
// graph and reports how many positions it covered.
template <class LossOf>
FinetuneResult run_epochs(const std::vector<Item>& items, const DaftConfig& cfg, nn::Optimizer& opt,
                          LossOf&& loss_of) {
  if (static_cast<int>(items.size()) < cfg.batch)
    throw ConfigError("daft: mixed corpus has " + std::to_string(items.size()) + " windows, fewer than one batch of " +
                      std::to_string(cfg.batch));
  FinetuneResult r;
  std::mt19937_64 order_rng(cfg.seed + 2);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double total = 0.0;
    long count = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      nn::Graph g;
      std::vector<nn::Var> parts;
      long n = 0;
      for (std::size_t k = start; k < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch)); ++k) {
        auto [loss, covered] = loss_of(g, items[order[k]]);
        if (covered == 0) continue;
        parts.push_back(loss);
        n += covered;
      }
      if (parts.empty()) continue;
      nn::Var sum = parts.size() == 1 ? parts[0] : g.sum_all(g.concat_rows(parts));
      nn::Var loss = g.scale(sum, 1.0 / static_cast<double>(n));
      const double value = g.scalar(sum);
      if (!std::isfinite(value)) throw TrainingError("daft: non-finite loss in epoch " + std::to_string(epoch));
      opt.zero_grad();
      g.backward(loss);
      opt.step();
      total += value;
      count += n;
      ++r.steps;
    }
    r.epoch_loss.push_back(count ? total / static_cast<double>(count) : 0.0);
    spdlog::info("daft {} epoch {} loss {:.4f}", to_string(cfg.objective), epoch, r.epoch_loss.back());
  }
  return r;
}

}  // namespace

FinetuneResult mlm_finetune(TransformerEncoder& enc, const std::vector<std::vector<std::string>>& sentences,
                            const DaftConfig& cfg) {
  validate(cfg);
  std::vector<Item> items;
  for (const auto& s : sentences)
    for (auto& w : windows(s, enc.vocab(), enc.config().max_len)) items.push_back({std::move(w), {}});
  nn::Adam opt(enc.all_params(), cfg.lr);
  std::mt19937_64 mask_rng(cfg.seed);
  nn::Rng dropout(cfg.seed + 1);
  return run_epochs(items, cfg, opt, [&](nn::Graph& g, const Item& it) -> std::pair<nn::Var, long> {
    MaskedExample ex = mask_pieces(it.w.ids, enc.vocab(), cfg, mask_rng);
    const int n = ex.selected();
    if (n == 0) return {nn::Var{}, 0};
    return {mlm_loss(g, enc, ex, &dropout), n};
  });
}

FinetuneResult mlm_finetune(TransformerEncoder& enc, const MixedCorpus& mixed, const DaftConfig& cfg) {
  if (cfg.objective != Objective::kMlm) throw ConfigError("mlm_finetune needs objective mlm");
  std::vector<std::vector<std::string>> sentences;
  for (const auto& s : mixed.sentences) sentences.push_back(s.words);
  return mlm_finetune(enc, sentences, cfg);
}

FinetuneResult pos_finetune(TransformerEncoder& enc, const MixedCorpus& mixed, const DaftConfig& cfg,
                            double* final_accuracy) {
  validate(cfg);
  if (cfg.objective != Objective::kPos) throw ConfigError("pos_finetune needs objective pos");
  const auto& tagset = encoders::universal_tagset();
  std::vector<Item> items;
  for (const auto& s : mixed.sentences) {
    std::vector<int> tags;
    for (std::size_t i = 0; i < s.pos.size(); ++i) {
      if (!s.pos[i] || s.pos[i]->empty())
        throw IntegrityError("document " + s.doc_id + ": token '" + s.words[i] + "' has no POS tag");
      auto it = std::find(tagset.begin(), tagset.end(), *s.pos[i]);
      if (it == tagset.end())
        throw IntegrityError("document " + s.doc_id + ": tag '" + *s.pos[i] + "' is not a universal POS tag");
      tags.push_back(static_cast<int>(it - tagset.begin()));
    }
    for (auto& w : windows(s.words, enc.vocab(), enc.config().max_len)) {
      std::vector<int> wt;
      for (int word : w.words) wt.push_back(tags[static_cast<std::size_t>(word)]);
      items.push_back({std::move(w), std::move(wt)});
    }
  }
  nn::Rng init(cfg.seed + 3);
  nn::Linear head("daft.pos_head", enc.config().hidden, static_cast<int>(tagset.size()), init);
  nn::ParamList params = enc.body_params();
  head.collect(params);
  nn::Adam opt(params, cfg.lr);
  nn::Rng dropout(cfg.seed + 1);
  auto r = run_epochs(items, cfg, opt, [&](nn::Graph& g, const Item& it) -> std::pair<nn::Var, long> {
    auto out = enc.forward(g, it.w.ids, &dropout, true);
    nn::Var z = head.forward(g, g.gather_rows(out.layers.back(), it.w.word_rows));
    const std::vector<double> w(it.tags.size(), 1.0);
    return {g.softmax_xent(z, it.tags, w), static_cast<long>(it.tags.size())};
  });
  if (final_accuracy) {
    long ok = 0, total = 0;
    for (const Item& it : items) {
      nn::Graph g;
      auto out = enc.forward(g, it.w.ids, nullptr, false);
      const nn::Matrix& z = g.value(head.forward(g, g.gather_rows(out.layers.back(), it.w.word_rows), false));
      for (std::size_t i = 0; i < it.tags.size(); ++i) {
        Eigen::Index best;
        z.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        ok += best == it.tags[i];
        ++total;
      }
    }
    *final_accuracy = total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
  }
  return r;
}

FinetuneResult daft_finetune(const std::string& base_checkpoint, const MixedCorpus& mixed, const DaftConfig& cfg,
                             const std::filesystem::path& out_dir) {
  validate(cfg);
  const auto base = encoders::resolve_checkpoint(base_checkpoint);
  std::error_code ec;
  if (std::filesystem::exists(out_dir) && std::filesystem::equivalent(base, out_dir, ec))
    throw ConfigError("daft: output directory is the base checkpoint " + base.string());
  auto enc = TransformerEncoder::load(base);
  FinetuneResult r = cfg.objective == Objective::kMlm ? mlm_finetune(*enc, mixed, cfg) : pos_finetune(*enc, mixed, cfg);
  enc->save(out_dir, {{"base_checkpoint", base_checkpoint},
                      {"daft", to_json(cfg)},
                      {"mixing", mixing_record(mixed)},
                      {"epoch_loss", r.epoch_loss}});
  return r;
}

}  // namespace eventshift::daft
