// Acceptance suite: one PASS/FAIL line per criterion. Behavioral criteria
// read their fixtures (configs and golden numbers) from
// tests/fixtures/acceptance/.

#include "../oracles.h"
#include "../unit/gradcheck.h"
#include "eventshift/ada/ada.h"
#include "eventshift/corpus/ingest.h"
#include "eventshift/corpus/stats.h"
#include "eventshift/daft/daft.h"
#include "eventshift/encoders/features.h"
#include "eventshift/error.h"
#include "eventshift/evalsuite/score.h"
#include "eventshift/experiment/experiment.h"
#include "eventshift/liw/lm.h"
#include "eventshift/liw/weights.h"
#include "eventshift/synthbench/generator.h"
#include "eventshift/tagger/train.h"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

using namespace eventshift;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  bool skipped_part = false;
};

// Accumulates failures with a short reason each.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (failures_++ < 5) fails_ += (fails_.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome done() const {
    Outcome o;
    o.pass = pass_;
    o.detail = pass_ ? notes_ : fails_ + (notes_.empty() ? "" : " | " + notes_);
    return o;
  }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::string fails_, notes_;
};

std::string fixed(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v, int prec = 2) {
  std::ostringstream s;
  s.precision(prec);
  s << std::scientific << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const fs::path& fixtures() {
  static const fs::path p = fs::path(EVENTSHIFT_FIXTURES) / "acceptance";
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return nlohmann::json::parse(in);
}

fs::path work_dir() {
  static const fs::path p = [] {
    fs::path d = fs::temp_directory_path() / "eventshift_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

std::vector<std::vector<std::string>> words_of(const corpus::Corpus& c) {
  std::vector<std::vector<std::string>> out;
  for (const auto& d : c.documents)
    for (const auto& s : d.sentences) {
      std::vector<std::string> w;
      for (const auto& t : s.tokens) w.push_back(t.text);
      out.push_back(std::move(w));
    }
  return out;
}

// ---------------------------------------------------------------- 1

Outcome weights_suite() {
  Checks c;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> len(1, 10000);
  std::uniform_real_distribution<double> val(-10000.0, 0.0), shift(-1000.0, 1000.0);
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> ll(static_cast<std::size_t>(len(rng)));
    for (double& x : ll) x = val(rng);
    const double n = static_cast<double>(ll.size());
    auto w = liw::compute_weights(ll);

    long double sum = 0.0L;
    for (double a : w.alphas) sum += a;
    worst_sum = std::max(worst_sum, static_cast<double>(std::fabs(sum - n) / n));

    const double k = shift(rng);
    std::vector<double> moved(ll);
    for (double& x : moved) x += k;
    auto ws = liw::compute_weights(moved);
    for (std::size_t i = 0; i < ll.size(); ++i) {
      const double a = w.alphas[i], b = ws.alphas[i];
      if (a == 0.0 && b == 0.0) continue;
      worst_shift = std::max(worst_shift, std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b)));
    }

    // Rank equality: sorting indices by L and by log alpha gives the same
    // order with the same ties; alpha itself is non-decreasing along it.
    std::vector<std::size_t> idx(ll.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ll[a] < ll[b]; });
    bool rank_ok = true;
    for (std::size_t i = 1; i < idx.size(); ++i) {
      const auto p = idx[i - 1], q = idx[i];
      const bool tie = ll[p] == ll[q];
      if (tie ? w.log_alphas[p] != w.log_alphas[q] : !(w.log_alphas[p] < w.log_alphas[q])) rank_ok = false;
      if (w.alphas[p] > w.alphas[q]) rank_ok = false;
    }
    c.expect(rank_ok, "rank mismatch in trial " + std::to_string(trial));
  }
  c.expect(worst_sum <= 1e-6, "sum error " + sci(worst_sum));
  c.expect(worst_shift <= 1e-9, "shift error " + sci(worst_shift));

  auto hand = liw::compute_weights({std::log(0.2), std::log(0.2), std::log(0.6)});
  const double expected[] = {0.6, 0.6, 1.8};
  for (int i = 0; i < 3; ++i)
    c.expect(std::fabs(hand.alphas[static_cast<std::size_t>(i)] - expected[i]) <= 1e-12,
             "hand case alpha " + std::to_string(i) + " = " + fixed(hand.alphas[static_cast<std::size_t>(i)], 17));

  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + fixed(secs, 2) + " s");
  c.note("max sum rel err " + sci(worst_sum) + ", max shift rel err " + sci(worst_shift) +
         ", " + fixed(secs, 2) + " s");
  return c.done();
}

// ---------------------------------------------------------------- 2

Outcome scoring_oracle() {
  Checks c;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto [gold, pred] = oracles::random_scoring_case(rng, 50);
    auto r = evalsuite::score(pred, gold);
    auto o = oracles::positive_intersection(pred, gold);
    c.expect(r.overall.tp == o.tp && r.overall.fp == o.fp && r.overall.fn == o.fn,
             "counts differ in pair " + std::to_string(trial));

    // Train vocabulary of half the word list so both buckets are populated.
    corpus::Corpus train;
    corpus::DocumentRecord d;
    corpus::SentenceRecord s;
    for (const char* w : {"a", "c", "e", "g"}) s.tokens.push_back({w, std::nullopt, 0, std::nullopt, 0, 1});
    d.sentences.push_back(s);
    train.documents.push_back(d);
    auto part = corpus::iv_oov_partition(gold, corpus::build_vocab(train));
    auto b = evalsuite::bucket_score(pred, gold, part);
    const bool additive = b.iv && b.oov && b.iv->tp + b.oov->tp == b.overall.tp &&
                          b.iv->fp + b.oov->fp == b.overall.fp && b.iv->fn + b.oov->fn == b.overall.fn &&
                          b.overall == r.overall;
    c.expect(additive, "bucket decomposition in pair " + std::to_string(trial));
  }
  c.note("100 pairs");
  return c.done();
}

// ---------------------------------------------------------------- 3

Outcome kappa_cases() {
  Checks c;
  const std::vector<int> same{1, 0, 1, 1, 0, 0, 1};
  c.expect(corpus::cohens_kappa(same, same) == 1.0, "identity");
  const std::vector<int> a{1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  const std::vector<int> b{1, 0, 1, 0, 0, 0, 0, 0, 0, 0};
  const double k = corpus::cohens_kappa(a, b);
  c.expect(std::fabs(k - 0.375) <= 1e-9, "hand case " + fixed(k, 12));
  const std::vector<int> x{1, 0, 1, 0}, y{0, 1, 0, 1};
  const double d = corpus::cohens_kappa(x, y);
  c.expect(std::fabs(d + 1.0) <= 1e-9, "disagreement " + fixed(d, 12));
  c.note("kappa " + fixed(k, 6) + ", " + fixed(d, 6));
  return c.done();
}

// ---------------------------------------------------------------- 4

Outcome corpus_stats_check() {
  Checks c;
  synthbench::ShiftSpec spec;
  auto out = synthbench::generate(spec);
  const std::pair<const char*, const corpus::Corpus*> parts[] = {
      {"source_train", &out.source_train}, {"source_dev", &out.source_dev}, {"target_test", &out.target_test}};
  for (const auto& [name, corp] : parts) {
    const auto s = corpus::corpus_stats(*corp);
    const auto& t = out.truth.corpora.at(name);
    c.expect(s.n_files == t.n_files, std::string(name) + " files");
    c.expect(s.n_tokens == t.n_tokens, std::string(name) + " tokens");
    c.expect(s.n_events == t.n_events, std::string(name) + " events");
    c.expect(s.event_density == t.event_density(), std::string(name) + " density");
    c.expect(s.vocab_size == t.vocab_size, std::string(name) + " vocab");
    c.expect(s.event_vocab_size == t.event_vocab_size, std::string(name) + " event vocab");
  }
  c.note("synthbench stats equal ground truth");

  const char* env = std::getenv("EVENTSHIFT_TIMEBANK_DIR");
  const fs::path tb = env ? fs::path(env) : fixtures() / "timebank";
  Outcome o;
  if (fs::is_directory(tb)) {
    auto s = corpus::corpus_stats(corpus::load_corpus(tb, corpus::InputFormat::kTimeml, "news"));
    c.expect(s.n_files == 54, "timebank files " + std::to_string(s.n_files));
    c.expect(s.n_tokens == 18263, "timebank tokens " + std::to_string(s.n_tokens));
    c.expect(s.n_events == 1986, "timebank events " + std::to_string(s.n_events));
    // 1986/18263 is 10.874%, which does not round to 10.88, so the exact
    // ratio is checked.
    c.expect(s.event_density == 1986.0 / 18263.0, "timebank density " + fixed(100.0 * s.event_density, 3));
    c.note("TimeBank " + std::to_string(s.n_files) + " files, " + std::to_string(s.n_tokens) + " tokens, " +
           std::to_string(s.n_events) + " events");
    o = c.done();
  } else {
    c.note("TimeBank part skipped: no local copy (set EVENTSHIFT_TIMEBANK_DIR)");
    o = c.done();
    o.skipped_part = true;
  }
  return o;
}

// ---------------------------------------------------------------- 5

std::vector<nn::Matrix> values(const nn::ParamList& ps) {
  std::vector<nn::Matrix> out;
  for (auto* p : ps) out.push_back(p->value);
  return out;
}

bool same(const std::vector<nn::Matrix>& a, const std::vector<nn::Matrix>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// Snapshots the watched parameters at the moment the R/E optimizer steps,
// which is after step 1 and before step 2 applies its update.
class SnapshotAdam : public nn::Optimizer {
 public:
  SnapshotAdam(nn::ParamList own, nn::ParamList watched, double lr)
      : nn::Optimizer(own), inner_(own, lr), watched_(std::move(watched)) {}
  void step() override {
    seen = values(watched_);
    inner_.step();
  }
  void set_lr(double lr) override { inner_.set_lr(lr); }
  double lr() const override { return inner_.lr(); }
  std::vector<nn::Matrix> seen;

 private:
  nn::Adam inner_;
  nn::ParamList watched_;
};

tagger::TrainingSet random_set(int sentences, int dim, nn::Rng& rng, double shift = 0.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  tagger::TrainingSet t;
  for (int s = 0; s < sentences; ++s) {
    const int len = 1 + static_cast<int>(rng() % 7);
    nn::Matrix f(len, dim);
    std::vector<int> y(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
      for (int j = 0; j < dim; ++j) f(i, j) = n(rng) + shift;
      y[static_cast<std::size_t>(i)] = f(i, 0) > 0.2 ? 1 : 0;
    }
    t.feats.push_back(f);
    t.labels.push_back(y);
    t.alpha.push_back(u(rng));
  }
  return t;
}

struct ScalarDisc {
  nn::Parameter w{"w", nn::Matrix::Constant(1, 1, 0.0)};
  nn::Var logits(nn::Graph& g, nn::Var pooled, bool trainable) { return g.matmul(pooled, g.param(w, trainable)); }
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Outcome ada_mechanics() {
  Checks c;
  nn::Rng rng(5150);

  // Scope over 50 random steps with varying shapes and lambdas.
  for (int step = 0; step < 50; ++step) {
    const int dim = 2 + static_cast<int>(rng() % 5);
    auto src = random_set(10, dim, rng);
    auto tgt = random_set(10, dim, rng, 0.8);
    tagger::TaggerArch arch;
    arch.input_dim = dim;
    arch.lstm_hidden = 2 + static_cast<int>(rng() % 6);
    arch.mlp_hidden = 2 + static_cast<int>(rng() % 6);
    arch.input_dropout = 0.3;
    arch.seed = rng();
    tagger::TaggerModel m(arch);
    ada::DomainPredictor d(m.repr_dim(), rng(), 8);
    const auto re = m.params();
    const auto dp = d.params();
    nn::ParamList all = re;
    all.insert(all.end(), dp.begin(), dp.end());
    nn::Adam opt_d(dp, 1e-2);
    SnapshotAdam opt_re(re, all, 1e-2);
    nn::Rng r1(rng()), r2(rng());
    std::vector<int> sb, tb;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 5); i < n; ++i) sb.push_back(static_cast<int>(rng() % 10));
    for (int i = 0, n = 1 + static_cast<int>(rng() % 5); i < n; ++i) tb.push_back(static_cast<int>(rng() % 10));
    ada::TaggerAdaBatch b{&m, &src, sb, &tgt.feats, tb, &r1, &r2};
    const double lambda = std::uniform_real_distribution<double>(0.1, 5.0)(rng);

    const auto re0 = values(re), d0 = values(dp);
    ada::ada_step(b, d, opt_d, opt_re, lambda);
    const auto mid = opt_re.seen;
    const std::vector<nn::Matrix> re_mid(mid.begin(), mid.begin() + static_cast<long>(re.size()));
    const std::vector<nn::Matrix> d_mid(mid.begin() + static_cast<long>(re.size()), mid.end());
    c.expect(same(re_mid, re0), "step 1 moved R/E at step " + std::to_string(step));
    c.expect(!same(d_mid, d0), "step 1 left D unchanged at step " + std::to_string(step));
    c.expect(same(values(dp), d_mid), "step 2 moved D at step " + std::to_string(step));
    c.expect(!same(values(re), re0), "step 2 left R/E unchanged at step " + std::to_string(step));
  }

  // lambda = 0 against plain training over 20 steps.
  {
    auto src = random_set(40, 6, rng);
    auto tgt = random_set(40, 6, rng, 0.5);
    tagger::TaggerArch arch;
    arch.input_dim = 6;
    arch.lstm_hidden = 8;
    arch.mlp_hidden = 8;
    arch.input_dropout = 0.4;
    arch.seed = 12;
    tagger::TaggerModel plain(arch), adv(arch);
    ada::DomainPredictor d(adv.repr_dim(), 4);
    nn::Adam op(plain.params(), 5e-3), ore(adv.params(), 5e-3), od(d.params(), 1e-3);
    nn::Rng dp(77), da(77), dt(78);
    bool equal_loss = true;
    for (int s = 0; s < 20; ++s) {
      std::vector<int> batch, tb;
      for (int i = 0; i < 5; ++i) batch.push_back(static_cast<int>(rng() % 40));
      for (int i = 0; i < 3; ++i) tb.push_back(static_cast<int>(rng() % 40));
      const double lp = tagger::tagger_step(plain, op, src, batch, dp);
      ada::TaggerAdaBatch b{&adv, &src, batch, &tgt.feats, tb, &da, &dt};
      const double la = ada::ada_step(b, d, od, ore, 0.0).event_loss;
      equal_loss = equal_loss && la == lp;
    }
    c.expect(equal_loss, "lambda 0 losses differ from plain training");
    c.expect(same(values(plain.params()), values(adv.params())), "lambda 0 parameters differ after 20 steps");
  }

  // Scalar toy: pooled_s = a*xs, pooled_t = a*xt, event loss = e*a,
  // D(p) = w*p, plain SGD.
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const double xs = u(rng), xt = u(rng), e = u(rng), a0 = u(rng), w0 = u(rng);
    const double lr = 0.05, lambda = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
    nn::Parameter a{"a", nn::Matrix::Constant(1, 1, a0)};
    ScalarDisc d;
    d.w.value(0, 0) = w0;
    auto build = [&](nn::Graph& g, bool trainable, bool) {
      nn::Var av = g.param(a, trainable);
      ada::AdaPass p;
      p.src_pooled = g.matmul(g.input(nn::Matrix::Constant(1, 1, xs)), av);
      p.tgt_pooled = g.matmul(g.input(nn::Matrix::Constant(1, 1, xt)), av);
      p.event_loss = g.matmul(g.input(nn::Matrix::Constant(1, 1, e)), av);
      return p;
    };
    nn::Sgd opt_d({&d.w}, lr), opt_re({&a}, lr);
    ada::ada_step(build, d, opt_d, opt_re, lambda);
    // dL/dw for L = (softplus(w a xs) + softplus(-w a xt)) / 2
    const double gw = 0.5 * (sigmoid(w0 * a0 * xs) * a0 * xs - sigmoid(-w0 * a0 * xt) * a0 * xt);
    const double w1 = w0 - lr * gw;
    const double ga = 0.5 * (sigmoid(w1 * a0 * xs) * w1 * xs - sigmoid(-w1 * a0 * xt) * w1 * xt);
    const double a1 = a0 - lr * (e - lambda * ga);
    worst = std::max({worst, std::fabs(d.w.value(0, 0) - w1), std::fabs(a.value(0, 0) - a1)});
  }
  c.expect(worst <= 1e-6, "toy gradient error " + sci(worst));
  c.note("50 scope steps, 20 lambda-0 steps, toy max err " + sci(worst));
  return c.done();
}

// ---------------------------------------------------------------- 6

Outcome weighted_loss_gradients() {
  Checks c;
  nn::Rng rng(6060);
  double worst = 0.0;
  std::size_t max_params = 0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    const int dim = 2 + static_cast<int>(rng() % 4);
    tagger::TaggerArch arch;
    arch.input_dim = dim;
    arch.lstm_hidden = 2 + static_cast<int>(rng() % 5);
    arch.mlp_hidden = 2 + static_cast<int>(rng() % 6);
    arch.input_dropout = 0.0;
    arch.seed = rng();
    tagger::TaggerModel m(arch);
    std::size_t count = 0;
    for (auto* p : m.params()) count += static_cast<std::size_t>(p->value.size());
    max_params = std::max(max_params, count);
    c.expect(count <= 1000, "model has " + std::to_string(count) + " parameters");

    auto data = random_set(6, dim, rng);
    std::uniform_real_distribution<double> alpha(0.0, 3.0);
    for (double& a : data.alpha) a = alpha(rng);
    std::vector<int> batch;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 6); i < n; ++i) batch.push_back(static_cast<int>(rng() % 6));

    auto loss = [&](bool backward) {
      nn::Graph g;
      std::vector<const nn::Matrix*> feats;
      for (int i : batch) feats.push_back(&data.feats[static_cast<std::size_t>(i)]);
      auto f = m.forward(g, feats, nullptr);
      nn::Var l = tagger::weighted_event_loss(g, f, data, batch);
      if (backward) g.backward(l);
      return g.scalar(l);
    };
    worst = std::max(worst, testing::max_grad_rel_error(m.params(), loss));
  }
  c.expect(worst < 1e-4, "max relative error " + sci(worst));
  c.note("20 configurations, <= " + std::to_string(max_params) + " params, max rel err " + sci(worst));
  return c.done();
}

// ---------------------------------------------------------------- 7

Outcome daft_masking() {
  Checks c;
  synthbench::ShiftSpec spec;
  spec.seed = 7;
  auto data = synthbench::generate(spec);
  auto text = words_of(data.source_train);
  for (const auto& s : data.target_raw) text.push_back(s);

  std::map<std::string, long> counts;
  for (const auto& s : text)
    for (const auto& w : s) ++counts[w];
  encoders::TransformerConfig tc;
  tc.hidden = 16;
  tc.layers = 2;
  tc.heads = 2;
  tc.ffn = 32;
  tc.max_len = 48;
  tc.seed = 3;
  auto enc = std::make_shared<encoders::TransformerEncoder>(tc, encoders::SubwordVocab::build(counts, 400));

  daft::DaftConfig cfg;
  std::mt19937_64 rng(11);
  long positions = 0, selected = 0;
  std::size_t examples_checked = 0;
  bool confined = true;
  for (std::size_t k = 0; positions < 100000; k = (k + 1) % text.size()) {
    for (const auto& w : daft::windows(text[k], enc->vocab(), tc.max_len)) {
      auto ex = daft::mask_pieces(w.ids, enc->vocab(), cfg, rng);
      for (std::size_t i = 0; i < w.ids.size(); ++i) {
        if (enc->vocab().is_special(w.ids[i])) {
          confined = confined && ex.target[i] < 0;
          continue;
        }
        ++positions;
        selected += ex.target[i] >= 0;
      }
      if (examples_checked < 200 && ex.selected() > 0) {
        ++examples_checked;
        auto pos = daft::mlm_position_losses(*enc, ex);
        double sum = 0.0;
        for (std::size_t i = 0; i < pos.size(); ++i) {
          if (ex.target[i] < 0) confined = confined && pos[i] == 0.0;
          sum += pos[i];
        }
        nn::Graph g;
        const double total = g.scalar(daft::mlm_loss(g, *enc, ex, nullptr, false));
        confined = confined && std::fabs(total - sum) <= 1e-9 * std::max(1.0, std::fabs(sum));
      }
    }
  }
  const double rate = static_cast<double>(selected) / static_cast<double>(positions);
  c.expect(rate >= 0.13 && rate <= 0.17, "corruption fraction " + fixed(rate));
  c.expect(confined, "loss found at an uncorrupted position");

  // epochs = 0: the fine-tuned copy yields the same downstream predictions.
  const fs::path dir = work_dir() / "daft_zero";
  enc->save(dir / "base");
  daft::DaftConfig zero;
  zero.epochs = 0;
  auto mixed = daft::build_mixed_corpus(data.source_train, synthbench::raw_corpus(data.target_raw, "target"), 0);
  daft::daft_finetune((dir / "base").string(), mixed, zero, dir / "tuned");

  auto predictions = [&](const fs::path& ckpt) {
    encoders::EncoderConfig ec;
    ec.checkpoint_id = ckpt.string();
    ec.layers_to_concat = 2;
    auto f = encoders::make_contextual_featurizer(ec);
    auto train = tagger::make_training_set(*f, data.source_train);
    auto dev = tagger::make_training_set(*f, data.source_dev);
    tagger::TaggerArch arch;
    arch.input_dim = f->dim();
    arch.lstm_hidden = 16;
    arch.mlp_hidden = 16;
    arch.seed = 2;
    tagger::TaggerModel m(arch);
    tagger::TrainConfig tcfg;
    tcfg.max_epochs = 3;
    tcfg.patience = 2;
    tcfg.lr = 5e-3;
    tagger::train_tagger(m, train, dev, tcfg);
    std::vector<nn::Matrix> feats;
    for (const auto& d : data.target_test.documents)
      for (const auto& s : d.sentences) feats.push_back(f->features(s));
    return tagger::predict_all(m, feats);
  };
  c.expect(predictions(dir / "base") == predictions(dir / "tuned"), "epochs=0 predictions differ from baseline");
  c.note("fraction " + fixed(rate) + " over " + std::to_string(positions) + " positions");
  return c.done();
}

// ---------------------------------------------------------------- 11

Outcome lm_training() {
  Checks c;
  const auto fx = read_json(fixtures() / "lm.json");
  auto spec = synthbench::shift_spec_from_json(fx.at("synthbench"));
  auto data = synthbench::generate(spec);
  auto cfg = liw::lm_config_from_json(fx.at("lm"));
  auto tcfg = liw::lm_train_config_from_json(fx.at("train"));
  auto r = liw::train_lm(data.target_raw, cfg, tcfg);
  std::string curve;
  for (const auto& e : r.history) curve += (curve.empty() ? "" : " ") + fixed(e.valid_ppl, 2);
  c.expect(r.history.size() >= 5, "fewer than 5 epochs");
  for (std::size_t i = 1; i < std::min<std::size_t>(5, r.history.size()); ++i)
    c.expect(r.history[i].valid_ppl < r.history[i - 1].valid_ppl, "ppl rose at epoch " + std::to_string(i + 1));

  // The trainer's rates follow the plateau rule applied to its own
  // validation losses.
  double lr = tcfg.lr, best = std::numeric_limits<double>::infinity();
  int bad = 0;
  for (const auto& e : r.history) {
    c.expect(e.lr == lr, "epoch " + std::to_string(e.epoch) + " lr " + fixed(e.lr));
    if (e.valid_loss < best) {
      best = e.valid_loss;
      bad = 0;
    } else if (++bad >= tcfg.plateau_patience) {
      lr /= tcfg.lr_decay;
      bad = 0;
    }
  }

  liw::LrSchedule s(20.0, 4.0, 1);
  const double losses[] = {6.0, 5.0, 5.5, 4.0, 4.0, 3.0};
  std::vector<double> rates;
  for (double l : losses) rates.push_back(s.on_epoch_end(l));
  const std::vector<double> expected{20.0, 20.0, 5.0, 5.0, 1.25, 1.25};
  c.expect(rates == expected && s.plateaus() == 2, "schedule is not 20 -> 5 -> 1.25");
  c.note("valid ppl " + curve + "; schedule 20 -> 5 -> 1.25");
  return c.done();
}

// ---------------------------------------------------------------- 8

Outcome liw_behavior() {
  Checks c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto fx = read_json(fixtures() / "liw.json");
  auto spec = synthbench::shift_spec_from_json(fx.at("synthbench"));
  auto data = synthbench::generate(spec);
  long target_tokens = 0;
  for (const auto& s : data.target_raw) target_tokens += static_cast<long>(s.size());
  c.expect(target_tokens >= 200000, "only " + std::to_string(target_tokens) + " target tokens");

  auto r = liw::train_lm(data.target_raw, liw::lm_config_from_json(fx.at("lm")),
                         liw::lm_train_config_from_json(fx.at("train")));
  std::vector<double> ll;
  for (const auto& d : data.source_train.documents)
    for (const auto& s : d.sentences) ll.push_back(liw::sentence_loglik(*r.lm, s));
  auto w = liw::compute_weights(ll);
  const auto& flag = data.truth.contains_target_vocab;
  double with = 0.0, without = 0.0;
  long n_with = 0, n_without = 0;
  for (std::size_t i = 0; i < ll.size(); ++i) {
    if (flag.at(i)) {
      with += w.alphas[i];
      ++n_with;
    } else {
      without += w.alphas[i];
      ++n_without;
    }
  }
  c.expect(n_with > 0 && n_without > 0, "one group is empty");
  const double mw = n_with ? with / n_with : 0.0, mo = n_without ? without / n_without : 0.0;
  c.expect(mw > mo, "mean alpha with target vocab " + sci(mw, 8) + " <= without " + sci(mo, 8));

  // Regression fixture recorded at calibration.
  const auto& golden = fx.at("golden");
  const double tol = golden.at("rel_tolerance").get<double>();
  auto near = [&](double got, double want) { return std::fabs(got - want) <= tol * std::max(1e-300, std::fabs(want)); };
  c.expect(near(mw, golden.at("mean_alpha_with").get<double>()), "mean alpha with target vocab drifted: " + sci(mw, 8));
  c.expect(near(mo, golden.at("mean_alpha_without").get<double>()), "mean alpha without drifted: " + sci(mo, 8));

  const double secs = seconds_since(t0);
  c.expect(secs < 900.0, "runtime " + fixed(secs, 0) + " s");
  c.note("mean alpha " + sci(mw, 8) + " (" + std::to_string(n_with) + " sentences) vs " + sci(mo, 8) +
         " (" + std::to_string(n_without) + "), " + std::to_string(target_tokens) + " LM tokens, " + fixed(secs, 0) + " s");
  return c.done();
}

// ---------------------------------------------------------------- shared fixture for 9 and 10

struct E2eData {
  fs::path dir;
  synthbench::SynthOutput out;
  fs::path encoder;
};

const E2eData& e2e_data() {
  static const E2eData d = [] {
    const auto fx = read_json(fixtures() / "e2e.json");
    E2eData e;
    e.dir = work_dir() / "e2e";
    auto spec = synthbench::shift_spec_from_json(fx.at("synthbench"));
    e.out = synthbench::generate(spec);
    synthbench::write_output(e.out, spec, e.dir / "data");
    auto ecfg = experiment::encoder_init_config_from_json(fx.at("encoder_init"));
    e.encoder = e.dir / "encoder";
    experiment::init_encoder(words_of(e.out.source_train), ecfg, e.encoder);
    return e;
  }();
  return d;
}

// ---------------------------------------------------------------- 9

Outcome ada_alignment() {
  Checks c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto fx = read_json(fixtures() / "ada_probe.json");
  const auto& data = e2e_data();

  encoders::EncoderConfig ec;
  ec.checkpoint_id = data.encoder.string();
  ec.layers_to_concat = fx.at("layers_to_concat").get<int>();
  auto f = encoders::make_contextual_featurizer(ec);
  auto train = tagger::make_training_set(*f, data.out.source_train);
  auto dev = tagger::make_training_set(*f, data.out.source_dev);
  const corpus::Corpus raw = synthbench::raw_corpus(data.out.target_raw, "target");
  std::vector<nn::Matrix> raw_feats;
  for (const auto& s : raw.documents[0].sentences) raw_feats.push_back(f->features(s));
  std::vector<nn::Matrix> test_feats;
  for (const auto& d : data.out.target_test.documents)
    for (const auto& s : d.sentences) test_feats.push_back(f->features(s));

  auto arch = tagger::tagger_arch_from_json(fx.at("tagger"));
  arch.input_dim = f->dim();
  auto tcfg = tagger::train_config_from_json(fx.at("train"));
  ada::ProbeConfig pcfg;
  pcfg.seed = fx.at("probe_seed").get<unsigned long>();

  // Probe data: held-out source (dev) against target test sentences.
  tagger::TaggerModel plain(arch);
  tagger::train_tagger(plain, train, dev, tcfg);
  auto p0 = ada::domain_probe(ada::pooled_representations(plain, dev.feats),
                              ada::pooled_representations(plain, test_feats), pcfg);

  tagger::TaggerModel adv(arch);
  const double lambda = fx.at("lambda").get<double>();
  ada::DomainPredictor d(adv.repr_dim(), arch.seed + 101);
  ada::train_ada_trial(adv, d, train, raw_feats, dev, tcfg, lambda, fx.at("d_lr").get<double>());
  auto p1 = ada::domain_probe(ada::pooled_representations(adv, dev.feats),
                              ada::pooled_representations(adv, test_feats), pcfg);

  const double drop = 100.0 * (p0.heldout_accuracy - p1.heldout_accuracy);
  c.expect(drop >= 10.0, "probe accuracy drop " + fixed(drop, 1) + " points");
  const double secs = seconds_since(t0);
  c.expect(secs < 1800.0, "runtime " + fixed(secs, 0) + " s");
  c.note("probe accuracy no-transfer " + fixed(100.0 * p0.heldout_accuracy, 1) + " vs post-ADA " +
         fixed(100.0 * p1.heldout_accuracy, 1) + " (lambda " + fixed(lambda, 2) + "), " + fixed(secs, 0) + " s");
  return c.done();
}

// ---------------------------------------------------------------- 10

Outcome end_to_end() {
  Checks c;
  const auto fx = read_json(fixtures() / "e2e.json");
  const auto& data = e2e_data();
  const fs::path d = data.dir / "data";
  std::map<std::string, double> f1;
  for (const auto& [name, extra] : fx.at("runs").items()) {
    nlohmann::json j = fx.at("experiment");
    for (const auto& [k, v] : extra.items()) j[k] = v;
    j["name"] = name;
    j["source_train"] = (d / "source_train.jsonl").string();
    j["source_dev"] = (d / "source_dev.jsonl").string();
    j["target_test"] = (d / "target_test.jsonl").string();
    j["target_raw"] = (d / "target_raw.txt").string();
    j["encoder"]["checkpoint_id"] = data.encoder.string();
    j["output_dir"] = (data.dir / "runs" / name).string();
    try {
      auto r = experiment::run(experiment::experiment_config_from_json(j));
      f1[name] = 100.0 * r.out_of_domain.at("target").overall.f1;
    } catch (const std::exception& e) {
      c.expect(false, name + " failed: " + e.what());
    }
  }
  const auto& golden = fx.at("golden_f1");
  const double tol = fx.at("golden_tolerance").get<double>();
  std::string summary;
  for (const auto& [name, v] : f1) {
    summary += (summary.empty() ? "" : ", ") + name + " " + fixed(v, 2);
    if (golden.contains(name))
      c.expect(std::fabs(v - golden.at(name).get<double>()) <= tol,
               name + " F1 " + fixed(v, 2) + " vs golden " + fixed(golden.at(name).get<double>(), 2));
    else
      c.expect(false, "no golden F1 for " + name);
  }
  double best_gain = -100.0;
  std::string best_name;
  if (f1.count("none"))
    for (const char* t : {"liw", "daft", "ada"})
      if (f1.count(t) && f1[t] - f1["none"] > best_gain) {
        best_gain = f1[t] - f1["none"];
        best_name = t;
      }
  c.expect(best_gain >= 2.0, "best gain over no-transfer " + fixed(best_gain, 2) + " F1 (" + best_name + ")");
  c.note("target F1: " + summary + "; best gain " + fixed(best_gain, 2) + " (" + best_name + ")");
  return c.done();
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  // Optional argument: comma-separated criterion numbers to run.
  std::set<int> only;
  if (argc > 1) {
    std::stringstream s(argv[1]);
    for (std::string x; std::getline(s, x, ',');) only.insert(std::stoi(x));
  }
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, weights_suite},     {2, scoring_oracle}, {3, kappa_cases},    {4, corpus_stats_check},
      {5, ada_mechanics},     {6, weighted_loss_gradients},           {7, daft_masking},
      {8, liw_behavior},      {9, ada_alignment},  {10, end_to_end},    {11, lm_training},
  };
  int failed = 0;
  for (const auto& [n, fn] : criteria) {
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fixed(seconds_since(t0), 1)
              << " s) " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  fs::remove_all(fs::temp_directory_path() / "eventshift_acceptance");
  return failed ? 1 : 0;
}
