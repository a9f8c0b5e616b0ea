#include "doctest.h"

#include "eventshift/error.h"
#include "eventshift/nn/param_io.h"
#include "eventshift/tagger/model.h"
#include "eventshift/tagger/train.h"
#include "gradcheck.h"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace eventshift;
using namespace eventshift::tagger;

namespace {

corpus::SentenceRecord tagged(std::vector<std::string> words, std::vector<std::string> pos, std::vector<int> labels = {}) {
  corpus::SentenceRecord s;
  s.doc_id = "d";
  int off = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    corpus::TokenRecord t;
    t.text = words[i];
    if (i < pos.size() && !pos[i].empty()) t.pos = pos[i];
    t.label = i < labels.size() ? labels[i] : 0;
    t.char_start = off;
    t.char_end = off + static_cast<int>(words[i].size());
    off = t.char_end + 1;
    s.tokens.push_back(t);
  }
  return s;
}

// Random features where the label is a fixed function of the features.
TrainingSet toy_set(int sentences, int dim, unsigned long seed) {
  nn::Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  TrainingSet t;
  for (int s = 0; s < sentences; ++s) {
    const int len = 3 + static_cast<int>(rng() % 5);
    nn::Matrix f(len, dim);
    std::vector<int> y(len);
    for (int i = 0; i < len; ++i) {
      for (int j = 0; j < dim; ++j) f(i, j) = n(rng);
      y[i] = f(i, 0) + 0.5 * f(i, 1) > 0.3 ? 1 : 0;
    }
    t.feats.push_back(f);
    t.labels.push_back(y);
    t.alpha.push_back(1.0);
  }
  return t;
}

TaggerArch small_arch(int dim, double dropout = 0.0) {
  TaggerArch a;
  a.input_dim = dim;
  a.lstm_hidden = 6;
  a.mlp_hidden = 5;
  a.input_dropout = dropout;
  a.seed = 3;
  return a;
}

std::vector<int> all_indices(const TrainingSet& t) {
  std::vector<int> b(t.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<int>(i);
  return b;
}

}  // namespace

TEST_CASE("verb baseline") {
  CHECK(verb_baseline(tagged({"a", "b", "c"}, {"NOUN", "VERB", "ADJ"})) == std::vector<int>{0, 1, 0});
  CHECK(verb_baseline(tagged({"a", "b"}, {"NOUN", "NOUN"})) == std::vector<int>{0, 0});
  auto s = tagged({"was", "diagnosed"}, {"AUX", "VERB"});
  CHECK(verb_baseline(s) == std::vector<int>{1, 1});
  CHECK(verb_baseline(s, false) == std::vector<int>{0, 1});
  try {
    verb_baseline(tagged({"a", "b"}, {"NOUN", ""}));
    FAIL("expected IntegrityError");
  } catch (const IntegrityError& e) {
    CHECK(std::string(e.what()).find("POS tagger") != std::string::npos);
  }
}

TEST_CASE("forward shape, determinism and the zeroed head") {
  TaggerModel m(small_arch(4, 0.5));
  nn::Matrix f = nn::Matrix::Random(7, 4);
  auto p = m.predict_proba(f);
  CHECK(p.size() == 7);
  for (double v : p) CHECK((v > 0.0 && v < 1.0));
  CHECK(m.predict_proba(f) == p);

  auto head = m.head_params();
  for (auto* prm : head) prm->value.setZero();
  head.back()->value(0, 0) = 0.7;  // output bias
  for (double v : m.predict_proba(f)) CHECK(v == doctest::Approx(1.0 / (1.0 + std::exp(-0.7))).epsilon(1e-15));
}

TEST_CASE("parameter groups R and E are disjoint") {
  TaggerModel m(small_arch(4));
  auto r = m.repr_params();
  auto e = m.head_params();
  CHECK(!r.empty());
  CHECK(!e.empty());
  for (auto* a : r)
    for (auto* b : e) CHECK(a != b);
  CHECK(m.params().size() == r.size() + e.size());
  TaggerArch delex = small_arch(4);
  delex.kind = ModelKind::kDelex;
  CHECK(TaggerModel(delex).repr_params().empty());
}

TEST_CASE("unit alphas reproduce the unweighted loss and trajectory") {
  TrainingSet data = toy_set(12, 4, 1);
  TaggerModel m(small_arch(4));
  auto batch = all_indices(data);
  nn::Graph g;
  std::vector<const nn::Matrix*> feats;
  for (auto& f : data.feats) feats.push_back(&f);
  auto fw = m.forward(g, feats, nullptr);
  const double loss = g.scalar(weighted_event_loss(g, fw, data, batch));
  // Independent mean BCE.
  double ref = 0.0;
  int n = 0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    auto p = m.predict_proba(data.feats[s]);
    for (std::size_t i = 0; i < p.size(); ++i, ++n)
      ref -= data.labels[s][i] ? std::log(p[i]) : std::log(1.0 - p[i]);
  }
  CHECK(loss == doctest::Approx(ref / n).epsilon(1e-12));

  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.patience = 2;
  TaggerModel a(small_arch(4, 0.5)), b(small_arch(4, 0.5));
  TrainingSet weighted = data;
  TrainingSet plain = data;
  plain.alpha.clear();
  plain.alpha.assign(data.size(), 1.0);
  train_tagger(a, weighted, data, cfg);
  train_tagger(b, plain, data, cfg);
  CHECK(nn::equals_snapshot(a.params(), nn::snapshot(b.params())));
}

TEST_CASE("zero alphas give zero loss, zero gradients and no update") {
  TrainingSet data = toy_set(6, 4, 2);
  for (double& a : data.alpha) a = 0.0;
  TaggerModel m(small_arch(4, 0.5));
  nn::Adam opt(m.params(), 1e-3);
  auto before = nn::snapshot(m.params());
  nn::Rng rng(0);
  auto batch = all_indices(data);
  CHECK(tagger_step(m, opt, data, batch, rng) == 0.0);
  CHECK(nn::grad_norm(m.params()) == 0.0);
  CHECK(nn::equals_snapshot(m.params(), before));
}

TEST_CASE("weighted loss gradients: finite differences and linearity in alpha") {
  TrainingSet data = toy_set(3, 3, 4);
  data.alpha = {0.3, 1.7, 0.9};
  TaggerModel m(small_arch(3));
  auto batch = all_indices(data);
  std::vector<const nn::Matrix*> feats;
  for (auto& f : data.feats) feats.push_back(&f);
  auto loss = [&](bool back) {
    nn::Graph g;
    auto fw = m.forward(g, feats, nullptr);
    nn::Var l = weighted_event_loss(g, fw, data, batch);
    if (back) g.backward(l);
    return g.scalar(l);
  };
  nn::ParamList params = m.params();
  CHECK(testing::max_grad_rel_error(params, loss) < 1e-4);

  auto grads_with = [&](double a1) {
    data.alpha[1] = a1;
    for (auto* p : params) p->zero_grad();
    loss(true);
    std::vector<nn::Matrix> out;
    for (auto* p : params) out.push_back(p->grad);
    return out;
  };
  auto g0 = grads_with(0.0), g1 = grads_with(1.0), g3 = grads_with(3.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Matrix lhs = g3[i] - g0[i];
    nn::Matrix rhs = 3.0 * (g1[i] - g0[i]);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("ten-sentence toy corpus is fit exactly") {
  TrainingSet data = toy_set(10, 4, 9);
  TaggerArch arch = small_arch(4);
  arch.lstm_hidden = 16;
  arch.mlp_hidden = 16;
  TaggerModel m(arch);
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.max_epochs = 200;
  cfg.patience = 199;
  auto r = train_tagger(m, data, data, cfg);
  CHECK(r.best_dev_f1 == 1.0);
  CHECK(evaluate(m, data).f1 == 1.0);
  CHECK(r.best_epoch <= 200);
}

TEST_CASE("delex predictions ignore POS-preserving word substitutions") {
  auto tbl = encoders::PosEmbeddingTable::random(8, 0);
  encoders::PosFeaturizer f(tbl);
  TaggerArch arch = small_arch(8);
  arch.kind = ModelKind::kDelex;
  TaggerModel m(arch);
  auto a = tagged({"she", "irrigated", "the", "wound"}, {"PRON", "VERB", "DET", "NOUN"});
  auto b = tagged({"he", "drained", "a", "cyst"}, {"PRON", "VERB", "DET", "NOUN"});
  CHECK(m.predict_proba(f.features(a)) == m.predict_proba(f.features(b)));
}

TEST_CASE("checkpoints, history and failure modes") {
  TrainingSet data = toy_set(8, 4, 5);
  TaggerModel m(small_arch(4));
  TrainConfig cfg;
  cfg.max_epochs = 4;
  cfg.patience = 3;
  auto r = train_tagger(m, data, data, cfg);
  CHECK(r.history.size() >= 1);
  const auto dir = std::filesystem::temp_directory_path() / "eventshift_tagger_ckpt";
  std::filesystem::remove_all(dir);
  write_checkpoint(dir, m, cfg, r);
  auto back = TaggerModel::load(dir);
  CHECK(predict_all(back, data.feats) == predict_all(m, data.feats));
  CHECK(std::filesystem::exists(dir / "history.csv"));
  CHECK(std::filesystem::exists(dir / "meta.json"));
  std::ostringstream csv;
  write_history_csv(csv, r.history);
  CHECK(csv.str().rfind("epoch,train_loss,dev_precision,dev_recall,dev_f1\n", 0) == 0);
  std::filesystem::remove_all(dir);

  TrainingSet empty;
  CHECK_THROWS_AS(train_tagger(m, empty, data, cfg), ConfigError);
  TrainingSet bad = data;
  bad.feats[0](0, 0) = std::nan("");
  CHECK_THROWS_AS(train_tagger(m, bad, data, cfg), TrainingError);
  TrainConfig wrong = cfg;
  wrong.patience = wrong.max_epochs;
  CHECK_THROWS_AS(validate(wrong), ConfigError);
}
