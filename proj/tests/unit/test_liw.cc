#include "doctest.h"

#include "eventshift/error.h"
#include "eventshift/liw/lm.h"
#include "eventshift/liw/weights.h"
#include "gradcheck.h"

#include <cmath>
#include <filesystem>
#include <map>

using namespace eventshift;
using namespace eventshift::liw;

namespace {

// Frozen bigram table; "<s>" is the sentence-start context.
class ToyLm : public LanguageModel {
 public:
  std::map<std::pair<std::string, std::string>, double> p;
  std::vector<double> token_log_probs(const std::vector<std::string>& words) const override {
    std::vector<double> out;
    std::string prev = "<s>";
    for (const auto& w : words) {
      auto it = p.find({prev, w});
      out.push_back(std::log(it == p.end() ? 0.01 : it->second));
      prev = w;
    }
    return out;
  }
};

corpus::Corpus corpus_of(const std::vector<std::vector<std::string>>& sents) {
  corpus::Corpus c;
  corpus::DocumentRecord d;
  d.doc_id = "doc";
  for (const auto& words : sents) {
    corpus::SentenceRecord s;
    s.doc_id = "doc";
    int off = 0;
    for (const auto& w : words) {
      corpus::TokenRecord t;
      t.text = w;
      t.char_start = off;
      t.char_end = off + static_cast<int>(w.size());
      off = t.char_end + 1;
      s.tokens.push_back(t);
    }
    d.sentences.push_back(s);
  }
  c.documents.push_back(d);
  return c;
}

LmConfig tiny_lm() {
  LmConfig c;
  c.layers = 2;
  c.hidden = 8;
  c.dropout = 0.0;
  c.min_count = 1;
  return c;
}

}  // namespace

TEST_CASE("compute_weights examples") {
  auto uniform = compute_weights({-3.0, -3.0, -3.0, -3.0});
  for (double a : uniform.alphas) CHECK(a == doctest::Approx(1.0).epsilon(1e-15));

  auto w = compute_weights({std::log(0.2), std::log(0.2), std::log(0.6)});
  CHECK(w.alphas[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(w.alphas[1] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(w.alphas[2] == doctest::Approx(1.8).epsilon(1e-12));

  auto scaled = compute_weights({std::log(0.2) + std::log(7.0), std::log(0.2) + std::log(7.0), std::log(0.6) + std::log(7.0)});
  for (int i = 0; i < 3; ++i) CHECK(scaled.alphas[i] == doctest::Approx(w.alphas[i]).epsilon(1e-12));

  CHECK(compute_weights({-12345.0}).alphas[0] == 1.0);
  CHECK_THROWS(compute_weights({}));
  CHECK_THROWS(compute_weights({-1.0, std::nan("")}));
}

TEST_CASE("compute_weights sums to N and preserves order on wide ranges") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10000.0, 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> ll(1 + rng() % 500);
    for (double& x : ll) x = u(rng);
    auto w = compute_weights(ll);
    double sum = 0.0;
    for (double a : w.alphas) sum += a;
    CHECK(std::abs(sum - static_cast<double>(ll.size())) <= 1e-6 * ll.size());
    for (std::size_t i = 0; i < ll.size(); ++i)
      for (std::size_t j = 0; j < ll.size(); ++j)
        if (ll[i] < ll[j]) {
          CHECK(w.log_alphas[i] < w.log_alphas[j]);
          CHECK(w.alphas[i] <= w.alphas[j]);
        }
  }
}

TEST_CASE("per-token normalized variant divides by length") {
  std::vector<int> lengths{2, 4};
  auto w = compute_weights({-4.0, -8.0}, &lengths);
  CHECK(w.alphas[0] == doctest::Approx(1.0));
  CHECK(w.alphas[1] == doctest::Approx(1.0));
  CHECK(compute_weights({-4.0, -8.0}).alphas[0] > 1.0);
}

TEST_CASE("sentence_loglik on a frozen toy LM") {
  ToyLm lm;
  lm.p[{"<s>", "w1"}] = 0.5;
  lm.p[{"w1", "w2"}] = 0.2;
  CHECK(sentence_loglik(lm, std::vector<std::string>{"w1", "w2"}) == doctest::Approx(std::log(0.1)).epsilon(1e-14));
}

TEST_CASE("LSTM LM scoring contracts") {
  LstmLm lm(tiny_lm(), LmVocab::build({{"a", "b", "c"}}, 1));
  std::vector<std::string> s{"a", "b"};
  const double base = sentence_loglik(lm, s);
  CHECK(base < 0.0);
  s.push_back("c");
  CHECK(sentence_loglik(lm, s) < base);
  CHECK(std::isfinite(sentence_loglik(lm, std::vector<std::string>{"zzz", "yyy"})));
  CHECK(lm.token_log_probs({"zzz"}) == lm.token_log_probs({"qqq"}));
  // Conditional distributions sum to one.
  double total = 0.0;
  for (const auto& w : lm.vocab().words()) total += std::exp(lm.token_log_probs({w})[0]);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("LM gradients and tied embeddings") {
  LmConfig cfg = tiny_lm();
  cfg.hidden = 4;
  LstmLm lm(cfg, LmVocab::build({{"a", "b", "c", "d"}}, 1));
  nn::ParamList params = lm.params();
  int embeddings = 0;
  for (auto* p : params) embeddings += p->name.find("embedding") != std::string::npos;
  CHECK(embeddings == 1);
  CHECK(params[0] == &lm.embedding());

  const std::vector<std::vector<int>> steps{{1, 2}, {2, 3}, {3, 4}};
  const std::vector<int> targets{2, 3, 3, 4, 4, 5};
  auto loss = [&](bool back) {
    nn::Graph g;
    auto st = lm.zero_state(2);
    nn::Var logits = lm.forward(g, steps, st, nullptr, true);
    std::vector<double> w(targets.size(), 1.0);
    nn::Var l = g.softmax_xent(logits, targets, w);
    if (back) g.backward(l);
    return g.scalar(l);
  };
  CHECK(testing::max_grad_rel_error(params, loss, 1e-4) < 1e-5);
}

TEST_CASE("learning-rate schedule divides by four per plateau") {
  LrSchedule s(20.0, 4.0, 1);
  CHECK(s.on_epoch_end(5.0) == 20.0);
  CHECK(s.on_epoch_end(4.0) == 20.0);
  CHECK(s.on_epoch_end(4.5) == 5.0);
  CHECK(s.on_epoch_end(3.0) == 5.0);
  CHECK(s.on_epoch_end(3.0) == 1.25);
  CHECK(s.plateaus() == 2);
}

TEST_CASE("LM learns a deterministic sequence") {
  std::vector<std::vector<std::string>> text(400, {"a", "b", "a", "b"});
  LmConfig cfg = tiny_lm();
  cfg.hidden = 16;
  LmTrainConfig t;
  t.epochs = 6;
  t.batch_size = 4;
  t.bptt = 10;
  t.lr = 5.0;
  auto r = train_lm(text, cfg, t);
  CHECK(r.history.back().valid_ppl < 1.2);
  CHECK(r.history.back().valid_ppl < r.history.front().valid_ppl);

  const auto dir = std::filesystem::temp_directory_path() / "eventshift_lm";
  std::filesystem::remove_all(dir);
  r.lm->save(dir);
  auto back = LstmLm::load(dir);
  CHECK(back->token_log_probs({"a", "b"}) == r.lm->token_log_probs({"a", "b"}));
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(train_lm({}, cfg, t), ConfigError);
}

TEST_CASE("weigh_corpus and the sidecar") {
  ToyLm lm;
  lm.p[{"<s>", "x"}] = 0.5;
  auto same = weigh_corpus(lm, corpus_of({{"x", "y"}, {"x", "y"}, {"x", "y"}}));
  for (double a : same.alphas) CHECK(a == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(weigh_corpus(lm, corpus_of({{"q", "r", "s"}})).alphas[0] == 1.0);

  auto c = corpus_of({{"x"}, {"y"}, {"x", "y"}});
  auto w = weigh_corpus(lm, c);
  auto rows = sidecar_rows(c, w);
  CHECK(rows.size() == 3);
  const auto file = std::filesystem::temp_directory_path() / "eventshift_weights.jsonl";
  write_sidecar(file, rows);
  auto back = read_sidecar(file);
  CHECK(back.size() == 3);
  CHECK(alphas_for(c, back) == w.alphas);
  back.pop_back();
  CHECK_THROWS_AS(alphas_for(c, back), IntegrityError);
  std::filesystem::remove(file);
}
