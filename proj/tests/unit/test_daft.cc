#include "doctest.h"

#include "eventshift/daft/daft.h"
#include "eventshift/encoders/features.h"
#include "eventshift/error.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace eventshift;
using namespace eventshift::daft;
using encoders::SubwordVocab;
using encoders::TransformerEncoder;

namespace {

corpus::Corpus corpus_of(const std::vector<std::vector<std::string>>& sents, const std::string& doc,
                         const std::vector<std::vector<std::string>>& tags = {}) {
  corpus::Corpus c;
  corpus::DocumentRecord d;
  d.doc_id = doc;
  for (std::size_t k = 0; k < sents.size(); ++k) {
    corpus::SentenceRecord s;
    s.doc_id = doc;
    int off = 0;
    for (std::size_t i = 0; i < sents[k].size(); ++i) {
      corpus::TokenRecord t;
      t.text = sents[k][i];
      if (k < tags.size() && i < tags[k].size() && !tags[k][i].empty()) t.pos = tags[k][i];
      t.char_start = off;
      t.char_end = off + static_cast<int>(t.text.size());
      off = t.char_end + 1;
      s.tokens.push_back(t);
    }
    d.sentences.push_back(s);
  }
  c.documents.push_back(d);
  return c;
}

std::vector<std::vector<std::string>> uniform_sentences(int n, int len, const std::string& word) {
  return std::vector<std::vector<std::string>>(static_cast<std::size_t>(n),
                                               std::vector<std::string>(static_cast<std::size_t>(len), word));
}

const std::vector<std::vector<std::string>>& tiny_text() {
  static const std::vector<std::vector<std::string>> text = {
      {"the", "patient", "was", "irrigated", "today"},
      {"the", "doctor", "saw", "the", "patient"},
      {"a", "biopsy", "was", "taken", "today"},
      {"the", "patient", "is", "wheezing"},
      {"the", "doctor", "ordered", "a", "biopsy"},
      {"excision", "of", "the", "lesion", "was", "done"},
  };
  return text;
}

SubwordVocab tiny_vocab() {
  std::map<std::string, long> counts;
  for (const auto& s : tiny_text())
    for (const auto& w : s) counts[w] += 2;
  return SubwordVocab::build(counts, 200);
}

encoders::TransformerConfig tiny_cfg() {
  encoders::TransformerConfig c;
  c.hidden = 16;
  c.layers = 2;
  c.heads = 2;
  c.ffn = 32;
  c.max_len = 16;
  c.dropout = 0.0;
  c.seed = 4;
  return c;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("daft config defaults, JSON and validation") {
  DaftConfig c;
  CHECK(c.epochs == 3);
  CHECK(c.batch == 4);
  CHECK(c.mask_rate == 0.15);
  auto back = daft_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(daft_config_from_json({{"objective", "pos"}}).objective == Objective::kPos);
  CHECK_THROWS_AS(daft_config_from_json({{"objective", "nsp"}}), ConfigError);
  CHECK_THROWS_AS(daft_config_from_json({{"mask_rate", 1.0}}), ConfigError);
  CHECK_THROWS_AS(daft_config_from_json({{"mask_rate", 0.0}}), ConfigError);
}

TEST_CASE("mixed corpus: 100 vs 300 equal-length sentences gives 100 + 100") {
  auto m = build_mixed_corpus(corpus_of(uniform_sentences(100, 7, "s"), "src"),
                              corpus_of(uniform_sentences(300, 7, "t"), "tgt"), 1);
  CHECK(m.n_source == 100);
  CHECK(m.n_target == 100);
  CHECK(m.sentences.size() == 200);
  CHECK(m.source_tokens == m.target_tokens);

  auto eq = build_mixed_corpus(corpus_of(uniform_sentences(40, 5, "s"), "src"),
                               corpus_of(uniform_sentences(40, 5, "t"), "tgt"), 2);
  CHECK(eq.n_source == 40);
  CHECK(eq.n_target == 40);
  CHECK(mixing_record(eq)["n_source"] == 40);
}

TEST_CASE("mixed corpus token balance holds within one sentence length") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto random_side = [&](int max_len, const std::string& w) {
      std::vector<std::vector<std::string>> s(1 + rng() % 200);
      for (auto& x : s) x.assign(1 + rng() % static_cast<unsigned long>(max_len), w);
      return s;
    };
    const int ls = 5 + static_cast<int>(rng() % 30), lt = 5 + static_cast<int>(rng() % 60);
    auto src = random_side(ls, "s"), tgt = random_side(lt, "t");
    auto m = build_mixed_corpus(corpus_of(src, "a"), corpus_of(tgt, "b"), trial);
    long ns = 0, nt = 0;
    for (const auto& s : m.sentences) (s.target ? nt : ns) += static_cast<long>(s.words.size());
    CHECK(ns == m.source_tokens);
    CHECK(nt == m.target_tokens);
    CHECK(std::abs(ns - nt) <= std::max(ls, lt));
  }
  auto a = build_mixed_corpus(corpus_of(uniform_sentences(30, 3, "s"), "a"), corpus_of(uniform_sentences(90, 2, "t"), "b"), 9);
  auto b = build_mixed_corpus(corpus_of(uniform_sentences(30, 3, "s"), "a"), corpus_of(uniform_sentences(90, 2, "t"), "b"), 9);
  REQUIRE(a.sentences.size() == b.sentences.size());
  for (std::size_t i = 0; i < a.sentences.size(); ++i) CHECK(a.sentences[i].target == b.sentences[i].target);
  CHECK_THROWS_AS(build_mixed_corpus(corpus::Corpus{}, corpus_of(uniform_sentences(3, 3, "t"), "b"), 0), ConfigError);
  CHECK_THROWS_AS(build_mixed_corpus(corpus_of(uniform_sentences(3, 3, "t"), "b"), corpus::Corpus{}, 0), ConfigError);
}

TEST_CASE("windows split long sentences at word boundaries") {
  SubwordVocab v = tiny_vocab();
  std::vector<std::string> words;
  for (int i = 0; i < 20; ++i) words.push_back(tiny_text()[static_cast<std::size_t>(i % 6)][0]);
  words.push_back("irrigated");
  auto ws = windows(words, v, 8);
  REQUIRE(ws.size() > 1);
  std::vector<int> seen;
  for (const auto& w : ws) {
    CHECK(w.ids.size() <= 8);
    CHECK(w.ids.front() == SubwordVocab::kCls);
    CHECK(w.ids.back() == SubwordVocab::kSep);
    for (std::size_t k = 0; k < w.words.size(); ++k) {
      seen.push_back(w.words[k]);
      CHECK(w.ids[static_cast<std::size_t>(w.word_rows[k])] ==
            v.encode_word(words[static_cast<std::size_t>(w.words[k])]).front());
    }
  }
  CHECK(seen.size() == words.size());
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == static_cast<int>(i));
}

TEST_CASE("masking selects about 15% of positions with an 80/10/10 split") {
  SubwordVocab v = tiny_vocab();
  DaftConfig cfg;
  std::mt19937_64 rng(3);
  long positions = 0, selected = 0, masked = 0, kept = 0, specials_hit = 0;
  std::vector<int> ids{SubwordVocab::kCls};
  for (int i = 0; i < 60; ++i) ids.push_back(SubwordVocab::kNumSpecial + i % (v.size() - SubwordVocab::kNumSpecial));
  ids.push_back(SubwordVocab::kSep);
  while (positions < 120000) {
    auto ex = mask_pieces(ids, v, cfg, rng);
    specials_hit += (ex.target.front() >= 0) + (ex.target.back() >= 0);
    for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
      ++positions;
      if (ex.target[i] < 0) {
        CHECK(ex.input[i] == ids[i]);
        continue;
      }
      ++selected;
      CHECK(ex.target[i] == ids[i]);
      if (ex.input[i] == SubwordVocab::kMask) ++masked;
      else if (ex.input[i] == ids[i]) ++kept;
    }
  }
  const double rate = static_cast<double>(selected) / static_cast<double>(positions);
  CHECK(rate >= 0.13);
  CHECK(rate <= 0.17);
  CHECK(specials_hit == 0);
  CHECK(static_cast<double>(masked) / selected == doctest::Approx(0.8).epsilon(0.03));
  // random replacements can coincide with the original piece
  CHECK(static_cast<double>(kept) / selected > 0.09);
  CHECK(static_cast<double>(kept) / selected < 0.13);
}

TEST_CASE("masked-LM loss lives only on selected positions") {
  TransformerEncoder enc(tiny_cfg(), tiny_vocab());
  DaftConfig cfg;
  cfg.mask_rate = 0.4;
  std::mt19937_64 rng(8);
  auto ws = windows(tiny_text()[5], enc.vocab(), 16);
  MaskedExample ex;
  do ex = mask_pieces(ws[0].ids, enc.vocab(), cfg, rng);
  while (ex.selected() == 0 || ex.selected() == static_cast<int>(ex.input.size()) - 2);

  auto pos = mlm_position_losses(enc, ex);
  double sum = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (ex.target[i] < 0) CHECK(pos[i] == 0.0);
    else CHECK(pos[i] > 0.0);
    sum += pos[i];
  }
  nn::Graph g;
  CHECK(g.scalar(mlm_loss(g, enc, ex, nullptr, false)) == doctest::Approx(sum).epsilon(1e-10));

  MaskedExample none{ws[0].ids, std::vector<int>(ws[0].ids.size(), -1)};
  nn::Graph g2;
  CHECK_THROWS(mlm_loss(g2, enc, none, nullptr, false));
}

TEST_CASE("mlm fine-tuning lowers the loss from epoch 1 to epoch 3") {
  TransformerEncoder enc(tiny_cfg(), tiny_vocab());
  DaftConfig cfg;
  cfg.lr = 3e-3;
  cfg.batch = 2;
  cfg.mask_rate = 0.3;
  std::vector<std::vector<std::string>> text;
  for (int k = 0; k < 4; ++k) text.insert(text.end(), tiny_text().begin(), tiny_text().end());
  auto r = mlm_finetune(enc, text, cfg);
  REQUIRE(r.epoch_loss.size() == 3);
  CHECK(r.epoch_loss[2] < r.epoch_loss[0]);

  DaftConfig big = cfg;
  big.batch = 100;
  CHECK_THROWS_AS(mlm_finetune(enc, text, big), ConfigError);
}

TEST_CASE("zero epochs leaves the encoder and its features unchanged") {
  TransformerEncoder base(tiny_cfg(), tiny_vocab());
  TransformerEncoder tuned(tiny_cfg(), tiny_vocab());
  DaftConfig cfg;
  cfg.epochs = 0;
  auto r = mlm_finetune(tuned, tiny_text(), cfg);
  CHECK(r.steps == 0);
  for (const auto& s : tiny_text())
    CHECK(encoders::embed_contextual(s, base, 2) == encoders::embed_contextual(s, tuned, 2));
}

TEST_CASE("daft_finetune writes a new checkpoint and never touches the base") {
  const auto root = std::filesystem::temp_directory_path() / "eventshift_daft_cow";
  std::filesystem::remove_all(root);
  TransformerEncoder base(tiny_cfg(), tiny_vocab());
  base.save(root / "base");
  const std::string before = file_bytes(root / "base" / "weights.bin");

  auto mixed = build_mixed_corpus(corpus_of(tiny_text(), "src"), corpus_of(tiny_text(), "tgt"), 0);
  DaftConfig cfg;
  cfg.epochs = 1;
  cfg.lr = 1e-3;
  daft_finetune((root / "base").string(), mixed, cfg, root / "tuned");
  CHECK(file_bytes(root / "base" / "weights.bin") == before);
  CHECK(file_bytes(root / "tuned" / "weights.bin") != before);
  auto tuned = TransformerEncoder::load(root / "tuned");
  CHECK(tuned->config().hidden == 16);
  CHECK_THROWS_AS(daft_finetune((root / "base").string(), mixed, cfg, root / "base"), ConfigError);
  CHECK(file_bytes(root / "base" / "weights.bin") == before);
  std::filesystem::remove_all(root);
}

TEST_CASE("pos fine-tuning overfits five sentences and keeps shapes") {
  const std::vector<std::vector<std::string>> tags = {
      {"DET", "NOUN", "AUX", "VERB", "NOUN"}, {"DET", "NOUN", "VERB", "DET", "NOUN"},
      {"DET", "NOUN", "AUX", "VERB", "NOUN"}, {"DET", "NOUN", "AUX", "VERB"},
      {"DET", "NOUN", "VERB", "DET", "NOUN"}};
  std::vector<std::vector<std::string>> text(tiny_text().begin(), tiny_text().begin() + 5);
  auto mixed = build_mixed_corpus(corpus_of(text, "src", tags), corpus_of(text, "tgt", tags), 0);
  TransformerEncoder enc(tiny_cfg(), tiny_vocab());
  const auto before = encoders::embed_contextual(text[0], enc, 2);
  DaftConfig cfg;
  cfg.objective = Objective::kPos;
  cfg.epochs = 40;
  cfg.batch = 2;
  cfg.lr = 3e-3;
  double acc = 0.0;
  pos_finetune(enc, mixed, cfg, &acc);
  CHECK(acc >= 0.95);
  const auto after = encoders::embed_contextual(text[0], enc, 2);
  CHECK(after.rows() == before.rows());
  CHECK(after.cols() == before.cols());

  auto partial = tags;
  partial[2][1] = "";
  auto bad = build_mixed_corpus(corpus_of(text, "note_17", partial), corpus_of(text, "tgt", tags), 0);
  try {
    pos_finetune(enc, bad, cfg);
    FAIL("expected IntegrityError");
  } catch (const IntegrityError& e) {
    CHECK(std::string(e.what()).find("note_17") != std::string::npos);
  }
  DaftConfig mlm = cfg;
  mlm.objective = Objective::kMlm;
  CHECK_THROWS_AS(pos_finetune(enc, mixed, mlm), ConfigError);
}
