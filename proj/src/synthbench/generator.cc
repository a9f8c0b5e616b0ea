#include "eventshift/synthbench/generator.h"

#include "eventshift/corpus/jsonl.h"
#include "eventshift/error.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

namespace eventshift::synthbench {

using corpus::EventType;

namespace {

enum class Slot { kLiteral, kFrameWord, kEvent, kNoun, kAdj };

struct FrameItem {
  Slot slot = Slot::kLiteral;
  std::string word;  // literal or frame word
  std::string pos;
};
using Frame = std::vector<FrameItem>;

struct Entry {
  std::string source_form;
  std::string target_form;
  std::string source_pos;
  std::string target_pos;
  bool event = false;
  bool ambiguous = false;  // event noun that can also fill noun slots
  bool replaced = false;
  EventType type = EventType::kNone;
  Slot kind = Slot::kNoun;
};

const std::map<std::string, std::string> kFunctionWords = {
    {"the", "DET"}, {"a", "DET"},    {"of", "ADP"},   {"to", "PART"},  {"and", "CCONJ"},
    {"in", "ADP"},  {"with", "ADP"}, {"was", "AUX"},  {"is", "AUX"},   {"by", "ADP"},
    {"after", "ADP"}, {"on", "ADP"}, {".", "PUNCT"},  {",", "PUNCT"},
};

// F = domain frame word, E = event slot, N = noun slot, A = adjective slot.
const char* kSkeletons[] = {
    "the N F E the A N .",   "F E with the A N .",    "the A N was E by the F .",
    "F F E to the N and E .", "the N F the N after E .", "the N of the N F A .",
    "F E the N , F E .",     "a A N F to E the N .",  "the F N is E in the F .",
    "F N E on the A N .",
};
const char* kFramePos[] = {"VERB", "NOUN", "ADV", "ADP"};

bool has_suffix(const std::string& w, std::string_view s) {
  return w.size() > s.size() && w.compare(w.size() - s.size(), s.size(), s) == 0;
}

class WordFactory {
 public:
  explicit WordFactory(std::mt19937_64& rng) : rng_(rng) {
    for (const auto& [w, pos] : kFunctionWords) used_.insert(w);
  }

  std::string stem() {
    static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                   "s", "t", "v", "z", "br", "gr", "pl", "st", "tr", "sk"};
    static const char* vowels[] = {"a", "e", "i", "o", "u"};
    static const char* codas[] = {"", "", "n", "r", "l", "m"};
    for (;;) {
      const int syllables = 2 + static_cast<int>(rng_() % 2);
      std::string w;
      for (int s = 0; s < syllables; ++s) {
        w += onsets[rng_() % 20];
        w += vowels[rng_() % 5];
        if (s + 1 == syllables) w += codas[rng_() % 6];
      }
      if (has_suffix(w, "ed") || has_suffix(w, "ing") || has_suffix(w, "tion") || has_suffix(w, "sion"))
        continue;
      if (reserve(w)) return w;
    }
  }

  // Unique full word form stem+suffix.
  std::string form(const std::string& suffix) {
    for (;;) {
      std::string w = stem();
      if (suffix.empty()) return w;
      used_.erase(w);
      std::string f = w + suffix;
      if (reserve(f)) return f;
    }
  }

 private:
  bool reserve(const std::string& w) { return used_.insert(w).second; }
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

std::string pos_for_suffix(const std::string& suffix) {
  return suffix == "tion" || suffix == "sion" ? "NOUN" : "VERB";
}

class Generator {
 public:
  explicit Generator(const ShiftSpec& spec) : spec_(spec), rng_(spec.seed), words_(rng_) {}

  SynthOutput run() {
    build_lexicon();
    build_frames();
    SynthOutput out;
    out.source_train = make_corpus("source", spec_.source_train_docs, corpus::Split::kTrain, "src-train",
                                   true, &out.truth.corpora["source_train"], &out.truth.contains_target_vocab);
    for (const auto& [kind, pending] : pending_)
      if (!pending.empty())
        throw ConfigError("synthbench sizes too small: " + std::to_string(pending.size()) +
                          " lexicon entries never placed in source_train");
    out.source_dev = make_corpus("source", spec_.source_dev_docs, corpus::Split::kDev, "src-dev", false,
                                 &out.truth.corpora["source_dev"], nullptr);
    out.target_test = make_corpus("target", spec_.target_test_docs, corpus::Split::kTest, "tgt-test", false,
                                  &out.truth.corpora["target_test"], nullptr);
    for (std::size_t d = 0; d < out.target_test.documents.size(); ++d) {
      const auto& doc = out.target_test.documents[d];
      for (std::size_t s = 0; s < doc.sentences.size(); ++s)
        for (std::size_t t = 0; t < doc.sentences[s].size(); ++t)
          if (oov_positions_.count({static_cast<int>(d), static_cast<int>(s), static_cast<int>(t)}))
            out.truth.oov_events.push_back({static_cast<int>(d), static_cast<int>(s), static_cast<int>(t)});
    }

    int raw_tokens = 0;
    while (raw_tokens < spec_.target_raw_tokens) {
      std::vector<std::string> words, tags;
      for (const Token& t : sentence(target_frames_[rng_() % target_frames_.size()], false, false)) {
        words.push_back(t.text);
        tags.push_back(t.pos);
      }
      raw_tokens += static_cast<int>(words.size());
      out.target_raw.push_back(std::move(words));
      out.target_raw_pos.push_back(std::move(tags));
    }

    for (const Entry& e : lexicon_) {
      out.truth.source_content_vocab.insert(e.source_form);
      out.truth.target_content_vocab.insert(e.target_form);
      if (e.replaced) out.truth.target_vocab.insert(e.target_form);
    }
    for (const std::string& w : target_only_frame_words_) out.truth.target_vocab.insert(w);
    return out;
  }

 private:
  struct Token {
    std::string text;
    std::string pos;
    int label = 0;
    std::optional<EventType> type;
    bool oov_event = false;
  };

  void build_lexicon() {
    const char* suffixes[] = {"ed", "ing", "tion", "sion"};
    const double suffix_weights[] = {0.3, 0.3, 0.3, 0.1};
    std::discrete_distribution<int> pick_suffix(std::begin(suffix_weights), std::end(suffix_weights));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (const auto& [type, p] : spec_.type_mix) {
      if (p <= 0.0) continue;
      const int n = std::max(1, static_cast<int>(std::lround(p * spec_.event_words)));
      for (int i = 0; i < n; ++i) {
        Entry e;
        e.event = true;
        e.type = type;
        e.kind = Slot::kEvent;
        const std::string suffix = unit(rng_) < spec_.source_morph_rate ? suffixes[pick_suffix(rng_)] : "";
        e.source_form = words_.form(suffix);
        e.source_pos = pos_for_suffix(suffix);
        lexicon_.push_back(std::move(e));
      }
    }
    // Ambiguous entries come from the nominal events.
    const int want_ambiguous = static_cast<int>(std::lround(spec_.ambiguous_fraction * spec_.event_words));
    int ambiguous = 0;
    for (Entry& e : lexicon_)
      if (ambiguous < want_ambiguous && e.source_pos == "NOUN") e.ambiguous = true, ++ambiguous;
    for (int i = 0; i < spec_.noun_words; ++i) {
      Entry e;
      e.kind = Slot::kNoun;
      e.source_form = words_.form("");
      e.source_pos = "NOUN";
      lexicon_.push_back(std::move(e));
    }
    for (int i = 0; i < spec_.adjective_words; ++i) {
      Entry e;
      e.kind = Slot::kAdj;
      e.source_form = words_.form("");
      e.source_pos = "ADJ";
      lexicon_.push_back(std::move(e));
    }

    // Exactly round(r * n) content types get a target-only replacement.
    std::vector<std::size_t> order(lexicon_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng_);
    const auto n_replace = static_cast<std::size_t>(std::lround(spec_.substitution_rate * static_cast<double>(lexicon_.size())));
    for (Entry& e : lexicon_) {
      e.target_form = e.source_form;
      e.target_pos = e.source_pos;
    }
    for (std::size_t k = 0; k < n_replace; ++k) {
      Entry& e = lexicon_[order[k]];
      e.replaced = true;
      std::string suffix;
      if (e.event && unit(rng_) < spec_.morph_pattern_rate) {
        suffix = e.ambiguous ? (unit(rng_) < 0.75 ? "tion" : "sion") : suffixes[pick_suffix(rng_)];
      }
      e.target_form = words_.form(suffix);
      e.target_pos = e.event ? (e.ambiguous ? "NOUN" : pos_for_suffix(suffix)) : e.source_pos;
    }

    for (std::size_t i = 0; i < lexicon_.size(); ++i) {
      const Entry& e = lexicon_[i];
      by_kind_[e.kind].push_back(i);
      if (e.event) by_type_[e.type].push_back(i);
      if (e.ambiguous) by_kind_[Slot::kNoun].push_back(i);
    }
    for (auto& [kind, ids] : by_kind_) {
      std::vector<std::size_t> p = ids;
      std::shuffle(p.begin(), p.end(), rng_);
      pending_[kind] = std::deque<std::size_t>(p.begin(), p.end());
    }
  }

  std::vector<Frame> frames_for(const std::vector<std::string>& frame_words) {
    std::vector<Frame> frames;
    const int n_skel = static_cast<int>(std::size(kSkeletons));
    for (int f = 0; f < spec_.frames_per_domain; ++f) {
      Frame frame;
      std::istringstream in(kSkeletons[f % n_skel]);
      std::string tok;
      while (in >> tok) {
        FrameItem item;
        if (tok == "F") {
          item.slot = Slot::kFrameWord;
          item.word = frame_words[rng_() % frame_words.size()];
          item.pos = frame_pos_.at(item.word);
        } else if (tok == "E") {
          item.slot = Slot::kEvent;
        } else if (tok == "N") {
          item.slot = Slot::kNoun;
        } else if (tok == "A") {
          item.slot = Slot::kAdj;
        } else {
          item.word = tok;
          item.pos = kFunctionWords.at(tok);
        }
        frame.push_back(std::move(item));
      }
      frames.push_back(std::move(frame));
    }
    return frames;
  }

  void build_frames() {
    auto make_words = [&](std::vector<std::string>& out) {
      for (int i = 0; i < spec_.frame_words_per_domain; ++i) {
        std::string w = words_.form("");
        frame_pos_[w] = kFramePos[i % 4];
        out.push_back(std::move(w));
      }
    };
    std::vector<std::string> src_words, tgt_words;
    make_words(src_words);
    make_words(tgt_words);
    source_frames_ = frames_for(src_words);
    std::vector<Frame> own = frames_for(tgt_words);

    const int n_shared = static_cast<int>(std::lround(spec_.shared_frame_fraction * spec_.frames_per_domain));
    std::vector<int> idx(source_frames_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::shuffle(idx.begin(), idx.end(), rng_);
    for (int i = 0; i < spec_.frames_per_domain; ++i) {
      if (i < n_shared) target_frames_.push_back(source_frames_[idx[i]]);
      else {
        target_frames_.push_back(own[i]);
        target_specific_frames_.push_back(own[i]);
      }
    }
    for (const Frame& f : target_specific_frames_)
      for (const FrameItem& it : f)
        if (it.slot == Slot::kFrameWord) target_only_frame_words_.insert(it.word);
  }

  std::size_t draw(Slot kind, bool cover) {
    if (cover) {
      auto& pending = pending_[kind];
      if (!pending.empty()) {
        const std::size_t id = pending.front();
        pending.pop_front();
        return id;
      }
    }
    if (kind == Slot::kEvent) {
      std::vector<double> w;
      std::vector<EventType> types;
      for (const auto& [t, p] : spec_.type_mix)
        if (p > 0.0 && !by_type_[t].empty()) types.push_back(t), w.push_back(p);
      std::discrete_distribution<int> pick(w.begin(), w.end());
      const auto& ids = by_type_[types[pick(rng_)]];
      return ids[rng_() % ids.size()];
    }
    const auto& ids = by_kind_[kind];
    return ids[rng_() % ids.size()];
  }

  std::vector<Token> sentence(const Frame& frame, bool source_side, bool cover) {
    std::vector<Token> out;
    for (const FrameItem& it : frame) {
      Token t;
      if (it.slot == Slot::kLiteral || it.slot == Slot::kFrameWord) {
        t.text = it.word;
        t.pos = it.pos;
      } else {
        const Entry& e = lexicon_[draw(it.slot, cover)];
        t.text = source_side ? e.source_form : e.target_form;
        t.pos = source_side ? e.source_pos : e.target_pos;
        if (it.slot == Slot::kEvent) {
          t.label = 1;
          t.type = e.type;
          t.oov_event = !source_side && e.replaced;
        }
      }
      out.push_back(std::move(t));
    }
    return out;
  }

  corpus::Corpus make_corpus(const std::string& domain, int docs, corpus::Split split, const std::string& prefix,
                             bool cover, CorpusTruth* truth, std::vector<bool>* flags) {
    const bool source_side = domain == "source";
    corpus::Corpus c;
    c.split = split;
    std::set<std::string> vocab, event_vocab;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int d = 0; d < docs; ++d) {
      corpus::DocumentRecord doc;
      doc.doc_id = prefix + "-" + std::to_string(d);
      doc.domain = domain;
      int offset = 0;
      for (int s = 0; s < spec_.sentences_per_doc; ++s) {
        bool bridge = false;
        const Frame* frame;
        if (source_side) {
          bridge = !target_specific_frames_.empty() && unit(rng_) < spec_.bridge_rate;
          frame = bridge ? &target_specific_frames_[rng_() % target_specific_frames_.size()]
                         : &source_frames_[rng_() % source_frames_.size()];
        } else {
          frame = &target_frames_[rng_() % target_frames_.size()];
        }
        corpus::SentenceRecord rec;
        rec.doc_id = doc.doc_id;
        rec.domain = domain;
        const int sentence_index = static_cast<int>(doc.sentences.size());
        std::vector<Token> toks = sentence(*frame, source_side, cover);
        for (std::size_t i = 0; i < toks.size(); ++i) {
          Token& t = toks[i];
          corpus::TokenRecord tr;
          tr.text = t.text;
          tr.pos = t.pos;
          tr.label = t.label;
          tr.event_type = t.type;
          tr.char_start = offset;
          tr.char_end = offset + static_cast<int>(t.text.size());
          offset = tr.char_end + 1;
          ++truth->n_tokens;
          vocab.insert(t.text);
          if (t.label) {
            ++truth->n_events;
            event_vocab.insert(t.text);
          }
          if (t.oov_event) oov_positions_.insert({d, sentence_index, static_cast<int>(i)});
          rec.tokens.push_back(std::move(tr));
        }
        if (flags) flags->push_back(bridge);
        doc.sentences.push_back(std::move(rec));
      }
      c.documents.push_back(std::move(doc));
    }
    truth->n_files = static_cast<std::size_t>(docs);
    truth->vocab_size = vocab.size();
    truth->event_vocab_size = event_vocab.size();
    return c;
  }

  const ShiftSpec& spec_;
  std::mt19937_64 rng_;
  WordFactory words_;
  std::vector<Entry> lexicon_;
  std::map<Slot, std::vector<std::size_t>> by_kind_;
  std::map<EventType, std::vector<std::size_t>> by_type_;
  std::map<Slot, std::deque<std::size_t>> pending_;
  std::map<std::string, std::string> frame_pos_;
  std::vector<Frame> source_frames_, target_frames_, target_specific_frames_;
  std::set<std::string> target_only_frame_words_;
  std::set<corpus::TokenRef> oov_positions_;
};

nlohmann::json truth_json(const CorpusTruth& t) {
  return {{"n_files", t.n_files},       {"n_tokens", t.n_tokens},
          {"n_events", t.n_events},     {"event_density", t.event_density()},
          {"vocab_size", t.vocab_size}, {"event_vocab_size", t.event_vocab_size}};
}

}  // namespace

void validate(const ShiftSpec& s) {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must be in [0,1]");
  };
  rate(s.substitution_rate, "substitution_rate");
  rate(s.morph_pattern_rate, "morph_pattern_rate");
  rate(s.source_morph_rate, "source_morph_rate");
  rate(s.bridge_rate, "bridge_rate");
  rate(s.shared_frame_fraction, "shared_frame_fraction");
  rate(s.ambiguous_fraction, "ambiguous_fraction");
  double sum = 0.0;
  for (const auto& [t, p] : s.type_mix) {
    if (p < 0.0) throw ConfigError("type_mix entries must be nonnegative");
    if (t == EventType::kNone && p > 0.0) throw ConfigError("type_mix cannot give mass to None");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("type_mix must sum to 1");
  if (s.event_words < 1 || s.noun_words < 1 || s.adjective_words < 1 || s.frames_per_domain < 1 ||
      s.frame_words_per_domain < 1 || s.source_train_docs < 1 || s.source_dev_docs < 1 ||
      s.target_test_docs < 1 || s.sentences_per_doc < 1 || s.target_raw_tokens < 0)
    throw ConfigError("synthbench sizes must be positive");
}

nlohmann::json to_json(const ShiftSpec& s) {
  nlohmann::json mix = nlohmann::json::object();
  for (const auto& [t, p] : s.type_mix) mix[std::string(corpus::to_string(t))] = p;
  return {{"substitution_rate", s.substitution_rate},
          {"morph_pattern_rate", s.morph_pattern_rate},
          {"source_morph_rate", s.source_morph_rate},
          {"type_mix", mix},
          {"bridge_rate", s.bridge_rate},
          {"shared_frame_fraction", s.shared_frame_fraction},
          {"ambiguous_fraction", s.ambiguous_fraction},
          {"event_words", s.event_words},
          {"noun_words", s.noun_words},
          {"adjective_words", s.adjective_words},
          {"frames_per_domain", s.frames_per_domain},
          {"frame_words_per_domain", s.frame_words_per_domain},
          {"source_train_docs", s.source_train_docs},
          {"source_dev_docs", s.source_dev_docs},
          {"target_test_docs", s.target_test_docs},
          {"sentences_per_doc", s.sentences_per_doc},
          {"target_raw_tokens", s.target_raw_tokens},
          {"seed", s.seed}};
}

ShiftSpec shift_spec_from_json(const nlohmann::json& j) {
  ShiftSpec s;
  try {
    s.substitution_rate = j.value("substitution_rate", s.substitution_rate);
    s.morph_pattern_rate = j.value("morph_pattern_rate", s.morph_pattern_rate);
    s.source_morph_rate = j.value("source_morph_rate", s.source_morph_rate);
    if (j.contains("type_mix")) {
      s.type_mix.clear();
      for (const auto& [name, p] : j["type_mix"].items()) {
        auto t = corpus::parse_event_type(name);
        if (!t) throw ConfigError("unknown event type in type_mix: " + name);
        s.type_mix[*t] = p.get<double>();
      }
    }
    s.bridge_rate = j.value("bridge_rate", s.bridge_rate);
    s.shared_frame_fraction = j.value("shared_frame_fraction", s.shared_frame_fraction);
    s.ambiguous_fraction = j.value("ambiguous_fraction", s.ambiguous_fraction);
    s.event_words = j.value("event_words", s.event_words);
    s.noun_words = j.value("noun_words", s.noun_words);
    s.adjective_words = j.value("adjective_words", s.adjective_words);
    s.frames_per_domain = j.value("frames_per_domain", s.frames_per_domain);
    s.frame_words_per_domain = j.value("frame_words_per_domain", s.frame_words_per_domain);
    s.source_train_docs = j.value("source_train_docs", s.source_train_docs);
    s.source_dev_docs = j.value("source_dev_docs", s.source_dev_docs);
    s.target_test_docs = j.value("target_test_docs", s.target_test_docs);
    s.sentences_per_doc = j.value("sentences_per_doc", s.sentences_per_doc);
    s.target_raw_tokens = j.value("target_raw_tokens", s.target_raw_tokens);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid shift spec: ") + e.what());
  }
  validate(s);
  return s;
}

nlohmann::json to_json(const GroundTruth& gt) {
  nlohmann::json j;
  for (const auto& [name, t] : gt.corpora) j["corpora"][name] = truth_json(t);
  j["oov_events"] = nlohmann::json::array();
  for (const auto& r : gt.oov_events) j["oov_events"].push_back({r.doc, r.sentence, r.token});
  j["target_vocab"] = gt.target_vocab;
  j["source_content_vocab"] = gt.source_content_vocab;
  j["target_content_vocab"] = gt.target_content_vocab;
  j["contains_target_vocab"] = gt.contains_target_vocab;
  return j;
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth gt;
  for (const auto& [name, t] : j.at("corpora").items()) {
    CorpusTruth c;
    c.n_files = t.at("n_files").get<std::size_t>();
    c.n_tokens = t.at("n_tokens").get<std::size_t>();
    c.n_events = t.at("n_events").get<std::size_t>();
    c.vocab_size = t.at("vocab_size").get<std::size_t>();
    c.event_vocab_size = t.at("event_vocab_size").get<std::size_t>();
    gt.corpora[name] = c;
  }
  for (const auto& r : j.at("oov_events")) gt.oov_events.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<int>()});
  gt.target_vocab = j.at("target_vocab").get<std::set<std::string>>();
  gt.source_content_vocab = j.at("source_content_vocab").get<std::set<std::string>>();
  gt.target_content_vocab = j.at("target_content_vocab").get<std::set<std::string>>();
  gt.contains_target_vocab = j.at("contains_target_vocab").get<std::vector<bool>>();
  return gt;
}

SynthOutput generate(const ShiftSpec& spec) {
  validate(spec);
  return Generator(spec).run();
}

std::string raw_text(const std::vector<std::vector<std::string>>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ' ';
      out += s[i];
    }
    out += '\n';
  }
  return out;
}

std::vector<std::vector<std::string>> parse_raw_text(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> words;
    std::string w;
    while (ls >> w) words.push_back(w);
    if (!words.empty()) out.push_back(std::move(words));
  }
  return out;
}

corpus::Corpus raw_corpus(const std::vector<std::vector<std::string>>& sentences, const std::string& domain,
                          const std::vector<std::vector<std::string>>* pos) {
  if (pos && pos->size() != sentences.size()) throw std::invalid_argument("raw_corpus: POS rows do not match sentences");
  corpus::Corpus c;
  corpus::DocumentRecord doc;
  doc.doc_id = domain + "-raw";
  doc.domain = domain;
  int offset = 0;
  for (const auto& s : sentences) {
    corpus::SentenceRecord rec;
    rec.doc_id = doc.doc_id;
    rec.domain = domain;
    const std::size_t si = doc.sentences.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string& w = s[i];
      corpus::TokenRecord t;
      t.text = w;
      if (pos) t.pos = (*pos)[si].at(i);
      t.char_start = offset;
      t.char_end = offset + static_cast<int>(w.size());
      offset = t.char_end + 1;
      rec.tokens.push_back(std::move(t));
    }
    doc.sentences.push_back(std::move(rec));
  }
  c.documents.push_back(std::move(doc));
  return c;
}

void write_output(const SynthOutput& out, const ShiftSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  corpus::write_corpus(out.source_train, dir / "source_train.jsonl");
  corpus::write_corpus(out.source_dev, dir / "source_dev.jsonl");
  corpus::write_corpus(out.target_test, dir / "target_test.jsonl");
  std::ofstream(dir / "target_raw.txt") << raw_text(out.target_raw);
  corpus::write_corpus(raw_corpus(out.target_raw, "target", &out.target_raw_pos), dir / "target_raw_tagged.jsonl");
  std::ofstream(dir / "ground_truth.json") << to_json(out.truth).dump(2) << '\n';
  std::ofstream(dir / "spec.json") << to_json(spec).dump(2) << '\n';
}

}  // namespace eventshift::synthbench
