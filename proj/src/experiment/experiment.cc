#include "eventshift/experiment/experiment.h"

#include "eventshift/corpus/jsonl.h"
#include "eventshift/corpus/vocab.h"
#include "eventshift/error.h"
#include "eventshift/evalsuite/report.h"
#include "eventshift/liw/weights.h"
#include "eventshift/synthbench/generator.h"

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace eventshift::experiment {

namespace fs = std::filesystem;

std::string to_string(Technique t) {
  switch (t) {
    case Technique::kNone: return "none";
    case Technique::kLiw: return "liw";
    case Technique::kAda: return "ada";
    case Technique::kDaft: return "daft";
    case Technique::kDaftSyn: return "daft-syn";
  }
  return "none";
}

Technique technique_from_string(const std::string& s) {
  for (Technique t : {Technique::kNone, Technique::kLiw, Technique::kAda, Technique::kDaft, Technique::kDaftSyn})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown technique '" + s + "' (expected none, liw, ada, daft or daft-syn)");
}

std::string to_string(ModelType m) {
  switch (m) {
    case ModelType::kBert: return "bert";
    case ModelType::kDelex: return "delex";
    case ModelType::kVerb: return "verb";
  }
  return "bert";
}

ModelType model_type_from_string(const std::string& s) {
  for (ModelType m : {ModelType::kBert, ModelType::kDelex, ModelType::kVerb})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown model '" + s + "' (expected bert, delex or verb)");
}

namespace {

const char* sub_config_key(Technique t) {
  switch (t) {
    case Technique::kLiw: return "liw";
    case Technique::kAda: return "ada";
    case Technique::kDaft:
    case Technique::kDaftSyn: return "daft";
    case Technique::kNone: break;
  }
  return "";
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : (base / path).lexically_normal();
}

std::string path_string(const fs::path& p) { return p.string(); }

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  static const std::vector<std::string> known = {"name",   "source_train", "source_dev", "targets", "target_test",
                                                 "target_raw", "model",    "encoder",    "pos_dim", "tagger",
                                                 "train",  "technique",    "liw",        "ada",     "daft",
                                                 "seed",   "output_dir"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown config key '" + k + "'");

  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    c.seed = j.value("seed", c.seed);
    c.source_train = resolve(base_dir, j.value("source_train", std::string()));
    c.source_dev = resolve(base_dir, j.value("source_dev", std::string()));
    if (j.contains("targets"))
      for (const auto& t : j.at("targets"))
        c.targets.push_back({t.at("name").get<std::string>(), resolve(base_dir, t.at("test").get<std::string>())});
    if (j.contains("target_test")) c.targets.push_back({"target", resolve(base_dir, j.at("target_test").get<std::string>())});
    c.target_raw = resolve(base_dir, j.value("target_raw", std::string()));
    c.model = model_type_from_string(j.value("model", std::string("bert")));
    if (j.contains("encoder")) c.encoder = encoders::encoder_config_from_json(j.at("encoder"));
    if (!c.encoder.checkpoint_id.empty() && !base_dir.empty()) {
      const fs::path local = base_dir / c.encoder.checkpoint_id;
      if (fs::is_directory(local)) c.encoder.checkpoint_id = local.lexically_normal().string();
    }
    c.pos_dim = j.value("pos_dim", c.pos_dim);
    if (j.contains("tagger")) c.arch = tagger::tagger_arch_from_json(j.at("tagger"));
    if (j.contains("train")) c.train = tagger::train_config_from_json(j.at("train"));
    c.technique = technique_from_string(j.value("technique", std::string("none")));
    for (const char* key : {"liw", "ada", "daft"})
      if (j.contains(key) && key != std::string(sub_config_key(c.technique)))
        throw ConfigError(std::string("sub-config '") + key + "' given but technique is " + to_string(c.technique));
    if (c.technique != Technique::kNone && !j.contains(sub_config_key(c.technique)))
      throw ConfigError(std::string("technique ") + to_string(c.technique) + " needs a '" +
                        sub_config_key(c.technique) + "' sub-config");
    switch (c.technique) {
      case Technique::kLiw: {
        const auto& l = j.at("liw");
        LiwSettings s;
        if (l.contains("lm")) s.lm = liw::lm_config_from_json(l.at("lm"));
        if (l.contains("train")) s.train = liw::lm_train_config_from_json(l.at("train"));
        s.per_token_normalized = l.value("per_token_normalized", false);
        s.embeddings = resolve(base_dir, l.value("embeddings", std::string()));
        c.liw = s;
        break;
      }
      case Technique::kAda: c.ada = ada::ada_config_from_json(j.at("ada")); break;
      case Technique::kDaft:
      case Technique::kDaftSyn: {
        c.daft = daft::daft_config_from_json(j.at("daft"));
        const auto want = c.technique == Technique::kDaft ? daft::Objective::kMlm : daft::Objective::kPos;
        if (j.at("daft").contains("objective") && c.daft->objective != want)
          throw ConfigError("daft objective contradicts technique " + to_string(c.technique));
        c.daft->objective = want;
        break;
      }
      case Technique::kNone: break;
    }
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }

  c.arch.kind = c.model == ModelType::kDelex ? tagger::ModelKind::kDelex : tagger::ModelKind::kBiLstm;
  c.arch.seed = c.seed;
  c.train.seed = c.seed;
  if (c.liw) c.liw->lm.seed = c.seed;
  if (c.ada) c.ada->seed = c.seed;
  if (c.daft) c.daft->seed = c.seed;
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  return experiment_config_from_json(j, fs::absolute(file).parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : c.targets) targets.push_back({{"name", t.name}, {"test", path_string(t.test)}});
  nlohmann::json arch = tagger::to_json(c.arch);
  arch.erase("input_dim");
  nlohmann::json j = {{"name", c.name},
                      {"source_train", path_string(c.source_train)},
                      {"source_dev", path_string(c.source_dev)},
                      {"targets", targets},
                      {"target_raw", path_string(c.target_raw)},
                      {"model", to_string(c.model)},
                      {"encoder", encoders::to_json(c.encoder)},
                      {"pos_dim", c.pos_dim},
                      {"tagger", arch},
                      {"train", tagger::to_json(c.train)},
                      {"technique", to_string(c.technique)},
                      {"seed", c.seed},
                      {"output_dir", path_string(c.output_dir)}};
  if (c.liw)
    j["liw"] = {{"lm", liw::to_json(c.liw->lm)},
                {"train", liw::to_json(c.liw->train)},
                {"per_token_normalized", c.liw->per_token_normalized},
                {"embeddings", path_string(c.liw->embeddings)}};
  if (c.ada) j["ada"] = ada::to_json(*c.ada);
  if (c.daft) j["daft"] = daft::to_json(*c.daft);
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.source_train.empty()) throw ConfigError("source_train is required");
  if (c.source_dev.empty()) throw ConfigError("source_dev is required");
  if (c.targets.empty()) throw ConfigError("at least one target test corpus is required");
  for (const auto& t : c.targets)
    if (t.name.empty()) throw ConfigError("target names must be non-empty");
  if (c.output_dir.empty()) throw ConfigError("output_dir is required");
  if ((c.technique != Technique::kNone) != (c.liw || c.ada || c.daft))
    throw ConfigError("technique sub-config must be present exactly when technique is not none");
  if (c.technique != Technique::kNone && c.target_raw.empty())
    throw ConfigError("technique " + to_string(c.technique) + " needs target_raw");
  if (c.model == ModelType::kVerb && c.technique != Technique::kNone)
    throw ConfigError("the verb baseline takes no adaptation technique");
  if (c.model == ModelType::kDelex && c.technique != Technique::kNone && c.technique != Technique::kLiw)
    throw ConfigError("technique " + to_string(c.technique) + " needs the contextual (bert) model");
  if (c.model == ModelType::kBert && c.encoder.checkpoint_id.empty())
    throw ConfigError("encoder.checkpoint_id is required for model bert");
  if (c.model == ModelType::kDelex && c.pos_dim < 1) throw ConfigError("pos_dim must be positive");
  tagger::validate(c.train);
}

void validate_inputs(const ExperimentConfig& c) {
  auto need = [](const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
  };
  need(c.source_train, "source_train");
  need(c.source_dev, "source_dev");
  for (const auto& t : c.targets) need(t.test, "target test '" + t.name + "'");
  if (c.technique != Technique::kNone) need(c.target_raw, "target_raw");
  if (c.liw && !c.liw->embeddings.empty()) need(c.liw->embeddings, "embedding file");
  if (c.model == ModelType::kBert) encoders::resolve_checkpoint(c.encoder.checkpoint_id);
  if (fs::exists(c.output_dir) && !fs::is_empty(c.output_dir))
    throw ConfigError("output directory " + c.output_dir.string() + " already exists and is not empty");
}

corpus::Corpus load_raw_corpus(const fs::path& file, const std::string& domain) {
  if (file.extension() == ".jsonl") return corpus::read_corpus(file, corpus::Split::kTrain);
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  auto sentences = synthbench::parse_raw_text(s.str());
  if (sentences.empty()) throw ConfigError("raw text " + file.string() + " is empty");
  return synthbench::raw_corpus(sentences, domain);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Ledger hash_outputs(const fs::path& dir, const std::vector<std::string>& exclude) {
  Ledger l;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = e.path().lexically_relative(dir).generic_string();
    if (std::find(exclude.begin(), exclude.end(), rel) != exclude.end()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    l.files[rel] = fnv1a_hex(s.str());
  }
  std::string all;
  for (const auto& [path, h] : l.files) all += path + '\0' + h + '\n';
  l.hash = fnv1a_hex(all);
  return l;
}

nlohmann::json to_json(const EncoderInitConfig& c) {
  return {{"model", encoders::to_json(c.model)},
          {"vocab_size", c.vocab_size},
          {"min_word_freq", c.min_word_freq},
          {"pretrain", daft::to_json(c.pretrain)}};
}

EncoderInitConfig encoder_init_config_from_json(const nlohmann::json& j) {
  EncoderInitConfig c;
  if (j.contains("model")) c.model = encoders::transformer_config_from_json(j.at("model"));
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.min_word_freq = j.value("min_word_freq", c.min_word_freq);
  if (j.contains("pretrain")) c.pretrain = daft::daft_config_from_json(j.at("pretrain"));
  c.pretrain.objective = daft::Objective::kMlm;
  if (c.vocab_size <= encoders::SubwordVocab::kNumSpecial) throw ConfigError("vocab_size too small");
  return c;
}

daft::FinetuneResult init_encoder(const std::vector<std::vector<std::string>>& sentences, const EncoderInitConfig& cfg,
                                  const fs::path& out_dir) {
  std::map<std::string, long> counts;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[encoders::lower_ascii(w)];
  if (counts.empty()) throw ConfigError("encoder-init: no text");
  auto vocab = encoders::SubwordVocab::build(counts, cfg.vocab_size, cfg.min_word_freq);
  encoders::TransformerEncoder enc(cfg.model, vocab);
  auto r = daft::mlm_finetune(enc, sentences, cfg.pretrain);
  enc.save(out_dir, {{"init", to_json(cfg)}, {"epoch_loss", r.epoch_loss}});
  return r;
}

nlohmann::json contextual_featurizer_spec(const encoders::EncoderConfig& c) {
  return {{"type", "contextual"}, {"encoder", encoders::to_json(c)}};
}

nlohmann::json pos_featurizer_spec(int dim, unsigned long seed) {
  return {{"type", "pos"}, {"dim", dim}, {"seed", seed}};
}

std::unique_ptr<encoders::Featurizer> make_featurizer(const nlohmann::json& spec) {
  const std::string type = spec.value("type", std::string());
  if (type == "contextual") return encoders::make_contextual_featurizer(encoders::encoder_config_from_json(spec.at("encoder")));
  if (type == "pos")
    return std::make_unique<encoders::PosFeaturizer>(
        encoders::PosEmbeddingTable::random(spec.at("dim").get<int>(), spec.at("seed").get<unsigned long>()));
  throw ConfigError("unknown featurizer type '" + type + "'");
}

evalsuite::Predictions predict_corpus(tagger::TaggerModel& m, const encoders::Featurizer& f, const corpus::Corpus& c,
                                      double threshold) {
  return tagger::predict_all(m, encoders::featurize(f, c), threshold);
}

evalsuite::Predictions verb_predictions(const corpus::Corpus& c) {
  evalsuite::Predictions out;
  for (const auto& d : c.documents)
    for (const auto& s : d.sentences) out.push_back(tagger::verb_baseline(s));
  return out;
}

evalsuite::EvalReport evaluate_predictions(const evalsuite::Predictions& pred, const corpus::Corpus& gold,
                                           const corpus::Corpus& train, const evalsuite::ReportMeta& meta) {
  auto part = corpus::iv_oov_partition(gold, corpus::build_vocab(train));
  evalsuite::EvalReport r = evalsuite::bucket_score(pred, gold, part);
  r.meta = meta;
  return r;
}

void write_predictions(const fs::path& file, const evalsuite::Predictions& pred) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const auto& s : pred) out << nlohmann::json(s).dump() << '\n';
}

evalsuite::Predictions read_predictions(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  evalsuite::Predictions out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<std::vector<int>>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(file.string() + ": " + e.what(), n);
    }
  }
  return out;
}

namespace {

// Adds a file sink to the default logger for the lifetime of the run.
class RunLog {
 public:
  explicit RunLog(const fs::path& file) : sink_(std::make_shared<spdlog::sinks::basic_file_sink_mt>(file.string())) {
    spdlog::default_logger()->sinks().push_back(sink_);
  }
  ~RunLog() {
    auto& sinks = spdlog::default_logger()->sinks();
    sinks.erase(std::remove(sinks.begin(), sinks.end(), sink_), sinks.end());
  }
  RunLog(const RunLog&) = delete;
  RunLog& operator=(const RunLog&) = delete;

 private:
  spdlog::sink_ptr sink_;
};

std::vector<std::vector<std::string>> sentences_of(const corpus::Corpus& c) {
  std::vector<std::vector<std::string>> out;
  for (const auto& d : c.documents)
    for (const auto& s : d.sentences) out.push_back(s.words());
  return out;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  validate(cfg);
  validate_inputs(cfg);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir / "predictions");
  RunLog log(dir / "run.log");
  std::ofstream(dir / "experiment.json") << to_json(cfg).dump(2) << '\n';
  spdlog::info("run {}: model {} technique {} seed {}", cfg.name, to_string(cfg.model), to_string(cfg.technique),
               cfg.seed);

  const auto train = corpus::read_corpus(cfg.source_train, corpus::Split::kTrain);
  const auto dev = corpus::read_corpus(cfg.source_dev, corpus::Split::kDev);
  std::vector<corpus::Corpus> tests;
  for (const auto& t : cfg.targets) tests.push_back(corpus::read_corpus(t.test, corpus::Split::kTest));
  std::optional<corpus::Corpus> raw;
  if (cfg.technique != Technique::kNone) raw = load_raw_corpus(cfg.target_raw);

  std::string model_id = to_string(cfg.model);
  if (cfg.technique != Technique::kNone) model_id += "-" + to_string(cfg.technique);

  evalsuite::Predictions dev_pred;
  std::vector<evalsuite::Predictions> test_pred;
  if (cfg.model == ModelType::kVerb) {
    dev_pred = verb_predictions(dev);
    for (const auto& t : tests) test_pred.push_back(verb_predictions(t));
  } else {
    nlohmann::json feat_spec;
    if (cfg.model == ModelType::kBert) {
      encoders::EncoderConfig ec = cfg.encoder;
      if (cfg.daft) {
        auto mixed = daft::build_mixed_corpus(train, *raw, cfg.seed);
        std::ofstream(dir / "mixing.json") << daft::mixing_record(mixed).dump(2) << '\n';
        daft::daft_finetune(cfg.encoder.checkpoint_id, mixed, *cfg.daft, dir / "encoder");
        ec.checkpoint_id = (dir / "encoder").string();
      }
      feat_spec = contextual_featurizer_spec(ec);
    } else {
      feat_spec = pos_featurizer_spec(cfg.pos_dim, cfg.seed);
    }
    std::shared_ptr<const encoders::Featurizer> feat = make_featurizer(feat_spec);

    std::optional<std::vector<double>> alphas;
    if (cfg.liw) {
      std::optional<encoders::StaticEmbeddings> emb;
      if (!cfg.liw->embeddings.empty())
        emb = encoders::load_static_embeddings(cfg.liw->embeddings, cfg.liw->lm.hidden);
      auto lm = liw::train_lm(sentences_of(*raw), cfg.liw->lm, cfg.liw->train, emb ? &*emb : nullptr);
      lm.lm->save(dir / "lm");
      std::ofstream hist(dir / "lm" / "history.csv");
      hist << "epoch,lr,train_loss,valid_loss,valid_ppl\n";
      for (const auto& e : lm.history)
        hist << e.epoch << ',' << e.lr << ',' << e.train_loss << ',' << e.valid_loss << ',' << e.valid_ppl << '\n';
      auto ws = liw::weigh_corpus(*lm.lm, train, cfg.liw->per_token_normalized);
      liw::write_sidecar(dir / "weights.jsonl", liw::sidecar_rows(train, ws));
      alphas = ws.alphas;
    }

    auto train_set = tagger::make_training_set(encoders::featurize(*feat, train), train, alphas ? &*alphas : nullptr);
    auto dev_set = tagger::make_training_set(encoders::featurize(*feat, dev), dev);
    tagger::TaggerArch arch = cfg.arch;
    arch.input_dim = feat->dim();

    std::optional<tagger::TaggerModel> model;
    if (cfg.ada) {
      auto tgt_feats = encoders::featurize(*feat, *raw);
      fs::create_directories(dir / "ada");
      auto r = ada::train_ada(arch, train_set, tgt_feats, dev_set, cfg.train, *cfg.ada, dir / "ada");
      spdlog::info("ada selected lambda {}", r.trials[r.best].lambda);
      model = tagger::TaggerModel::load(dir / "ada" / "best");
      std::ofstream(dir / "ada" / "best" / "featurizer.json") << feat_spec.dump(2) << '\n';
    } else {
      model.emplace(arch);
      auto r = tagger::train_tagger(*model, train_set, dev_set, cfg.train);
      tagger::write_checkpoint(dir / "tagger", *model, cfg.train, r,
                               {{"technique", to_string(cfg.technique)}, {"features", feat->describe()}});
      std::ofstream(dir / "tagger" / "featurizer.json") << feat_spec.dump(2) << '\n';
    }
    dev_pred = tagger::predict_all(*model, dev_set.feats, cfg.train.threshold);
    for (const auto& t : tests) test_pred.push_back(predict_corpus(*model, *feat, t, cfg.train.threshold));
  }

  RunResult res;
  res.run_dir = dir;
  const long seed = static_cast<long>(cfg.seed);
  res.in_domain = evaluate_predictions(dev_pred, dev, train, {model_id, "source", "source-dev", seed});
  write_predictions(dir / "predictions" / "source-dev.jsonl", dev_pred);
  std::vector<evalsuite::EvalReport> reports{res.in_domain};
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const auto& name = cfg.targets[i].name;
    auto r = evaluate_predictions(test_pred[i], tests[i], train, {model_id, "source", name, seed});
    write_predictions(dir / "predictions" / (name + ".jsonl"), test_pred[i]);
    spdlog::info("{} on {}: P {:.4f} R {:.4f} F1 {:.4f}", model_id, name, r.overall.precision, r.overall.recall,
                 r.overall.f1);
    res.out_of_domain[name] = r;
    reports.push_back(r);
  }
  evalsuite::emit_report(reports, dir / "report");

  // Files that name absolute paths are left out so a replay elsewhere hashes the same.
  Ledger ledger = hash_outputs(
      dir, {"run.log", "ledger.json", "experiment.json", "tagger/featurizer.json", "ada/best/featurizer.json"});
  nlohmann::json config = to_json(cfg);
  config.erase("output_dir");
  nlohmann::json lj = {{"name", cfg.name},
                       {"config_hash", fnv1a_hex(config.dump())},
                       {"outputs_hash", ledger.hash},
                       {"files", ledger.files}};
  std::ofstream(dir / "ledger.json") << lj.dump(2) << '\n';
  res.ledger_hash = ledger.hash;
  spdlog::info("run {} done, ledger {}", cfg.name, ledger.hash);
  return res;
}

}  // namespace eventshift::experiment
