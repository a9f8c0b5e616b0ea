// eventshift command-line driver. Every subcommand reads and writes files in
// the canonical formats; none modifies its inputs.
//
// Exit codes: 0 success, 1 usage, 2 invalid input or configuration,
// 3 runtime failure.

#include "eventshift/corpus/ingest.h"
#include "eventshift/corpus/jsonl.h"
#include "eventshift/corpus/stats.h"
#include "eventshift/corpus/vocab.h"
#include "eventshift/daft/daft.h"
#include "eventshift/error.h"
#include "eventshift/evalsuite/analysis.h"
#include "eventshift/evalsuite/report.h"
#include "eventshift/experiment/experiment.h"
#include "eventshift/liw/weights.h"
#include "eventshift/synthbench/generator.h"
#include "eventshift/synthbench/oracle.h"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

using namespace eventshift;
namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 1;
constexpr int kValidation = 2;
constexpr int kRuntime = 3;

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

std::vector<std::vector<std::string>> sentences_of(const corpus::Corpus& c) {
  std::vector<std::vector<std::string>> out;
  for (const auto& d : c.documents)
    for (const auto& s : d.sentences) out.push_back(s.words());
  return out;
}

std::vector<int> flat_labels(const corpus::Corpus& c, std::vector<std::string>* words) {
  std::vector<int> out;
  for (const auto& d : c.documents)
    for (const auto& s : d.sentences)
      for (const auto& t : s.tokens) {
        out.push_back(t.label);
        words->push_back(t.text);
      }
  return out;
}

struct Ingest {
  std::string input, output, format = "auto", domain, split = "train";
  void run() const {
    corpus::ParseDiagnostics diag;
    auto c = corpus::load_corpus(input, corpus::input_format_from_string(format), domain,
                                 corpus::parse_split(split), &diag);
    corpus::validate(c);
    for (const auto& w : diag.warnings) spdlog::warn("{}", w);
    if (diag.misaligned_spans) spdlog::warn("{} event spans cut through tokens", diag.misaligned_spans);
    corpus::write_corpus(c, output);
    spdlog::info("wrote {} documents, {} sentences to {}", c.documents.size(), c.num_sentences(), output);
  }
};

struct Stats {
  std::string input, format = "auto";
  bool json = false;
  void run() const {
    auto s = corpus::corpus_stats(corpus::load_corpus(input, corpus::input_format_from_string(format)));
    if (json) std::cout << corpus::stats_to_json(s).dump(2) << '\n';
    else std::cout << corpus::format_stats(s);
  }
};

struct Kappa {
  std::string a, b, format = "auto";
  void run() const {
    const auto f = corpus::input_format_from_string(format);
    std::vector<std::string> wa, wb;
    auto la = flat_labels(corpus::load_corpus(a, f), &wa);
    auto lb = flat_labels(corpus::load_corpus(b, f), &wb);
    if (wa != wb) throw IntegrityError("the two annotation files do not cover the same tokens");
    std::cout << corpus::cohens_kappa(la, lb) << '\n';
  }
};

struct SynthGen {
  std::string out, spec;
  std::optional<double> rate;
  std::optional<unsigned long> seed;
  void run() const {
    synthbench::ShiftSpec s = spec.empty() ? synthbench::ShiftSpec{} : synthbench::shift_spec_from_json(read_json(spec));
    if (rate) s.substitution_rate = *rate;
    if (seed) s.seed = *seed;
    synthbench::validate(s);
    auto o = synthbench::generate(s);
    if (!synthbench::all_passed(synthbench::oracle_checks(o))) throw std::runtime_error("generated data failed its oracle checks");
    synthbench::write_output(o, s, out);
    spdlog::info("wrote synthetic corpora to {}", out);
  }
};

struct LmTrain {
  std::string text, out, config, embeddings;
  std::optional<int> epochs;
  std::optional<unsigned long> seed;
  void run() const {
    experiment::LiwSettings s;
    if (!config.empty()) {
      auto j = read_json(config);
      if (j.contains("lm")) s.lm = liw::lm_config_from_json(j.at("lm"));
      if (j.contains("train")) s.train = liw::lm_train_config_from_json(j.at("train"));
    }
    if (epochs) s.train.epochs = *epochs;
    if (seed) s.lm.seed = *seed;
    std::optional<encoders::StaticEmbeddings> emb;
    if (!embeddings.empty()) emb = encoders::load_static_embeddings(embeddings, s.lm.hidden);
    auto r = liw::train_lm(sentences_of(experiment::load_raw_corpus(text)), s.lm, s.train, emb ? &*emb : nullptr);
    r.lm->save(out);
    std::ofstream hist(fs::path(out) / "history.csv");
    hist << "epoch,lr,train_loss,valid_loss,valid_ppl\n";
    for (const auto& e : r.history)
      hist << e.epoch << ',' << e.lr << ',' << e.train_loss << ',' << e.valid_loss << ',' << e.valid_ppl << '\n';
    write_json(fs::path(out) / "train_config.json", {{"lm", liw::to_json(s.lm)}, {"train", liw::to_json(s.train)}});
  }
};

struct Weigh {
  std::string lm, corpus_path, out;
  bool per_token = false;
  void run() const {
    auto model = liw::LstmLm::load(lm);
    auto c = corpus::read_corpus(corpus_path, corpus::Split::kTrain);
    auto ws = liw::weigh_corpus(*model, c, per_token);
    liw::write_sidecar(out, liw::sidecar_rows(c, ws));
    spdlog::info("wrote {} weights to {}", ws.n, out);
  }
};

struct DaftFinetune {
  std::string base, source, target, out, config, objective;
  std::optional<int> epochs;
  std::optional<unsigned long> seed;
  void run() const {
    daft::DaftConfig c = config.empty() ? daft::DaftConfig{} : daft::daft_config_from_json(read_json(config));
    if (!objective.empty()) c.objective = daft::objective_from_string(objective);
    if (epochs) c.epochs = *epochs;
    if (seed) c.seed = *seed;
    daft::validate(c);
    auto mixed = daft::build_mixed_corpus(corpus::read_corpus(source, corpus::Split::kTrain),
                                          experiment::load_raw_corpus(target), c.seed);
    daft::daft_finetune(base, mixed, c, out);
    spdlog::info("fine-tuned encoder written to {}", out);
  }
};

struct EncoderInit {
  std::vector<std::string> texts;
  std::string out, config;
  void run() const {
    auto c = config.empty() ? experiment::EncoderInitConfig{}
                            : experiment::encoder_init_config_from_json(read_json(config));
    std::vector<std::vector<std::string>> sentences;
    for (const auto& t : texts) {
      auto s = sentences_of(experiment::load_raw_corpus(t));
      sentences.insert(sentences.end(), s.begin(), s.end());
    }
    experiment::init_encoder(sentences, c, out);
    spdlog::info("encoder written to {}", out);
  }
};

struct Train {
  std::string train, dev, out, config, encoder, weights;
  bool delex = false;
  std::optional<unsigned long> seed;
  void run() const {
    nlohmann::json j = config.empty() ? nlohmann::json::object() : read_json(config);
    tagger::TaggerArch arch = j.contains("tagger") ? tagger::tagger_arch_from_json(j["tagger"]) : tagger::TaggerArch{};
    tagger::TrainConfig tc = j.contains("train") ? tagger::train_config_from_json(j["train"]) : tagger::TrainConfig{};
    encoders::EncoderConfig ec = j.contains("encoder") ? encoders::encoder_config_from_json(j["encoder"])
                                                       : encoders::EncoderConfig{};
    if (!encoder.empty()) ec.checkpoint_id = encoder;
    if (seed) tc.seed = arch.seed = *seed;
    const bool use_pos = delex || j.value("model", std::string("bert")) == "delex";
    arch.kind = use_pos ? tagger::ModelKind::kDelex : tagger::ModelKind::kBiLstm;
    const nlohmann::json spec = use_pos ? experiment::pos_featurizer_spec(j.value("pos_dim", 50), tc.seed)
                                        : experiment::contextual_featurizer_spec(ec);
    if (!use_pos && ec.checkpoint_id.empty()) throw ConfigError("train: --encoder or encoder.checkpoint_id required");
    auto feat = experiment::make_featurizer(spec);
    auto tr = corpus::read_corpus(train, corpus::Split::kTrain);
    auto dv = corpus::read_corpus(dev, corpus::Split::kDev);
    std::optional<std::vector<double>> alphas;
    if (!weights.empty()) alphas = liw::alphas_for(tr, liw::read_sidecar(weights));
    auto train_set = tagger::make_training_set(*feat, tr, alphas ? &*alphas : nullptr);
    auto dev_set = tagger::make_training_set(*feat, dv);
    arch.input_dim = feat->dim();
    tagger::TaggerModel m(arch);
    auto r = tagger::train_tagger(m, train_set, dev_set, tc);
    tagger::write_checkpoint(out, m, tc, r, {{"features", feat->describe()}, {"weighted", alphas.has_value()}});
    write_json(fs::path(out) / "featurizer.json", spec);
    spdlog::info("best dev F1 {:.4f} at epoch {}", r.best_dev_f1, r.best_epoch);
  }
};

struct Eval {
  std::string model, corpus_path, train, out, predictions, featurizer, name = "target";
  bool verb = false;
  void run() const {
    auto gold = corpus::read_corpus(corpus_path, corpus::Split::kTest);
    auto tr = corpus::read_corpus(train, corpus::Split::kTrain);
    evalsuite::Predictions pred;
    std::string model_id;
    if (verb) {
      pred = experiment::verb_predictions(gold);
      model_id = "verb";
    } else if (!model.empty()) {
      auto m = tagger::TaggerModel::load(model);
      const fs::path spec_file = featurizer.empty() ? fs::path(model) / "featurizer.json" : fs::path(featurizer);
      auto feat = experiment::make_featurizer(read_json(spec_file));
      pred = experiment::predict_corpus(m, *feat, gold);
      model_id = fs::path(model).filename().string();
    } else if (!predictions.empty()) {
      pred = experiment::read_predictions(predictions);
      model_id = fs::path(predictions).stem().string();
    } else {
      throw ConfigError("eval: give --model, --predictions or --verb");
    }
    auto r = experiment::evaluate_predictions(pred, gold, tr, {model_id, "source", name, 0});
    nlohmann::json j = {{"schema_version", evalsuite::kReportSchemaVersion}, {"reports", {evalsuite::to_json(r)}}};
    if (out.empty()) std::cout << j.dump(2) << '\n';
    else write_json(out, j);
  }
};

struct Report {
  std::vector<std::string> inputs;
  std::string out, gold, train;
  std::vector<std::string> preds;
  std::size_t k = 500;
  unsigned long seed = 0;
  void run() const {
    std::vector<evalsuite::EvalReport> all;
    for (const auto& in : inputs) {
      fs::path p(in);
      if (fs::is_directory(p)) p /= "report/reports.json";
      auto r = evalsuite::read_reports_json(p);
      all.insert(all.end(), r.begin(), r.end());
    }
    if (!all.empty()) evalsuite::emit_report(all, out);
    if (preds.empty()) return;
    if (gold.empty() || train.empty()) throw ConfigError("report: --pred needs --gold and --train");
    auto g = corpus::read_corpus(gold, corpus::Split::kTest);
    auto part = corpus::iv_oov_partition(g, corpus::build_vocab(corpus::read_corpus(train, corpus::Split::kTrain)));
    evalsuite::TypeAnalysisInput input{&g, &part, fs::path(gold).stem().string(), {}};
    nlohmann::json morph = nlohmann::json::object();
    for (const auto& spec : preds) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) throw ConfigError("--pred expects name=predictions.jsonl, got " + spec);
      const std::string name = spec.substr(0, eq);
      auto p = experiment::read_predictions(spec.substr(eq + 1));
      auto m = evalsuite::morph_pattern_report(evalsuite::correct_oov_events(p, g, part));
      morph[name] = {{"total", m.total},   {"ed", m.ed},           {"ing", m.ing},
                     {"tion_sion", m.tion_sion}, {"ed_pos", m.ed_pos}, {"ing_pos", m.ing_pos},
                     {"tion_sion_pos", m.tion_sion_pos}, {"any", m.any}, {"any_fraction", m.any_fraction}};
      input.models[name] = std::move(p);
    }
    fs::create_directories(out);
    std::ofstream csv(fs::path(out) / "type_analysis.csv");
    evalsuite::write_type_analysis_csv(csv, evalsuite::sample_type_analysis(input, k, seed));
    write_json(fs::path(out) / "morphology.json", morph);
  }
};

struct Run {
  std::string config, output_dir, name;
  std::optional<unsigned long> seed;
  void run() const {
    nlohmann::json j = read_json(config);
    if (!output_dir.empty()) j["output_dir"] = fs::absolute(output_dir).string();
    if (seed) j["seed"] = *seed;
    if (!name.empty()) j["name"] = name;
    auto c = experiment::experiment_config_from_json(j, fs::absolute(config).parent_path());
    auto r = experiment::run(c);
    std::cout << "run directory: " << r.run_dir.string() << '\n'
              << "in-domain F1: " << r.in_domain.overall.f1 << '\n';
    for (const auto& [t, rep] : r.out_of_domain) std::cout << t << " F1: " << rep.overall.f1 << '\n';
    std::cout << "ledger: " << r.ledger_hash << '\n';
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eventshift: domain adaptation for event trigger extraction"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  Ingest ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Convert BRAT, TimeML or JSONL input to canonical JSONL");
  c_ingest->add_option("input", ingest.input, "File or directory")->required();
  c_ingest->add_option("-o,--output", ingest.output, "Output .jsonl")->required();
  c_ingest->add_option("--format", ingest.format, "auto, jsonl, brat or timeml");
  c_ingest->add_option("--domain", ingest.domain, "Domain tag");
  c_ingest->add_option("--split", ingest.split, "train, dev or test");

  Stats stats;
  auto* c_stats = app.add_subcommand("stats", "Corpus statistics");
  c_stats->add_option("input", stats.input, "File or directory")->required();
  c_stats->add_option("--format", stats.format, "auto, jsonl, brat or timeml");
  c_stats->add_flag("--json", stats.json, "Print JSON");

  Kappa kappa;
  auto* c_kappa = app.add_subcommand("kappa", "Cohen's kappa between two annotations of the same tokens");
  c_kappa->add_option("a", kappa.a)->required();
  c_kappa->add_option("b", kappa.b)->required();
  c_kappa->add_option("--format", kappa.format, "auto, jsonl, brat or timeml");

  SynthGen synth;
  auto* c_synth = app.add_subcommand("synth-gen", "Generate synthetic source/target corpora");
  c_synth->add_option("-o,--out", synth.out, "Output directory")->required();
  c_synth->add_option("--spec", synth.spec, "Shift spec JSON");
  c_synth->add_option("--rate", synth.rate, "Substitution rate");
  c_synth->add_option("--seed", synth.seed);

  LmTrain lm;
  auto* c_lm = app.add_subcommand("lm-train", "Train the target-domain language model");
  c_lm->add_option("--text", lm.text, "Raw text (.txt) or corpus (.jsonl)")->required();
  c_lm->add_option("-o,--out", lm.out, "Output directory")->required();
  c_lm->add_option("--config", lm.config, "JSON with lm and train sections");
  c_lm->add_option("--embeddings", lm.embeddings, "Static embedding file");
  c_lm->add_option("--epochs", lm.epochs);
  c_lm->add_option("--seed", lm.seed);

  Weigh weigh;
  auto* c_weigh = app.add_subcommand("weigh", "Weight training sentences by target-LM likelihood");
  c_weigh->add_option("--lm", weigh.lm, "LM directory")->required();
  c_weigh->add_option("--corpus", weigh.corpus_path, "Training corpus .jsonl")->required();
  c_weigh->add_option("-o,--out", weigh.out, "Sidecar .jsonl")->required();
  c_weigh->add_flag("--per-token", weigh.per_token, "Length-normalized variant");

  DaftFinetune dft;
  auto* c_daft = app.add_subcommand("daft-finetune", "Fine-tune an encoder on mixed source and target text");
  c_daft->add_option("--base", dft.base, "Base checkpoint id or directory")->required();
  c_daft->add_option("--source", dft.source, "Source corpus .jsonl")->required();
  c_daft->add_option("--target", dft.target, "Target raw text (.txt) or tagged corpus (.jsonl)")->required();
  c_daft->add_option("-o,--out", dft.out, "New checkpoint directory")->required();
  c_daft->add_option("--config", dft.config, "DAFT config JSON");
  c_daft->add_option("--objective", dft.objective, "mlm or pos");
  c_daft->add_option("--epochs", dft.epochs);
  c_daft->add_option("--seed", dft.seed);

  EncoderInit einit;
  auto* c_einit = app.add_subcommand("encoder-init", "Build and pretrain a small base encoder");
  c_einit->add_option("--text", einit.texts, "Text files (.txt or .jsonl)")->required();
  c_einit->add_option("-o,--out", einit.out, "Checkpoint directory")->required();
  c_einit->add_option("--config", einit.config, "Encoder init config JSON");

  Train train;
  auto* c_train = app.add_subcommand("train", "Train a tagger on source data");
  c_train->add_option("--train", train.train, "Training corpus .jsonl")->required();
  c_train->add_option("--dev", train.dev, "Dev corpus .jsonl")->required();
  c_train->add_option("-o,--out", train.out, "Checkpoint directory")->required();
  c_train->add_option("--config", train.config, "JSON with tagger, train, encoder sections");
  c_train->add_option("--encoder", train.encoder, "Encoder checkpoint id");
  c_train->add_option("--weights", train.weights, "LIW sidecar");
  c_train->add_flag("--delex", train.delex, "POS-embedding baseline");
  c_train->add_option("--seed", train.seed);

  Eval ev;
  auto* c_eval = app.add_subcommand("eval", "Score a model or a predictions file");
  c_eval->add_option("--corpus", ev.corpus_path, "Gold corpus .jsonl")->required();
  c_eval->add_option("--train", ev.train, "Training corpus, for IV/OOV buckets")->required();
  c_eval->add_option("--model", ev.model, "Tagger checkpoint");
  c_eval->add_option("--featurizer", ev.featurizer, "Featurizer JSON if not in the checkpoint");
  c_eval->add_option("--predictions", ev.predictions, "Predictions .jsonl");
  c_eval->add_flag("--verb", ev.verb, "Label every verb");
  c_eval->add_option("--name", ev.name, "Target name");
  c_eval->add_option("-o,--out", ev.out, "Report JSON");

  Report rep;
  auto* c_rep = app.add_subcommand("report", "Summaries, charts and lexical-shift analyses");
  c_rep->add_option("inputs", rep.inputs, "reports.json files or run directories");
  c_rep->add_option("-o,--out", rep.out, "Output directory")->required();
  c_rep->add_option("--gold", rep.gold, "Target gold corpus for the analyses");
  c_rep->add_option("--train", rep.train, "Training corpus for IV/OOV");
  c_rep->add_option("--pred", rep.preds, "name=predictions.jsonl, repeatable");
  c_rep->add_option("--k", rep.k, "Sampled OOV events per target");
  c_rep->add_option("--seed", rep.seed);

  Run run;
  auto* c_run = app.add_subcommand("run", "Run a full experiment from a config file");
  c_run->add_option("--config", run.config, "Experiment config JSON")->required();
  c_run->add_option("--output-dir", run.output_dir, "Overrides output_dir");
  c_run->add_option("--seed", run.seed, "Overrides seed");
  c_run->add_option("--name", run.name, "Overrides name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (c_ingest->parsed()) ingest.run();
    else if (c_stats->parsed()) stats.run();
    else if (c_kappa->parsed()) kappa.run();
    else if (c_synth->parsed()) synth.run();
    else if (c_lm->parsed()) lm.run();
    else if (c_weigh->parsed()) weigh.run();
    else if (c_daft->parsed()) dft.run();
    else if (c_einit->parsed()) einit.run();
    else if (c_train->parsed()) train.run();
    else if (c_eval->parsed()) ev.run();
    else if (c_rep->parsed()) rep.run();
    else if (c_run->parsed()) run.run();
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const IntegrityError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  }
  return 0;
}
