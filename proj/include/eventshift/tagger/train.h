#pragma once

// Instance-weighted tagger training with early stopping on source-dev F1.
// The epoch loop takes a pluggable step so adversarial training reuses it.

#include "eventshift/corpus/records.h"
#include "eventshift/encoders/features.h"
#include "eventshift/evalsuite/score.h"
#include "eventshift/nn/optim.h"
#include "eventshift/tagger/model.h"

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace eventshift::tagger {

struct TrainConfig {
  int batch_size = 16;
  double lr = 1e-3;
  int max_epochs = 1000;
  int patience = 25;  // epochs without dev-F1 improvement
  unsigned long seed = 0;
  double threshold = 0.5;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
void validate(const TrainConfig& c);

// Sentences as feature matrices with labels and a nonnegative weight each.
struct TrainingSet {
  std::vector<nn::Matrix> feats;
  std::vector<std::vector<int>> labels;
  std::vector<double> alpha;
  std::size_t size() const { return feats.size(); }
};

// alphas, when given, must have one entry per sentence in corpus order.
TrainingSet make_training_set(const encoders::Featurizer& f, const corpus::Corpus& c,
                              const std::vector<double>* alphas = nullptr);
TrainingSet make_training_set(std::vector<nn::Matrix> feats, const corpus::Corpus& c,
                              const std::vector<double>* alphas = nullptr);

// sum over sentences s in batch of alpha_s * sum_t BCE(s, t), divided by the
// number of tokens in the batch.
nn::Var weighted_event_loss(nn::Graph& g, const TaggerModel::Forward& f, const TrainingSet& data,
                            std::span<const int> batch);

// One optimizer step of plain (weighted) event training. Returns the loss.
double tagger_step(TaggerModel& m, nn::Optimizer& opt, const TrainingSet& data, std::span<const int> batch,
                   nn::Rng& dropout_rng);

evalsuite::Predictions predict_all(TaggerModel& m, const std::vector<nn::Matrix>& feats, double threshold = 0.5);
evalsuite::Scores evaluate(TaggerModel& m, const TrainingSet& data, double threshold = 0.5);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  evalsuite::Scores dev;
};

struct TrainResult {
  int best_epoch = 0;
  double best_dev_f1 = -1.0;
  bool early_stopped = false;
  std::vector<EpochRecord> history;
};

using StepFn = std::function<double(std::span<const int> batch)>;

// Shuffles with a generator seeded from cfg.seed, calls step per batch,
// scores dev after every epoch and keeps the best state of `tracked`
// (restored before returning). Throws TrainingError on a non-finite loss.
TrainResult train_loop(TaggerModel& m, const TrainingSet& train, const TrainingSet& dev, const TrainConfig& cfg,
                       const StepFn& step, const nn::ParamList& tracked);

// Adam over all model parameters with tagger_step.
TrainResult train_tagger(TaggerModel& m, const TrainingSet& train, const TrainingSet& dev, const TrainConfig& cfg);

// Checkpoint directory: model.json + params.bin, meta.json (config, seed,
// dev-F1 curve and extra metadata) and history.csv.
void write_checkpoint(const std::filesystem::path& dir, TaggerModel& m, const TrainConfig& cfg,
                      const TrainResult& r, const nlohmann::json& extra = nlohmann::json::object());
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace eventshift::tagger
