#include "eventshift/tagger/train.h"

#include "eventshift/error.h"
#include "eventshift/nn/param_io.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace eventshift::tagger {

nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"optimizer", "adam"}, {"lr", c.lr},
          {"max_epochs", c.max_epochs}, {"patience", c.patience}, {"seed", c.seed},
          {"threshold", c.threshold},   {"early_stop_metric", "source_dev_f1"}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.threshold = j.value("threshold", c.threshold);
  validate(c);
  return c;
}

void validate(const TrainConfig& c) {
  if (c.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(c.lr > 0.0)) throw ConfigError("lr must be positive");
  if (c.max_epochs < 1) throw ConfigError("max_epochs must be positive");
  if (c.patience < 1 || c.patience >= c.max_epochs) throw ConfigError("patience must be in [1, max_epochs)");
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw ConfigError("threshold must be in (0,1)");
}

TrainingSet make_training_set(std::vector<nn::Matrix> feats, const corpus::Corpus& c,
                              const std::vector<double>* alphas) {
  TrainingSet t;
  t.feats = std::move(feats);
  for (const auto& d : c.documents)
    for (const auto& s : d.sentences) t.labels.push_back(s.labels());
  if (t.feats.size() != t.labels.size()) throw IntegrityError("feature count does not match sentence count");
  if (alphas) {
    if (alphas->size() != t.labels.size())
      throw IntegrityError("got " + std::to_string(alphas->size()) + " weights for " +
                           std::to_string(t.labels.size()) + " sentences");
    for (double a : *alphas)
      if (!(a >= 0.0) || !std::isfinite(a)) throw IntegrityError("sentence weights must be finite and nonnegative");
    t.alpha = *alphas;
  } else {
    t.alpha.assign(t.labels.size(), 1.0);
  }
  return t;
}

TrainingSet make_training_set(const encoders::Featurizer& f, const corpus::Corpus& c,
                              const std::vector<double>* alphas) {
  return make_training_set(encoders::featurize(f, c), c, alphas);
}

nn::Var weighted_event_loss(nn::Graph& g, const TaggerModel::Forward& f, const TrainingSet& data,
                            std::span<const int> batch) {
  std::vector<double> targets, weights;
  for (int s : batch) {
    const double a = data.alpha[static_cast<std::size_t>(s)];
    for (int y : data.labels[static_cast<std::size_t>(s)]) {
      targets.push_back(y);
      weights.push_back(a);
    }
  }
  const double n = static_cast<double>(targets.size());
  for (double& w : weights) w /= n;
  return g.bce_with_logits(f.logits, targets, weights);
}

namespace {

std::vector<const nn::Matrix*> batch_feats(const TrainingSet& data, std::span<const int> batch) {
  std::vector<const nn::Matrix*> out;
  for (int s : batch) out.push_back(&data.feats[static_cast<std::size_t>(s)]);
  return out;
}

}  // namespace

double tagger_step(TaggerModel& m, nn::Optimizer& opt, const TrainingSet& data, std::span<const int> batch,
                   nn::Rng& dropout_rng) {
  nn::Graph g;
  auto feats = batch_feats(data, batch);
  auto f = m.forward(g, feats, &dropout_rng);
  nn::Var loss = weighted_event_loss(g, f, data, batch);
  const double value = g.scalar(loss);
  if (!std::isfinite(value)) return value;
  opt.zero_grad();
  g.backward(loss);
  opt.step();
  return value;
}

evalsuite::Predictions predict_all(TaggerModel& m, const std::vector<nn::Matrix>& feats, double threshold) {
  evalsuite::Predictions out;
  out.reserve(feats.size());
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < feats.size(); start += chunk) {
    std::vector<const nn::Matrix*> batch;
    for (std::size_t i = start; i < std::min(feats.size(), start + chunk); ++i) batch.push_back(&feats[i]);
    nn::Graph g;
    auto f = m.forward(g, batch, nullptr, false, false);
    const nn::Matrix& z = g.value(f.logits);
    // sigmoid(z) >= t  <=>  z >= logit(t)
    const double cut = std::log(threshold / (1.0 - threshold));
    int row = 0;
    for (int n : f.lengths) {
      std::vector<int> p(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) p[i] = z(row + i, 0) >= cut ? 1 : 0;
      row += n;
      out.push_back(std::move(p));
    }
  }
  return out;
}

evalsuite::Scores evaluate(TaggerModel& m, const TrainingSet& data, double threshold) {
  auto pred = predict_all(m, data.feats, threshold);
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t s = 0; s < pred.size(); ++s)
    for (std::size_t i = 0; i < pred[s].size(); ++i) {
      const int y = data.labels[s][i], p = pred[s][i];
      tp += p && y;
      fp += p && !y;
      fn += !p && y;
    }
  return evalsuite::scores_from_counts(tp, fp, fn);
}

TrainResult train_loop(TaggerModel& m, const TrainingSet& train, const TrainingSet& dev, const TrainConfig& cfg,
                       const StepFn& step, const nn::ParamList& tracked) {
  validate(cfg);
  if (train.size() == 0) throw ConfigError("empty training set");
  if (dev.size() == 0) throw ConfigError("empty dev set");
  std::mt19937_64 order_rng(cfg.seed);
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult r;
  nn::Snapshot best = nn::snapshot(tracked);
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::span<const int> batch(order.data() + start, end - start);
      const double loss = step(batch);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + "; lower the learning rate or check the inputs");
      total += loss;
      ++batches;
    }
    EpochRecord rec{epoch, total / batches, evaluate(m, dev, cfg.threshold)};
    r.history.push_back(rec);
    spdlog::debug("epoch {} loss {:.5f} dev f1 {:.4f}", epoch, rec.train_loss, rec.dev.f1);
    if (rec.dev.f1 > r.best_dev_f1) {
      r.best_dev_f1 = rec.dev.f1;
      r.best_epoch = epoch;
      best = nn::snapshot(tracked);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      r.early_stopped = true;
      break;
    }
  }
  nn::restore(tracked, best);
  return r;
}

TrainResult train_tagger(TaggerModel& m, const TrainingSet& train, const TrainingSet& dev, const TrainConfig& cfg) {
  nn::Adam opt(m.params(), cfg.lr);
  nn::Rng dropout_rng(cfg.seed + 1);
  auto step = [&](std::span<const int> batch) { return tagger_step(m, opt, train, batch, dropout_rng); };
  return train_loop(m, train, dev, cfg, step, m.params());
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,dev_precision,dev_recall,dev_f1\n";
  out.precision(10);
  for (const auto& h : history)
    out << h.epoch << ',' << h.train_loss << ',' << h.dev.precision << ',' << h.dev.recall << ',' << h.dev.f1
        << '\n';
}

void write_checkpoint(const std::filesystem::path& dir, TaggerModel& m, const TrainConfig& cfg,
                      const TrainResult& r, const nlohmann::json& extra) {
  m.save(dir);
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& h : r.history) curve.push_back(h.dev.f1);
  nlohmann::json meta = {{"train_config", to_json(cfg)}, {"seed", cfg.seed},       {"best_epoch", r.best_epoch},
                         {"best_dev_f1", r.best_dev_f1}, {"early_stopped", r.early_stopped},
                         {"dev_f1_curve", curve},        {"extra", extra}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
  std::ofstream csv(dir / "history.csv");
  write_history_csv(csv, r.history);
}

}  // namespace eventshift::tagger
