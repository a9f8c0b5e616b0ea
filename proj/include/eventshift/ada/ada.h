#pragma once

// Adversarial domain adaptation by alternating optimization:
//   step 1 updates the domain predictor D on domain cross-entropy over a
//          source and a target batch, with R and E frozen;
//   step 2 updates R and E on  event_loss - lambda * domain_loss  with D
//          frozen.

#include "eventshift/nn/optim.h"
#include "eventshift/tagger/model.h"
#include "eventshift/tagger/train.h"

#include <filesystem>
#include <vector>

namespace eventshift::ada {

class DomainPredictor {
 public:
  DomainPredictor() = default;
  // Three linear layers (in -> 100 -> 100 -> 1) with ReLU between them.
  DomainPredictor(int in_dim, unsigned long seed, int hidden = 100);
  nn::Var logits(nn::Graph& g, nn::Var pooled, bool trainable);
  nn::ParamList params();

 private:
  nn::Mlp mlp_;
};

struct AdaConfig {
  std::vector<double> lambdas = {0.5, 1.0, 2.0, 5.0};
  unsigned long seed = 0;
  double d_lr = 1e-3;
};

nlohmann::json to_json(const AdaConfig& c);
AdaConfig ada_config_from_json(const nlohmann::json& j);

struct AdaLosses {
  double event_loss = 0.0;
  double domain_loss_step1 = 0.0;
  double domain_loss_step2 = 0.0;
};

// Representations and event loss of one source/target batch pair.
struct AdaPass {
  nn::Var src_pooled;  // B_s x k
  nn::Var tgt_pooled;  // B_t x k
  nn::Var event_loss;  // 1 x 1
};

// Mean binary cross-entropy of D's predictions, source rows labeled 0 and
// target rows labeled 1.
template <class Disc>
nn::Var domain_loss(nn::Graph& g, Disc& d, const AdaPass& p, bool train_d) {
  const nn::Var both[] = {p.src_pooled, p.tgt_pooled};
  nn::Var z = d.logits(g, g.concat_rows(both), train_d);
  const auto ns = g.value(p.src_pooled).rows(), nt = g.value(p.tgt_pooled).rows();
  if (ns == 0 || nt == 0) throw std::invalid_argument("ada_step: empty batch");
  std::vector<double> targets(static_cast<std::size_t>(ns), 0.0);
  targets.resize(static_cast<std::size_t>(ns + nt), 1.0);
  std::vector<double> weights(targets.size(), 1.0 / static_cast<double>(targets.size()));
  return g.bce_with_logits(z, targets, weights);
}

// build(graph, trainable, train_mode) returns an AdaPass; trainable selects
// whether R and E receive gradients, train_mode whether dropout is active.
// Disc provides logits(graph, pooled, trainable). opt_d must own exactly
// D's parameters and opt_re exactly R and E.
template <class Build, class Disc>
AdaLosses ada_step(Build&& build, Disc& d, nn::Optimizer& opt_d, nn::Optimizer& opt_re, double lambda) {
  AdaLosses out;
  {
    nn::Graph g;
    AdaPass p = build(g, false, false);
    nn::Var loss = domain_loss(g, d, p, true);
    out.domain_loss_step1 = g.scalar(loss);
    opt_d.zero_grad();
    g.backward(loss);
    opt_d.step();
  }
  {
    nn::Graph g;
    AdaPass p = build(g, true, true);
    nn::Var dom = domain_loss(g, d, p, false);
    nn::Var loss = g.sub(p.event_loss, g.scale(dom, lambda));
    out.event_loss = g.scalar(p.event_loss);
    out.domain_loss_step2 = g.scalar(dom);
    opt_re.zero_grad();
    g.backward(loss);
    opt_re.step();
  }
  return out;
}

// Source batch with labels and weights from train; target batch of
// unlabeled feature matrices.
struct TaggerAdaBatch {
  tagger::TaggerModel* model;
  const tagger::TrainingSet* train;
  std::vector<int> src;
  const std::vector<nn::Matrix>* tgt_feats;
  std::vector<int> tgt;
  nn::Rng* src_dropout;
  nn::Rng* tgt_dropout;

  AdaPass operator()(nn::Graph& g, bool trainable, bool train_mode) const;
};

struct TrialRecord {
  double lambda = 0.0;
  unsigned long seed = 0;
  double best_dev_f1 = 0.0;
  int best_epoch = 0;
  std::filesystem::path checkpoint;
};

struct AdaResult {
  std::vector<TrialRecord> trials;
  std::size_t best = 0;  // index into trials
};

// One adversarial training run at a fixed lambda. Uses the same batch order
// and source dropout stream as tagger::train_tagger with the same config.
tagger::TrainResult train_ada_trial(tagger::TaggerModel& m, DomainPredictor& d, const tagger::TrainingSet& src,
                                    const std::vector<nn::Matrix>& tgt_feats, const tagger::TrainingSet& dev,
                                    const tagger::TrainConfig& cfg, double lambda, double d_lr);

// One trial per lambda at cfg.seed, each from the same initialization.
// Writes every trial under out_dir/lambda_<value>/ (tagger checkpoint plus
// domain.bin) and out_dir/trials.csv; best_dir receives a copy of the best.
AdaResult train_ada(const tagger::TaggerArch& arch, const tagger::TrainingSet& src,
                    const std::vector<nn::Matrix>& tgt_feats, const tagger::TrainingSet& dev,
                    const tagger::TrainConfig& tcfg, const AdaConfig& acfg, const std::filesystem::path& out_dir);

// Checkpoint paths are written relative to base when it is given.
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& trials,
                      const std::filesystem::path& base = {});

// Row i is the mean BiLSTM output of sentence i (evaluation mode).
nn::Matrix pooled_representations(tagger::TaggerModel& m, const std::vector<nn::Matrix>& feats);

struct ProbeConfig {
  int epochs = 300;
  double lr = 0.01;
  double train_fraction = 0.5;
  unsigned long seed = 0;
};

struct ProbeResult {
  double train_accuracy = 0.0;
  double heldout_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_heldout = 0;
};

// Logistic-regression domain probe on standardized pooled representations.
// Uses the same number of rows from each domain.
ProbeResult domain_probe(const nn::Matrix& src, const nn::Matrix& tgt, const ProbeConfig& cfg = {});

}  // namespace eventshift::ada
