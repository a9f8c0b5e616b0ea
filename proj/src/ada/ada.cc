#include "eventshift/ada/ada.h"

#include "eventshift/error.h"
#include "eventshift/nn/param_io.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace eventshift::ada {

DomainPredictor::DomainPredictor(int in_dim, unsigned long seed, int hidden) {
  nn::Rng rng(seed);
  mlp_ = nn::Mlp("D.mlp", {in_dim, hidden, hidden, 1}, nn::Activation::kRelu, rng);
}

nn::Var DomainPredictor::logits(nn::Graph& g, nn::Var pooled, bool trainable) {
  return mlp_.forward(g, pooled, trainable);
}

nn::ParamList DomainPredictor::params() {
  nn::ParamList out;
  mlp_.collect(out);
  return out;
}

nlohmann::json to_json(const AdaConfig& c) {
  return {{"lambdas", c.lambdas}, {"seed", c.seed}, {"d_lr", c.d_lr}, {"selection", "source_dev_f1"}};
}

AdaConfig ada_config_from_json(const nlohmann::json& j) {
  AdaConfig c;
  if (j.contains("lambdas")) c.lambdas = j.at("lambdas").get<std::vector<double>>();
  c.seed = j.value("seed", c.seed);
  c.d_lr = j.value("d_lr", c.d_lr);
  if (c.lambdas.empty()) throw ConfigError("ada: empty lambda grid");
  for (double l : c.lambdas)
    if (!(l > 0.0)) throw ConfigError("ada: lambda must be positive");
  if (!(c.d_lr > 0.0)) throw ConfigError("ada: d_lr must be positive");
  return c;
}

AdaPass TaggerAdaBatch::operator()(nn::Graph& g, bool trainable, bool train_mode) const {
  if (src.empty() || tgt.empty()) throw std::invalid_argument("ada_step: empty batch");
  std::vector<const nn::Matrix*> sf, tf;
  for (int i : src) sf.push_back(&train->feats[static_cast<std::size_t>(i)]);
  for (int i : tgt) tf.push_back(&(*tgt_feats)[static_cast<std::size_t>(i)]);
  auto fs = model->forward(g, sf, train_mode ? src_dropout : nullptr, trainable, trainable);
  AdaPass p;
  p.event_loss = tagger::weighted_event_loss(g, fs, *train, src);
  auto ft = model->forward(g, tf, train_mode ? tgt_dropout : nullptr, trainable, trainable);
  p.src_pooled = tagger::pool_batch(g, fs.reprs, fs.lengths);
  p.tgt_pooled = tagger::pool_batch(g, ft.reprs, ft.lengths);
  return p;
}

tagger::TrainResult train_ada_trial(tagger::TaggerModel& m, DomainPredictor& d, const tagger::TrainingSet& src,
                                    const std::vector<nn::Matrix>& tgt_feats, const tagger::TrainingSet& dev,
                                    const tagger::TrainConfig& cfg, double lambda, double d_lr) {
  if (tgt_feats.empty()) throw ConfigError("ada: no target sentences");
  nn::Adam opt_re(m.params(), cfg.lr);
  nn::Adam opt_d(d.params(), d_lr);
  nn::Rng src_dropout(cfg.seed + 1), tgt_dropout(cfg.seed + 2), tgt_pick(cfg.seed + 3);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(tgt_feats.size()) - 1);
  auto step = [&](std::span<const int> batch) {
    TaggerAdaBatch b{&m, &src, std::vector<int>(batch.begin(), batch.end()), &tgt_feats, {}, &src_dropout,
                     &tgt_dropout};
    for (std::size_t i = 0; i < batch.size(); ++i) b.tgt.push_back(pick(tgt_pick));
    AdaLosses l = ada_step(b, d, opt_d, opt_re, lambda);
    if (!std::isfinite(l.domain_loss_step1) || !std::isfinite(l.domain_loss_step2))
      return std::numeric_limits<double>::quiet_NaN();
    return l.event_loss;
  };
  nn::ParamList tracked = m.params();
  for (nn::Parameter* p : d.params()) tracked.push_back(p);
  return tagger::train_loop(m, src, dev, cfg, step, tracked);
}

namespace {

std::string lambda_name(double l) {
  std::ostringstream s;
  s << "lambda_" << l;
  return s.str();
}

}  // namespace

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& trials, const std::filesystem::path& base) {
  out << "lambda,seed,best_dev_f1,checkpoint\n";
  out.precision(10);
  for (const auto& t : trials) {
    const auto path = base.empty() ? t.checkpoint : t.checkpoint.lexically_relative(base);
    out << t.lambda << ',' << t.seed << ',' << t.best_dev_f1 << ',' << path.string() << '\n';
  }
}

AdaResult train_ada(const tagger::TaggerArch& arch, const tagger::TrainingSet& src,
                    const std::vector<nn::Matrix>& tgt_feats, const tagger::TrainingSet& dev,
                    const tagger::TrainConfig& tcfg, const AdaConfig& acfg, const std::filesystem::path& out_dir) {
  if (arch.kind != tagger::ModelKind::kBiLstm) throw ConfigError("ada requires the BiLSTM tagger");
  if (tgt_feats.empty()) throw ConfigError("ada: target raw text is empty");
  tagger::TrainConfig cfg = tcfg;
  cfg.seed = acfg.seed;
  AdaResult r;
  for (double lambda : acfg.lambdas) {
    tagger::TaggerModel m(arch);
    DomainPredictor d(m.repr_dim(), acfg.seed + 101);
    auto res = train_ada_trial(m, d, src, tgt_feats, dev, cfg, lambda, acfg.d_lr);
    TrialRecord t{lambda, acfg.seed, res.best_dev_f1, res.best_epoch, out_dir / lambda_name(lambda)};
    tagger::write_checkpoint(t.checkpoint, m, cfg, res, {{"technique", "ada"}, {"lambda", lambda}, {"ada", to_json(acfg)}});
    nn::save_params(d.params(), t.checkpoint / "domain.bin");
    spdlog::info("ada lambda {} best dev f1 {:.4f} (epoch {})", lambda, t.best_dev_f1, t.best_epoch);
    if (r.trials.empty() || t.best_dev_f1 > r.trials[r.best].best_dev_f1) r.best = r.trials.size();
    r.trials.push_back(t);
  }
  std::ofstream csv(out_dir / "trials.csv");
  write_trials_csv(csv, r.trials, out_dir);
  const auto best_dir = out_dir / "best";
  std::filesystem::remove_all(best_dir);
  std::filesystem::copy(r.trials[r.best].checkpoint, best_dir, std::filesystem::copy_options::recursive);
  return r;
}

nn::Matrix pooled_representations(tagger::TaggerModel& m, const std::vector<nn::Matrix>& feats) {
  nn::Matrix out(static_cast<Eigen::Index>(feats.size()), m.repr_dim());
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < feats.size(); start += chunk) {
    std::vector<const nn::Matrix*> batch;
    for (std::size_t i = start; i < std::min(feats.size(), start + chunk); ++i) batch.push_back(&feats[i]);
    nn::Graph g;
    auto f = m.forward(g, batch, nullptr, false, false);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(batch.size())) =
        g.value(tagger::pool_batch(g, f.reprs, f.lengths));
  }
  return out;
}

ProbeResult domain_probe(const nn::Matrix& src, const nn::Matrix& tgt, const ProbeConfig& cfg) {
  if (src.cols() != tgt.cols()) throw std::invalid_argument("domain_probe: width mismatch");
  const Eigen::Index n = std::min(src.rows(), tgt.rows());
  if (n < 2) throw std::invalid_argument("domain_probe: need at least two rows per domain");
  std::mt19937_64 rng(cfg.seed);
  auto pick = [&](const nn::Matrix& m) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(n));
    return idx;
  };
  const auto si = pick(src), ti = pick(tgt);
  const Eigen::Index n_train = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(cfg.train_fraction * n), 1, n - 1);
  const Eigen::Index k = src.cols();
  nn::Matrix xtr(2 * n_train, k), xte(2 * (n - n_train), k);
  std::vector<double> ytr, yte;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool train = i < n_train;
    nn::Matrix& x = train ? xtr : xte;
    const Eigen::Index row = 2 * (train ? i : i - n_train);
    x.row(row) = src.row(si[i]);
    x.row(row + 1) = tgt.row(ti[i]);
    auto& y = train ? ytr : yte;
    y.push_back(0.0);
    y.push_back(1.0);
  }
  const nn::RowVector mean = xtr.colwise().mean();
  nn::RowVector sd = ((xtr.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index j = 0; j < k; ++j)
    if (sd(j) < 1e-12) sd(j) = 1.0;
  auto standardize = [&](nn::Matrix& x) {
    x = ((x.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  };
  standardize(xtr);
  standardize(xte);

  nn::Rng init(cfg.seed + 1);
  nn::Linear probe("probe", static_cast<int>(k), 1, init);
  nn::ParamList params;
  probe.collect(params);
  nn::Adam opt(params, cfg.lr);
  std::vector<double> w(ytr.size(), 1.0 / static_cast<double>(ytr.size()));
  for (int e = 0; e < cfg.epochs; ++e) {
    nn::Graph g;
    nn::Var loss = g.bce_with_logits(probe.forward(g, g.input(xtr)), ytr, w);
    opt.zero_grad();
    g.backward(loss);
    opt.step();
  }
  auto accuracy = [&](const nn::Matrix& x, const std::vector<double>& y) {
    nn::Graph g;
    const nn::Matrix& z = g.value(probe.forward(g, g.input(x), false));
    std::size_t ok = 0;
    for (std::size_t i = 0; i < y.size(); ++i) ok += (z(static_cast<Eigen::Index>(i), 0) >= 0.0) == (y[i] > 0.5);
    return static_cast<double>(ok) / static_cast<double>(y.size());
  };
  return {accuracy(xtr, ytr), accuracy(xte, yte), ytr.size(), yte.size()};
}

}  // namespace eventshift::ada
