#include "eventshift/tagger/model.h"

#include "eventshift/error.h"
#include "eventshift/nn/param_io.h"

#include <fstream>

namespace eventshift::tagger {

nlohmann::json to_json(const TaggerArch& a) {
  return {{"kind", a.kind == ModelKind::kBiLstm ? "bilstm" : "delex"},
          {"input_dim", a.input_dim},
          {"lstm_hidden", a.lstm_hidden},
          {"mlp_hidden", a.mlp_hidden},
          {"input_dropout", a.input_dropout},
          {"seed", a.seed}};
}

TaggerArch tagger_arch_from_json(const nlohmann::json& j) {
  TaggerArch a;
  const std::string kind = j.value("kind", std::string("bilstm"));
  if (kind == "bilstm") a.kind = ModelKind::kBiLstm;
  else if (kind == "delex") a.kind = ModelKind::kDelex;
  else throw ConfigError("unknown tagger kind '" + kind + "'");
  a.input_dim = j.value("input_dim", a.input_dim);
  a.lstm_hidden = j.value("lstm_hidden", a.lstm_hidden);
  a.mlp_hidden = j.value("mlp_hidden", a.mlp_hidden);
  a.input_dropout = j.value("input_dropout", a.input_dropout);
  a.seed = j.value("seed", a.seed);
  return a;
}

TaggerModel::TaggerModel(const TaggerArch& arch) : arch_(arch) {
  if (arch.input_dim < 1 || arch.lstm_hidden < 1 || arch.mlp_hidden < 1)
    throw ConfigError("tagger dimensions must be positive");
  if (arch.input_dropout < 0.0 || arch.input_dropout >= 1.0) throw ConfigError("input_dropout must be in [0,1)");
  nn::Rng rng(arch.seed);
  if (arch.kind == ModelKind::kBiLstm) bilstm_ = nn::BiLstm("R.bilstm", arch.input_dim, arch.lstm_hidden, rng);
  head_ = nn::Mlp("E.mlp", {repr_dim(), arch.mlp_hidden, 1}, nn::Activation::kRelu, rng);
}

int TaggerModel::repr_dim() const {
  return arch_.kind == ModelKind::kBiLstm ? 2 * arch_.lstm_hidden : arch_.input_dim;
}

TaggerModel::Forward TaggerModel::forward(nn::Graph& g, std::span<const nn::Matrix* const> feats,
                                          nn::Rng* dropout_rng, bool train_r, bool train_e) {
  Forward f;
  int total = 0;
  for (const nn::Matrix* m : feats) {
    if (m->cols() != arch_.input_dim) throw std::invalid_argument("tagger: feature width mismatch");
    f.lengths.push_back(static_cast<int>(m->rows()));
    total += static_cast<int>(m->rows());
  }
  nn::Matrix stacked(total, arch_.input_dim);
  int off = 0;
  for (const nn::Matrix* m : feats) {
    stacked.middleRows(off, m->rows()) = *m;
    off += static_cast<int>(m->rows());
  }
  nn::Var x = g.input(std::move(stacked));
  if (dropout_rng && arch_.input_dropout > 0.0) x = g.dropout(x, arch_.input_dropout, *dropout_rng);
  f.reprs = arch_.kind == ModelKind::kBiLstm ? bilstm_.forward_batch(g, x, f.lengths, train_r) : x;
  f.logits = head_.forward(g, f.reprs, train_e);
  return f;
}

std::vector<double> TaggerModel::predict_proba(const nn::Matrix& feats) {
  nn::Graph g;
  const nn::Matrix* one[] = {&feats};
  Forward f = forward(g, one, nullptr, false, false);
  const nn::Matrix& z = g.value(f.logits);
  std::vector<double> p(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) p[i] = 1.0 / (1.0 + std::exp(-z(i, 0)));
  return p;
}

std::vector<int> TaggerModel::predict(const nn::Matrix& feats, double threshold) {
  std::vector<int> out;
  for (double p : predict_proba(feats)) out.push_back(p >= threshold ? 1 : 0);
  return out;
}

nn::ParamList TaggerModel::repr_params() {
  nn::ParamList out;
  if (arch_.kind == ModelKind::kBiLstm) bilstm_.collect(out);
  return out;
}

nn::ParamList TaggerModel::head_params() {
  nn::ParamList out;
  head_.collect(out);
  return out;
}

nn::ParamList TaggerModel::params() {
  nn::ParamList out = repr_params();
  for (nn::Parameter* p : head_params()) out.push_back(p);
  return out;
}

void TaggerModel::save(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "model.json") << to_json(arch_).dump(2) << '\n';
  nn::save_params(params(), dir / "params.bin");
}

TaggerModel TaggerModel::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw ConfigError("no tagger checkpoint at " + dir.string());
  TaggerModel m(tagger_arch_from_json(nlohmann::json::parse(in)));
  nn::load_params(m.params(), dir / "params.bin");
  return m;
}

nn::Var pool_sequence(nn::Graph& g, nn::Var token_reprs) {
  if (g.value(token_reprs).rows() == 0) throw std::invalid_argument("pool_sequence: empty sequence");
  return g.mean_rows(token_reprs);
}

nn::Var pool_batch(nn::Graph& g, nn::Var stacked, std::span<const int> lengths) {
  std::vector<nn::Var> rows;
  int off = 0;
  for (int n : lengths) {
    rows.push_back(pool_sequence(g, g.slice_rows(stacked, off, n)));
    off += n;
  }
  return rows.size() == 1 ? rows[0] : g.concat_rows(rows);
}

std::vector<int> verb_baseline(const corpus::SentenceRecord& s, bool include_aux) {
  std::vector<int> out;
  out.reserve(s.tokens.size());
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const auto& pos = s.tokens[i].pos;
    if (!pos)
      throw IntegrityError("token " + std::to_string(i) + " ('" + s.tokens[i].text + "') of " + s.doc_id +
                           " has no POS tag; run a POS tagger over the corpus first");
    out.push_back(*pos == "VERB" || (include_aux && *pos == "AUX") ? 1 : 0);
  }
  return out;
}

}  // namespace eventshift::tagger
