#include "eventshift/nn/layers.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eventshift::nn {

void uniform_init(Matrix& m, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng)
    : weight_(name + ".weight", Matrix(in, out)), bias_(name + ".bias", Matrix(1, out)) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  uniform_init(weight_.value, bound, rng);
  uniform_init(bias_.value, bound, rng);
}

Var Linear::forward(Graph& g, Var x, bool trainable) {
  Var w = g.param(weight_, trainable);
  Var b = g.param(bias_, trainable);
  return g.add_row(g.matmul(x, w), b);
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

Mlp::Mlp(const std::string& name, const std::vector<int>& dims, Activation act, Rng& rng)
    : act_(act) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    layers_.emplace_back(name + ".layer" + std::to_string(i), dims[i], dims[i + 1], rng);
}

Var Mlp::forward(Graph& g, Var x, bool trainable) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(g, x, trainable);
    if (i + 1 < layers_.size()) x = act_ == Activation::kRelu ? g.relu(x) : g.tanh(x);
  }
  return x;
}

void Mlp::collect(ParamList& out) {
  for (Linear& l : layers_) l.collect(out);
}

Lstm::Lstm(const std::string& name, int in, int hidden, Rng& rng)
    : w_ih_(name + ".w_ih", Matrix(in, 4 * hidden)),
      w_hh_(name + ".w_hh", Matrix(hidden, 4 * hidden)),
      bias_(name + ".bias", Matrix(1, 4 * hidden)) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  uniform_init(w_ih_.value, bound, rng);
  uniform_init(w_hh_.value, bound, rng);
  uniform_init(bias_.value, bound, rng);
}

LstmState Lstm::zero_state(Graph& g, int batch) const {
  return {g.input(Matrix::Zero(batch, hidden())), g.input(Matrix::Zero(batch, hidden()))};
}

LstmState Lstm::step(Graph& g, Var x, const LstmState& prev, bool trainable) {
  return step(g, bind(g, trainable), x, prev);
}

Lstm::Bound Lstm::bind(Graph& g, bool trainable) {
  return {g.param(w_ih_, trainable), g.param(w_hh_, trainable), g.param(bias_, trainable)};
}

LstmState Lstm::step(Graph& g, const Bound& w, Var x, const LstmState& prev) const {
  Var hc = g.lstm_cell(x, prev.h, prev.c, w.w_ih, w.w_hh, w.bias);
  const int H = hidden();
  return {g.slice_cols(hc, 0, H), g.slice_cols(hc, H, H)};
}

Var Lstm::run_sequence(Graph& g, Var sequence, bool reverse, bool trainable) {
  const int n = static_cast<int>(g.value(sequence).rows());
  if (n == 0) throw std::invalid_argument("Lstm: empty sequence");
  Var wi = g.param(w_ih_, trainable);
  Var wh = g.param(w_hh_, trainable);
  Var b = g.param(bias_, trainable);
  const int H = hidden();
  LstmState s = zero_state(g, 1);
  std::vector<Var> outs(n);
  for (int k = 0; k < n; ++k) {
    const int t = reverse ? n - 1 - k : k;
    Var hc = g.lstm_cell(g.slice_rows(sequence, t, 1), s.h, s.c, wi, wh, b);
    s = {g.slice_cols(hc, 0, H), g.slice_cols(hc, H, H)};
    outs[t] = s.h;
  }
  return g.concat_rows(outs);
}

Var Lstm::run_batch(Graph& g, Var rows, std::span<const int> lengths, bool reverse, bool trainable) {
  const int B = static_cast<int>(lengths.size());
  if (B == 0) throw std::invalid_argument("Lstm: empty batch");
  std::vector<int> offset(B);
  int total = 0, T = 0;
  for (int b = 0; b < B; ++b) {
    if (lengths[b] <= 0) throw std::invalid_argument("Lstm: empty sequence in batch");
    offset[b] = total;
    total += lengths[b];
    T = std::max(T, lengths[b]);
  }
  if (g.value(rows).rows() != total) throw std::invalid_argument("Lstm: rows do not match lengths");
  Var wi = g.param(w_ih_, trainable);
  Var wh = g.param(w_hh_, trainable);
  Var bias = g.param(bias_, trainable);
  const int H = hidden();
  LstmState s = zero_state(g, B);
  std::vector<Var> outs(T);
  std::vector<int> idx(B);
  for (int t = 0; t < T; ++t) {
    // Finished sequences read any valid row; their later outputs are dropped.
    for (int b = 0; b < B; ++b)
      idx[b] = t < lengths[b] ? offset[b] + (reverse ? lengths[b] - 1 - t : t) : offset[b];
    Var hc = g.lstm_cell(g.gather_rows(rows, idx), s.h, s.c, wi, wh, bias);
    s = {g.slice_cols(hc, 0, H), g.slice_cols(hc, H, H)};
    outs[t] = s.h;
  }
  Var stacked = g.concat_rows(outs);
  std::vector<int> back(total);
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < lengths[b]; ++i) {
      const int t = reverse ? lengths[b] - 1 - i : i;
      back[offset[b] + i] = t * B + b;
    }
  return g.gather_rows(stacked, back);
}

void Lstm::collect(ParamList& out) {
  out.push_back(&w_ih_);
  out.push_back(&w_hh_);
  out.push_back(&bias_);
}

BiLstm::BiLstm(const std::string& name, int in, int hidden, Rng& rng)
    : fwd_(name + ".fwd", in, hidden, rng), bwd_(name + ".bwd", in, hidden, rng) {}

Var BiLstm::forward(Graph& g, Var sequence, bool trainable) {
  Var f = fwd_.run_sequence(g, sequence, false, trainable);
  Var b = bwd_.run_sequence(g, sequence, true, trainable);
  const Var parts[] = {f, b};
  return g.concat_cols(parts);
}

Var BiLstm::forward_batch(Graph& g, Var rows, std::span<const int> lengths, bool trainable) {
  Var f = fwd_.run_batch(g, rows, lengths, false, trainable);
  Var b = bwd_.run_batch(g, rows, lengths, true, trainable);
  const Var parts[] = {f, b};
  return g.concat_cols(parts);
}

void BiLstm::collect(ParamList& out) {
  fwd_.collect(out);
  bwd_.collect(out);
}

}  // namespace eventshift::nn
