#pragma once

#include "eventshift/nn/graph.h"

#include <string>
#include <vector>

namespace eventshift::nn {

using ParamList = std::vector<Parameter*>;

// Fills m with U(-bound, bound).
void uniform_init(Matrix& m, double bound, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng);

  Var forward(Graph& g, Var x, bool trainable = true);
  void collect(ParamList& out);
  int in_dim() const { return static_cast<int>(weight_.value.rows()); }
  int out_dim() const { return static_cast<int>(weight_.value.cols()); }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;  // in x out
  Parameter bias_;    // 1 x out
};

enum class Activation { kRelu, kTanh };

// Stack of Linear layers with an activation between consecutive layers and
// none after the last.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const std::vector<int>& dims, Activation act, Rng& rng);

  Var forward(Graph& g, Var x, bool trainable = true);
  void collect(ParamList& out);
  std::vector<Linear>& layers() { return layers_; }

 private:
  std::vector<Linear> layers_;
  Activation act_ = Activation::kRelu;
};

struct LstmState {
  Var h;
  Var c;
};

class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, int in, int hidden, Rng& rng);

  int hidden() const { return static_cast<int>(w_hh_.value.rows()); }
  int in_dim() const { return static_cast<int>(w_ih_.value.rows()); }

  LstmState zero_state(Graph& g, int batch) const;
  // One step over a batch of rows.
  LstmState step(Graph& g, Var x, const LstmState& prev, bool trainable = true);
  // Parameters bound once into a graph, for loops over many steps.
  struct Bound {
    Var w_ih, w_hh, bias;
  };
  Bound bind(Graph& g, bool trainable = true);
  LstmState step(Graph& g, const Bound& w, Var x, const LstmState& prev) const;
  // Runs over the rows of a sentence matrix (n x in), one row per time step.
  // Returns n x hidden outputs in input order.
  Var run_sequence(Graph& g, Var sequence, bool reverse, bool trainable = true);
  // Runs several sequences at once. rows stacks the sequences (sum of
  // lengths x in); the result stacks their outputs in the same order.
  Var run_batch(Graph& g, Var rows, std::span<const int> lengths, bool reverse, bool trainable = true);
  void collect(ParamList& out);

 private:
  Parameter w_ih_;  // in x 4H
  Parameter w_hh_;  // H x 4H
  Parameter bias_;  // 1 x 4H
};

// Single-layer bidirectional LSTM: n x in -> n x 2H, [forward | backward].
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(const std::string& name, int in, int hidden, Rng& rng);

  Var forward(Graph& g, Var sequence, bool trainable = true);
  // Batched form over stacked sequences, see Lstm::run_batch.
  Var forward_batch(Graph& g, Var rows, std::span<const int> lengths, bool trainable = true);
  void collect(ParamList& out);
  int output_dim() const { return 2 * fwd_.hidden(); }

 private:
  Lstm fwd_;
  Lstm bwd_;
};

}  // namespace eventshift::nn
