#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Graph records operations as they are evaluated (define-by-run). Each
// operation produces a Var handle; calling backward() on a 1x1 Var
// propagates gradients to every node that depends on a trainable Parameter
// and accumulates them into Parameter::grad. Graphs are cheap and meant to be
// built per sentence or per batch, then discarded.

#include <Eigen/Dense>

#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace eventshift::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Rng = std::mt19937_64;

// A named trainable tensor. Gradients accumulate across backward() calls
// until zero_grad().
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }

  std::string name;
  Matrix value;
  Matrix grad;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  Graph() { nodes_.reserve(256); }

  // Constant leaf; receives no gradient.
  Var input(Matrix m);
  // Leaf bound to a parameter. When trainable is false the parameter's
  // current value is used as a constant and its grad is never touched.
  Var param(Parameter& p, bool trainable = true);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last backward() target with respect to v. Zero-sized
  // when v does not depend on any trainable parameter.
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  // Adds a 1 x cols row vector to every row of a.
  Var add_row(Var a, Var row);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);

  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var gelu(Var a);

  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_cols(Var a, int start, int count);
  Var slice_rows(Var a, int start, int count);
  // Embedding lookup: row i of the result is row indices[i] of table.
  Var gather_rows(Var table, std::span<const int> indices);

  Var softmax_rows(Var a);
  Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-12);
  Var mean_rows(Var a);
  Var sum_all(Var a);

  // Inverted dropout with keep-probability 1-p. Draws one Bernoulli per
  // element from rng.
  Var dropout(Var a, double p, Rng& rng);

  // Fused LSTM cell over a batch of rows. Gate layout in the 4H columns of
  // the weights is [input, forget, cell, output]. Returns B x 2H holding
  // [h | c]; split with slice_cols.
  Var lstm_cell(Var x, Var h_prev, Var c_prev, Var w_ih, Var w_hh, Var bias);

  // Sum over rows of weight[i] * binary cross-entropy(sigmoid(logit[i]),
  // target[i]). logits is n x 1.
  Var bce_with_logits(Var logits, std::span<const double> targets,
                      std::span<const double> weights);
  // Sum over rows of weight[i] * -log softmax(logits[i])[target[i]].
  Var softmax_xent(Var logits, std::span<const int> targets,
                   std::span<const double> weights);

  // Seeds d(loss)/d(loss) = 1 and runs the tape backwards.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Graph&, int)> back;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Var push(Matrix value, bool needs_grad, std::function<void(Graph&, int)> back);
  Matrix& grad_ref(int id);
  const Matrix& out_grad(int id) const { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace eventshift::nn
