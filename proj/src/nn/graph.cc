#include "eventshift/nn/graph.h"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace eventshift::nn {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var Graph::push(Matrix value, bool needs_grad, std::function<void(Graph&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Graph::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::input(Matrix m) { return push(std::move(m), false, nullptr); }

Var Graph::param(Parameter& p, bool trainable) {
  if (!trainable) return input(p.value);
  Var v = push(p.value, true, [](Graph& g, int self) {
    Node& n = g.nodes_[self];
    n.param->grad += n.grad;
  });
  nodes_[v.id].param = &p;
  return v;
}

Var Graph::matmul(Var a, Var b) {
  const bool ng = needs_grad(a) || needs_grad(b);
  if (value(a).cols() != value(b).rows()) throw std::invalid_argument("matmul: inner dims");
  return push(value(a) * value(b), ng, [a, b](Graph& g, int self) {
    const Matrix& go = g.out_grad(self);
    if (g.needs_grad(a)) g.grad_ref(a.id).noalias() += go * g.value(b).transpose();
    if (g.needs_grad(b)) g.grad_ref(b.id).noalias() += g.value(a).transpose() * go;
  });
}

Var Graph::transpose(Var a) {
  return push(value(a).transpose(), needs_grad(a), [a](Graph& g, int self) {
    g.grad_ref(a.id) += g.out_grad(self).transpose();
  });
}

Var Graph::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), needs_grad(a) || needs_grad(b), [a, b](Graph& g, int self) {
    if (g.needs_grad(a)) g.grad_ref(a.id) += g.out_grad(self);
    if (g.needs_grad(b)) g.grad_ref(b.id) += g.out_grad(self);
  });
}

Var Graph::sub(Var a, Var b) {
  check_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), needs_grad(a) || needs_grad(b), [a, b](Graph& g, int self) {
    if (g.needs_grad(a)) g.grad_ref(a.id) += g.out_grad(self);
    if (g.needs_grad(b)) g.grad_ref(b.id) -= g.out_grad(self);
  });
}

Var Graph::add_row(Var a, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols())
    throw std::invalid_argument("add_row: bias shape");
  Matrix out = value(a).rowwise() + value(row).row(0);
  return push(std::move(out), needs_grad(a) || needs_grad(row), [a, row](Graph& g, int self) {
    const Matrix& go = g.out_grad(self);
    if (g.needs_grad(a)) g.grad_ref(a.id) += go;
    if (g.needs_grad(row)) g.grad_ref(row.id) += go.colwise().sum();
  });
}

Var Graph::mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "mul");
  return push(value(a).cwiseProduct(value(b)), needs_grad(a) || needs_grad(b),
              [a, b](Graph& g, int self) {
                const Matrix& go = g.out_grad(self);
                if (g.needs_grad(a)) g.grad_ref(a.id) += go.cwiseProduct(g.value(b));
                if (g.needs_grad(b)) g.grad_ref(b.id) += go.cwiseProduct(g.value(a));
              });
}

Var Graph::scale(Var a, double s) {
  return push(value(a) * s, needs_grad(a), [a, s](Graph& g, int self) {
    g.grad_ref(a.id) += g.out_grad(self) * s;
  });
}

Var Graph::sigmoid(Var a) {
  Matrix out = value(a).unaryExpr(&stable_sigmoid);
  return push(std::move(out), needs_grad(a), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    g.grad_ref(a.id) += g.out_grad(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
  });
}

Var Graph::tanh(Var a) {
  Matrix out = value(a).array().tanh().matrix();
  return push(std::move(out), needs_grad(a), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    g.grad_ref(a.id) += g.out_grad(self).cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

Var Graph::relu(Var a) {
  Matrix out = value(a).cwiseMax(0.0);
  return push(std::move(out), needs_grad(a), [a](Graph& g, int self) {
    const Matrix& x = g.value(a);
    g.grad_ref(a.id) += (x.array() > 0.0).cast<double>().matrix().cwiseProduct(g.out_grad(self));
  });
}

Var Graph::gelu(Var a) {
  // tanh approximation
  Matrix out = value(a).unaryExpr([](double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
  });
  return push(std::move(out), needs_grad(a), [a](Graph& g, int self) {
    Matrix d = g.value(a).unaryExpr([](double x) {
      const double u = kGeluC * (x + 0.044715 * x * x * x);
      const double t = std::tanh(u);
      const double du = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
      return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
    });
    g.grad_ref(a.id) += d.cwiseProduct(g.out_grad(self));
  });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool ng = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += value(p).cols();
    ng = ng || needs_grad(p);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return push(std::move(out), ng, [ids](Graph& g, int self) {
    Eigen::Index at = 0;
    for (Var p : ids) {
      const Eigen::Index c = g.value(p).cols();
      if (g.needs_grad(p)) g.grad_ref(p.id) += g.out_grad(self).middleCols(at, c);
      at += c;
    }
  });
}

Var Graph::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  const Eigen::Index cols = value(parts[0]).cols();
  Eigen::Index rows = 0;
  bool ng = false;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw std::invalid_argument("concat_rows: col mismatch");
    rows += value(p).rows();
    ng = ng || needs_grad(p);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleRows(at, value(p).rows()) = value(p);
    at += value(p).rows();
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return push(std::move(out), ng, [ids](Graph& g, int self) {
    Eigen::Index at = 0;
    for (Var p : ids) {
      const Eigen::Index r = g.value(p).rows();
      if (g.needs_grad(p)) g.grad_ref(p.id) += g.out_grad(self).middleRows(at, r);
      at += r;
    }
  });
}

Var Graph::slice_cols(Var a, int start, int count) {
  if (start < 0 || count < 0 || start + count > value(a).cols())
    throw std::invalid_argument("slice_cols: out of range");
  return push(value(a).middleCols(start, count), needs_grad(a), [a, start, count](Graph& g, int self) {
    g.grad_ref(a.id).middleCols(start, count) += g.out_grad(self);
  });
}

Var Graph::slice_rows(Var a, int start, int count) {
  if (start < 0 || count < 0 || start + count > value(a).rows())
    throw std::invalid_argument("slice_rows: out of range");
  return push(value(a).middleRows(start, count), needs_grad(a), [a, start, count](Graph& g, int self) {
    g.grad_ref(a.id).middleRows(start, count) += g.out_grad(self);
  });
}

Var Graph::gather_rows(Var table, std::span<const int> indices) {
  const Matrix& t = value(table);
  Matrix out(static_cast<Eigen::Index>(indices.size()), t.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= t.rows()) throw std::out_of_range("gather_rows: index");
    out.row(static_cast<Eigen::Index>(i)) = t.row(indices[i]);
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return push(std::move(out), needs_grad(table), [table, idx](Graph& g, int self) {
    Matrix& gt = g.grad_ref(table.id);
    const Matrix& go = g.out_grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i) gt.row(idx[i]) += go.row(static_cast<Eigen::Index>(i));
  });
}

Var Graph::softmax_rows(Var a) {
  Matrix out = value(a);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return push(std::move(out), needs_grad(a), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    const Matrix& go = g.out_grad(self);
    Matrix& ga = g.grad_ref(a.id);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = y.row(r).dot(go.row(r));
      ga.row(r) += y.row(r).cwiseProduct((go.row(r).array() - dot).matrix());
    }
  });
}

Var Graph::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  const Matrix& xv = value(x);
  const Eigen::Index n = xv.cols();
  Matrix xhat(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = ((xv.row(r).array() - mean) * inv_std(r)).matrix();
  }
  Matrix out = (xhat.array().rowwise() * value(gamma).row(0).array()).matrix();
  out.rowwise() += value(beta).row(0);
  const bool ng = needs_grad(x) || needs_grad(gamma) || needs_grad(beta);
  return push(std::move(out), ng, [x, gamma, beta, xhat, inv_std](Graph& g, int self) {
    const Matrix& go = g.out_grad(self);
    if (g.needs_grad(gamma)) g.grad_ref(gamma.id) += go.cwiseProduct(xhat).colwise().sum();
    if (g.needs_grad(beta)) g.grad_ref(beta.id) += go.colwise().sum();
    if (g.needs_grad(x)) {
      const double n = static_cast<double>(xhat.cols());
      Matrix dxhat = (go.array().rowwise() * g.value(gamma).row(0).array()).matrix();
      Matrix& gx = g.grad_ref(x.id);
      for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
        const double s1 = dxhat.row(r).sum();
        const double s2 = dxhat.row(r).dot(xhat.row(r));
        gx.row(r) += (inv_std(r) / n) *
                     (n * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2).matrix();
      }
    }
  });
}

Var Graph::mean_rows(Var a) {
  const double rows = static_cast<double>(value(a).rows());
  if (rows == 0) throw std::invalid_argument("mean_rows: empty");
  return push(value(a).colwise().mean(), needs_grad(a), [a, rows](Graph& g, int self) {
    g.grad_ref(a.id).rowwise() += g.out_grad(self).row(0) / rows;
  });
}

Var Graph::sum_all(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), needs_grad(a), [a](Graph& g, int self) {
    g.grad_ref(a.id).array() += g.out_grad(self)(0, 0);
  });
}

Var Graph::dropout(Var a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const Matrix& av = value(a);
  Matrix mask(av.rows(), av.cols());
  const double inv = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < mask.cols(); ++j)
    for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(rng) ? inv : 0.0;
  Matrix out = av.cwiseProduct(mask);
  return push(std::move(out), needs_grad(a), [a, mask](Graph& g, int self) {
    g.grad_ref(a.id) += g.out_grad(self).cwiseProduct(mask);
  });
}

Var Graph::lstm_cell(Var x, Var h_prev, Var c_prev, Var w_ih, Var w_hh, Var bias) {
  const Matrix& cp = value(c_prev);
  const Eigen::Index H = cp.cols();
  if (value(w_ih).cols() != 4 * H || value(w_hh).cols() != 4 * H || value(bias).cols() != 4 * H)
    throw std::invalid_argument("lstm_cell: gate width");
  Matrix pre = value(x) * value(w_ih);
  pre.noalias() += value(h_prev) * value(w_hh);
  pre.rowwise() += value(bias).row(0);

  const Eigen::Index B = pre.rows();
  Matrix gi = pre.middleCols(0, H).unaryExpr(&stable_sigmoid);
  Matrix gf = pre.middleCols(H, H).unaryExpr(&stable_sigmoid);
  Matrix gg = pre.middleCols(2 * H, H).array().tanh().matrix();
  Matrix go = pre.middleCols(3 * H, H).unaryExpr(&stable_sigmoid);
  Matrix c = gf.cwiseProduct(cp) + gi.cwiseProduct(gg);
  Matrix tc = c.array().tanh().matrix();
  Matrix h = go.cwiseProduct(tc);

  Matrix out(B, 2 * H);
  out.leftCols(H) = h;
  out.rightCols(H) = c;
  const bool ng = needs_grad(x) || needs_grad(h_prev) || needs_grad(c_prev) ||
                  needs_grad(w_ih) || needs_grad(w_hh) || needs_grad(bias);
  return push(std::move(out), ng,
              [=](Graph& g, int self) {
                const Matrix& gout = g.out_grad(self);
                const Matrix dh = gout.leftCols(H);
                Matrix dc = gout.rightCols(H);
                dc += dh.cwiseProduct(go).cwiseProduct((1.0 - tc.array().square()).matrix());
                Matrix dpre(B, 4 * H);
                dpre.middleCols(0, H) = dc.cwiseProduct(gg).cwiseProduct(
                    gi.cwiseProduct((1.0 - gi.array()).matrix()));
                dpre.middleCols(H, H) = dc.cwiseProduct(g.value(c_prev)).cwiseProduct(
                    gf.cwiseProduct((1.0 - gf.array()).matrix()));
                dpre.middleCols(2 * H, H) =
                    dc.cwiseProduct(gi).cwiseProduct((1.0 - gg.array().square()).matrix());
                dpre.middleCols(3 * H, H) = dh.cwiseProduct(tc).cwiseProduct(
                    go.cwiseProduct((1.0 - go.array()).matrix()));
                if (g.needs_grad(c_prev)) g.grad_ref(c_prev.id) += dc.cwiseProduct(gf);
                if (g.needs_grad(x)) g.grad_ref(x.id).noalias() += dpre * g.value(w_ih).transpose();
                if (g.needs_grad(h_prev))
                  g.grad_ref(h_prev.id).noalias() += dpre * g.value(w_hh).transpose();
                if (g.needs_grad(w_ih)) g.grad_ref(w_ih.id).noalias() += g.value(x).transpose() * dpre;
                if (g.needs_grad(w_hh))
                  g.grad_ref(w_hh.id).noalias() += g.value(h_prev).transpose() * dpre;
                if (g.needs_grad(bias)) g.grad_ref(bias.id) += dpre.colwise().sum();
              });
}

Var Graph::bce_with_logits(Var logits, std::span<const double> targets,
                           std::span<const double> weights) {
  const Matrix& z = value(logits);
  if (z.cols() != 1 || static_cast<std::size_t>(z.rows()) != targets.size() ||
      targets.size() != weights.size())
    throw std::invalid_argument("bce_with_logits: shape");
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double t = targets[i];
    // -(t log s(z) + (1-t) log(1-s(z))) = softplus(z) - t z
    total += weights[i] * (softplus(z(i, 0)) - t * z(i, 0));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  std::vector<double> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return push(std::move(out), needs_grad(logits), [logits, t, w](Graph& g, int self) {
    const double go = g.out_grad(self)(0, 0);
    const Matrix& z = g.value(logits);
    Matrix& gz = g.grad_ref(logits.id);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      gz(i, 0) += go * w[i] * (stable_sigmoid(z(i, 0)) - t[i]);
  });
}

Var Graph::softmax_xent(Var logits, std::span<const int> targets, std::span<const double> weights) {
  const Matrix& z = value(logits);
  if (static_cast<std::size_t>(z.rows()) != targets.size() || targets.size() != weights.size())
    throw std::invalid_argument("softmax_xent: shape");
  Matrix probs(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    probs.row(r) = (z.row(r).array() - m).exp().matrix();
    const double s = probs.row(r).sum();
    probs.row(r) /= s;
    const int t = targets[r];
    if (t < 0 || t >= z.cols()) throw std::out_of_range("softmax_xent: target");
    if (weights[r] != 0.0) total += weights[r] * (m + std::log(s) - z(r, t));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  std::vector<int> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return push(std::move(out), needs_grad(logits), [logits, t, w, probs](Graph& g, int self) {
    const double go = g.out_grad(self)(0, 0);
    Matrix& gz = g.grad_ref(logits.id);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      if (w[r] == 0.0) continue;
      gz.row(r) += (go * w[r]) * probs.row(r);
      gz(r, t[r]) -= go * w[r];
    }
  });
}

void Graph::backward(Var loss) {
  Node& root = nodes_[loss.id];
  if (root.value.rows() != 1 || root.value.cols() != 1)
    throw std::invalid_argument("backward: loss must be 1x1");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!root.needs_grad) return;
  grad_ref(loss.id)(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.grad.size() != 0 && n.back) n.back(*this, i);
  }
}

}  // namespace eventshift::nn
