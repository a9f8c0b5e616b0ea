#pragma once

#include "eventshift/nn/layers.h"

#include <unordered_map>

namespace eventshift::nn {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // Applies one update from the accumulated grads of the bound parameters.
  // Grads are left untouched; callers zero them.
  virtual void step() = 0;
  virtual void set_lr(double lr) = 0;
  virtual double lr() const = 0;
  const ParamList& params() const { return params_; }
  void zero_grad();

 protected:
  explicit Optimizer(ParamList params) : params_(std::move(params)) {}
  ParamList params_;
};

class Sgd : public Optimizer {
 public:
  Sgd(ParamList params, double lr) : Optimizer(std::move(params)), lr_(lr) {}
  void step() override;
  void set_lr(double lr) override { lr_ = lr; }
  double lr() const override { return lr_; }

 private:
  double lr_;
};

class Adam : public Optimizer {
 public:
  Adam(ParamList params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step() override;
  void set_lr(double lr) override { lr_ = lr; }
  double lr() const override { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Rescales grads so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);

double grad_norm(const ParamList& params);
bool grads_finite(const ParamList& params);

}  // namespace eventshift::nn
