#pragma once

// Central finite differences against Graph::backward for test use.

#include "eventshift/nn/graph.h"
#include "eventshift/nn/layers.h"

#include <algorithm>
#include <cmath>
#include <functional>

namespace eventshift::testing {

// loss_fn builds a fresh graph over params and returns the scalar loss value
// (optionally running backward when `backward` is true).
using LossFn = std::function<double(bool backward)>;

// Max relative error between analytic and numeric gradients over every
// parameter entry.
inline double max_grad_rel_error(const nn::ParamList& params, const LossFn& loss_fn, double h = 1e-5) {
  for (nn::Parameter* p : params) p->zero_grad();
  loss_fn(true);
  double worst = 0.0;
  for (nn::Parameter* p : params) {
    const nn::Matrix analytic = p->grad;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + h;
      const double up = loss_fn(false);
      p->value.data()[i] = orig - h;
      const double down = loss_fn(false);
      p->value.data()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace eventshift::testing
