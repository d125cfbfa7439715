#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "armrl/autodiff.hpp"
#include "armrl/network.hpp"
#include "armrl/random.hpp"

namespace gradcheck {

using armrl::nn::Tape;
using armrl::nn::Tensor;
using armrl::nn::Var;

/// Builds a scalar from leaves holding the given inputs.
using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline Tensor random_tensor(const armrl::nn::Shape& shape, armrl::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = armrl::uniform_real(rng, lo, hi);
  return t;
}

/// ||a - n|| / (||a|| + ||n||) for one gradient pair.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nn);
  return denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

inline double evaluate(const Builder& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.constant(t));
  return f(tape, leaves).value().item();
}

/// Worst relative error between backward() and central differences over all
/// inputs.
inline double check(const Builder& f, std::vector<Tensor> inputs, double h = 1e-6) {
  std::vector<Tensor> analytic;
  for (const auto& t : inputs) analytic.emplace_back(t.shape());
  {
    Tape tape;
    std::vector<Var> leaves;
    for (std::size_t i = 0; i < inputs.size(); ++i) leaves.push_back(tape.leaf(inputs[i], &analytic[i]));
    tape.backward(f(tape, leaves));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<double> numeric(inputs[i].size());
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double x = inputs[i][k];
      inputs[i][k] = x + h;
      const double up = evaluate(f, inputs);
      inputs[i][k] = x - h;
      const double down = evaluate(f, inputs);
      inputs[i][k] = x;
      numeric[k] = (up - down) / (2.0 * h);
    }
    worst = std::max(worst, relative_error(analytic[i].values(), numeric));
  }
  return worst;
}

/// Same check against a network's parameters; `loss` must run the forward
/// pass with gradient tracking.
inline double check_network(armrl::nn::Network& net, const std::function<Var(Tape&, const armrl::nn::Network&)>& loss,
                            double h = 1e-6) {
  net.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape, net));
  }
  auto value = [&] {
    Tape tape;
    return loss(tape, net).value().item();
  };
  double worst = 0.0;
  for (auto& p : net.parameters()) {
    std::vector<double> numeric(p.value.size());
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double x = p.value[k];
      p.value[k] = x + h;
      const double up = value();
      p.value[k] = x - h;
      const double down = value();
      p.value[k] = x;
      numeric[k] = (up - down) / (2.0 * h);
    }
    worst = std::max(worst, relative_error(p.grad.values(), numeric));
  }
  return worst;
}

}  // namespace gradcheck
