// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Central finite-difference oracle for analytic gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cuesep/autograd.hpp"
#include "cuesep/ops.hpp"

namespace cuesep::testing {

using GraphFn = std::function<Var(Graph&, const std::vector<Var>&)>;

struct GradReport {
  // (tensor name, ||analytic - numeric|| / max(||analytic||, ||numeric||))
  std::vector<std::pair<std::string, double>> rel_errors;

  double worst() const {
    double w = 0.0;
    for (const auto& e : rel_errors) w = std::max(w, e.second);
    return w;
  }
  std::string worst_name() const {
    std::string n;
    double w = -1.0;
    for (const auto& e : rel_errors)
      if (e.second > w) w = e.second, n = e.first;
    return n;
  }
};

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(s));
  std::normal_distribution<double> d(0.0, scale);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

inline double relative_error(const Tensor& a, const Tensor& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  // Parameters the output is invariant to (e.g. a bias shared by every
  // softmax logit) have a true gradient of zero; the floor keeps rounding
  // noise in both estimates from reading as a large relative error.
  const double denom = std::max(std::sqrt(std::max(na, nn)), 1e-6);
  return std::sqrt(diff) / denom;
}

// Reduces f's output with fixed random weights to a scalar, then compares
// backprop against central differences of every input and parameter element.
inline GradReport check_gradients(const GraphFn& f, std::vector<Tensor> inputs,
                                  ParamStore* params, std::uint64_t seed = 1,
                                  double step = 1e-4) {
  std::mt19937_64 rng(seed);
  Tensor probe;

  auto forward = [&]() {
    Graph g(false);
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.constant(t));
    return ops::dot_const(f(g, vars), probe).value()[0];
  };

  GradReport report;
  std::vector<Tensor> analytic;
  {
    Graph g(true);
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.input(t));
    Var y = f(g, vars);
    probe = random_tensor(y.shape(), rng);
    Var loss = ops::dot_const(y, probe);
    if (params) params->zero_grad();
    g.backward(loss);
    g.flush_param_grads();
    for (const Var& v : vars) analytic.push_back(g.grad(v));
  }

  auto numeric_for = [&](std::vector<double>& slot) {
    Tensor num(Shape{static_cast<int>(slot.size())});
    for (std::size_t i = 0; i < slot.size(); ++i) {
      const double keep = slot[i];
      slot[i] = keep + step;
      const double up = forward();
      slot[i] = keep - step;
      const double down = forward();
      slot[i] = keep;
      num[i] = (up - down) / (2.0 * step);
    }
    return num;
  };

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor num = numeric_for(inputs[k].storage());
    report.rel_errors.emplace_back("input" + std::to_string(k),
                                   relative_error(analytic[k].reshaped(num.shape()), num));
  }
  if (params) {
    for (Parameter* p : params->all()) {
      Tensor num = numeric_for(p->value.storage());
      report.rel_errors.emplace_back(p->name,
                                     relative_error(p->grad.reshaped(num.shape()), num));
    }
  }
  return report;
}

}  // namespace cuesep::testing
