// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cuesep/autograd.hpp"

#include <algorithm>

namespace cuesep {

Parameter& ParamStore::add(const std::string& name, Tensor init) {
  require(!by_name_.count(name), "duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Tensor(init.shape());
  p->value = std::move(init);
  Parameter& ref = *p;
  by_name_[name] = p.get();
  params_.push_back(std::move(p));
  return ref;
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParamStore::num_scalars() const { return num_scalars(""); }

std::size_t ParamStore::num_scalars(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p->name.compare(0, prefix.size(), prefix) == 0) n += p->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

Var Graph::constant(Tensor t) {
  nodes_.push_back(Node{std::move(t), {}, false, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::input(Tensor t) {
  nodes_.push_back(Node{std::move(t), {}, grad_enabled_, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Var v = input(p.value);
  param_nodes_[&p] = v.id();
  bound_params_.emplace_back(&p, v.id());
  return v;
}

Var Graph::record(Tensor value, std::initializer_list<Var> parents,
                  BackwardFn fn) {
  bool needs = false;
  if (grad_enabled_)
    for (const Var& p : parents) needs = needs || (p.valid() && p.needs_grad());
  nodes_.push_back(Node{std::move(value), {}, needs,
                        needs ? std::move(fn) : BackwardFn{}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::record(Tensor value, const std::vector<Var>& parents,
                  BackwardFn fn) {
  bool needs = false;
  if (grad_enabled_)
    for (const Var& p : parents) needs = needs || (p.valid() && p.needs_grad());
  nodes_.push_back(Node{std::move(value), {}, needs,
                        needs ? std::move(fn) : BackwardFn{}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor* Graph::grad_buffer(Var v) {
  if (!v.valid()) return nullptr;
  Node& n = nodes_[v.id()];
  if (!n.needs_grad) return nullptr;
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

void Graph::backward(Var loss) {
  require(grad_enabled_, "backward on a graph built without gradients");
  require(loss.value().size() == 1, "backward expects a scalar loss");
  Tensor* seed = grad_buffer(loss);
  if (!seed) return;
  (*seed)[0] += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
    // Interior gradients are not needed after propagation.
    n.backward = nullptr;
  }
}

void Graph::flush_param_grads() {
  for (auto& [p, id] : bound_params_) {
    const Tensor& g = nodes_[id].grad;
    if (g.empty()) continue;
    for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
  }
}

}  // namespace cuesep
