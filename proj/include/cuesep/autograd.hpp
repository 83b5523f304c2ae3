// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "cuesep/tensor.hpp"

namespace cuesep {

// A trainable array. `grad` accumulates across Graph::flush_param_grads calls
// until the optimizer clears it.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Owns parameters in registration order. The order is part of the checkpoint
// format, so modules must register deterministically.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Tensor init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t num_tensors() const { return params_.size(); }
  std::size_t num_scalars() const;
  // Scalars in parameters whose name starts with `prefix`.
  std::size_t num_scalars(const std::string& prefix) const;

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

class Graph;

// Handle to a node in a Graph. Cheap to copy; only valid while the Graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* g, int id) : g_(g), id_(id) {}

  bool valid() const { return g_ != nullptr; }
  Graph& graph() const { return *g_; }
  int id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  int dim(int i) const { return value().dim(i); }
  bool needs_grad() const;

 private:
  Graph* g_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
// creation order is a valid topological order for backward().
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor t);
  Var input(Tensor t);
  // Leaf bound to `p`. Repeated calls within one graph return the same node.
  Var param(Parameter& p);

  // Appends an op result. `fn` is dropped when no parent needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }

  // Gradient buffer for `v`, allocated on first use; nullptr if `v` takes no
  // gradient. Op backward functions accumulate into it.
  Tensor* grad_buffer(Var v);
  // Gradient after backward(); a zero tensor if none flowed.
  Tensor grad(Var v) const;

  // Seeds d(loss)/d(loss) = 1. `loss` must hold a single element.
  void backward(Var loss);
  // Adds leaf gradients into Parameter::grad.
  void flush_param_grads();

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  bool grad_enabled_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  std::vector<std::pair<Parameter*, int>> bound_params_;
};

inline const Tensor& Var::value() const { return g_->value(*this); }
inline bool Var::needs_grad() const { return g_->needs_grad(*this); }

}  // namespace cuesep
