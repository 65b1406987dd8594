#include "ilnet/numerics/tape.hpp"

#include "ilnet/errors.hpp"

namespace ilnet {

const DenseArray& Var::value() const {
  if (tape_ == nullptr) throw StateError("value() on an empty Var");
  return tape_->value(id_);
}

Var Tape::constant(DenseArray value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  if (bound_store_ != nullptr && bound_store_ != &store) {
    throw StateError("a tape can only reference one parameter store");
  }
  bound_store_ = &store;
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return Var(this, it->second);
  const std::size_t idx = store.index_of(name);
  Node n;
  n.op = "param";
  n.external = &store.entries()[idx].value;
  n.requires_grad = true;
  n.param_index = static_cast<long>(idx);
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(name, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, DenseArray value, std::initializer_list<Var> inputs, Backward fn) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape_ != this) throw StateError(std::string("input of ") + op + " belongs to another tape");
    needs = needs || nodes_[v.id_].requires_grad;
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, DenseArray value, const std::vector<Var>& inputs, Backward fn) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape_ != this) throw StateError(std::string("input of ") + op + " belongs to another tape");
    needs = needs || nodes_[v.id_].requires_grad;
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const DenseArray& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external != nullptr ? *n.external : n.value;
}

DenseArray& Tape::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.has_grad) {
    n.grad = DenseArray(value(id).shape());
    n.has_grad = true;
  }
  return n.grad;
}

const DenseArray* Tape::grad_if_any(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.has_grad ? &n.grad : nullptr;
}

void Tape::replay(const Var& loss) {
  if (consumed_) throw StateError("backward() called twice on the same tape; run a new forward pass");
  if (loss.tape_ != this) throw StateError("loss belongs to another tape");
  if (value(loss.id_).size() != 1) {
    throw DimensionError("backward() needs a single-element loss, got " + shape_str(value(loss.id_).shape()));
  }
  consumed_ = true;
  if (!nodes_[loss.id_].requires_grad) return;
  grad(loss.id_)[0] = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, i);
  }
}

void Tape::backward(const Var& loss, GradBuffer& sink) {
  replay(loss);
  for (const Node& n : nodes_) {
    if (n.param_index < 0 || !n.has_grad) continue;
    DenseArray& dst = sink[static_cast<std::size_t>(n.param_index)];
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += n.grad[j];
  }
}

void Tape::backward(const Var& loss, ParamStore& store) {
  if (bound_store_ != nullptr && bound_store_ != &store) {
    throw StateError("backward() into a store the tape was not built from");
  }
  replay(loss);
  for (const Node& n : nodes_) {
    if (n.param_index < 0 || !n.has_grad) continue;
    DenseArray& dst = store.entries()[static_cast<std::size_t>(n.param_index)].grad;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += n.grad[j];
  }
}

std::optional<std::string> Tape::first_non_finite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!value(i).all_finite()) return std::string(nodes_[i].op) + "#" + std::to_string(i);
  }
  return std::nullopt;
}

}  // namespace ilnet
