#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ilnet/numerics/dense_array.hpp"
#include "ilnet/numerics/param_store.hpp"

namespace ilnet {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const DenseArray& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  friend class Tape;

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Record of executed differentiable operations. Adjoints are replayed in the
/// exact reverse of recording order. A tape belongs to one thread at a time and
/// can be replayed once.
class Tape {
 public:
  /// Adjoint rule of one node: reads grad(self), accumulates into its inputs.
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(DenseArray value);
  /// Leaf bound to a store entry. Repeated calls with the same name return the
  /// same node; the value is referenced, not copied.
  Var param(const ParamStore& store, const std::string& name);

  /// Appends an operation node. `fn` is dropped when no input needs a gradient.
  Var record(const char* op, DenseArray value, std::initializer_list<Var> inputs, Backward fn);
  Var record(const char* op, DenseArray value, const std::vector<Var>& inputs, Backward fn);

  const DenseArray& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Adjoint slot, zero-filled on first access.
  DenseArray& grad(std::size_t id);
  /// Adjoint slot of an input if it needs one, otherwise nullptr.
  DenseArray* grad_target(std::size_t id) { return requires_grad(id) ? &grad(id) : nullptr; }
  const DenseArray* grad_if_any(std::size_t id) const;

  /// Reverse pass from a single-element loss. Parameter adjoints are added to
  /// `sink` (one slot per store entry). Throws StateError when called twice.
  void backward(const Var& loss, GradBuffer& sink);
  /// Same, accumulating straight into the store's gradient slots.
  void backward(const Var& loss, ParamStore& store);

  /// "op#id" of the first node holding a non-finite value.
  std::optional<std::string> first_non_finite() const;

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    const char* op = "";
    DenseArray value;
    const DenseArray* external = nullptr;
    DenseArray grad;
    bool has_grad = false;
    bool requires_grad = false;
    long param_index = -1;
    Backward backward;
  };

  void replay(const Var& loss);

  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::size_t> param_nodes_;
  const ParamStore* bound_store_ = nullptr;
  bool consumed_ = false;
};

}  // namespace ilnet
