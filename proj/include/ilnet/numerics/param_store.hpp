#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "ilnet/numerics/dense_array.hpp"

namespace ilnet {

class Rng;

struct ParamEntry {
  std::string name;
  DenseArray value;
  DenseArray grad;
};

/// Named learnable arrays with gradient slots, kept in insertion order. The
/// insertion order is the checkpoint order and the gradient reduction order.
class ParamStore {
 public:
  /// Adds a zero-initialized entry. Throws ArgumentError on a duplicate name.
  DenseArray& add(const std::string& name, const Shape& shape);
  /// Adds an entry drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  DenseArray& add_uniform(const std::string& name, const Shape& shape, std::size_t fan_in, Rng& rng);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;
  ParamEntry& entry(const std::string& name) { return entries_[index_of(name)]; }
  const ParamEntry& entry(const std::string& name) const { return entries_[index_of(name)]; }
  DenseArray& value(const std::string& name) { return entry(name).value; }
  const DenseArray& value(const std::string& name) const { return entry(name).value; }

  std::vector<ParamEntry>& entries() { return entries_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  /// Total number of scalar parameters.
  std::size_t parameter_count() const;
  /// Scalar parameters whose name starts with `prefix`.
  std::size_t parameter_count(const std::string& prefix) const;

  void zero_grad();

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Gradient slots shaped like a ParamStore, for accumulating one scenario's
/// gradient independently of the shared store.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParamStore& store);

  DenseArray& operator[](std::size_t i) { return grads_[i]; }
  const DenseArray& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const { return grads_.size(); }

  void zero();
  /// store.grad += scale * this, entry by entry in store order.
  void add_to(ParamStore& store, double scale = 1.0) const;

 private:
  std::vector<DenseArray> grads_;
};

}  // namespace ilnet
