#include "ilnet/numerics/param_store.hpp"

#include <cmath>

#include "ilnet/errors.hpp"
#include "ilnet/numerics/rng.hpp"

namespace ilnet {

DenseArray& ParamStore::add(const std::string& name, const Shape& shape) {
  if (contains(name)) throw ArgumentError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(ParamEntry{name, DenseArray(shape), DenseArray(shape)});
  return entries_.back().value;
}

DenseArray& ParamStore::add_uniform(const std::string& name, const Shape& shape, std::size_t fan_in,
                                    Rng& rng) {
  DenseArray& v = add(name, shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  for (double& x : v.values()) x = rng.uniform(-bound, bound);
  return v;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::size_t ParamStore::parameter_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.name.rfind(prefix, 0) == 0) n += e.value.size();
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

GradBuffer::GradBuffer(const ParamStore& store) {
  grads_.reserve(store.size());
  for (const auto& e : store.entries()) grads_.emplace_back(e.value.shape());
}

void GradBuffer::zero() {
  for (auto& g : grads_) g.fill(0.0);
}

void GradBuffer::add_to(ParamStore& store, double scale) const {
  auto& entries = store.entries();
  if (entries.size() != grads_.size()) throw StateError("gradient buffer does not match parameter store");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    double* dst = entries[i].grad.ptr();
    const double* src = grads_[i].ptr();
    for (std::size_t j = 0; j < grads_[i].size(); ++j) dst[j] += scale * src[j];
  }
}

}  // namespace ilnet
