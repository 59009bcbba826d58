#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "certmark/error.hpp"

namespace certmark {

std::string shape_string(const std::vector<std::size_t>& shape);

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> values;
  bool requires_grad = true;
  std::optional<std::vector<T>> grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, T fill = T(0), bool trainable = true)
      : shape(std::move(s)), values(numel_of(shape), fill), requires_grad(trainable) {}
  Tensor(std::vector<std::size_t> s, std::vector<T> v, bool trainable = true)
      : shape(std::move(s)), values(std::move(v)), requires_grad(trainable) {
    require(values.size() == numel_of(shape), ErrorKind::kShape,
            "tensor values length " + std::to_string(values.size()) + " does not match shape " + shape_string(shape));
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }
  std::size_t numel() const { return values.size(); }
  // Matrix view: a rank-1 tensor is a single row.
  std::size_t rows() const { return shape.size() <= 1 ? 1 : shape[0]; }
  std::size_t cols() const { return shape.empty() ? 1 : numel() / rows(); }

  std::vector<T>& ensure_grad() {
    if (!grad) grad.emplace(values.size(), T(0));
    return *grad;
  }
};

// Named tensors with stable insertion order. Aggregation, flattening and
// serialization all walk entries in this order.
template <typename T>
class ParameterSet {
 public:
  using Entry = std::pair<std::string, Tensor<T>>;

  Tensor<T>& add(std::string name, Tensor<T> tensor) {
    require(!index_.contains(name), ErrorKind::kContract, "duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(tensor));
    return entries_.back().second;
  }

  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

  Tensor<T>& at(std::string_view name) { return entries_[position(name)].second; }
  const Tensor<T>& at(std::string_view name) const { return entries_[position(name)].second; }

  std::size_t position(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) fail(ErrorKind::kContract, "unknown parameter '" + std::string(name) + "'");
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t total_numel() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.numel();
    return n;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }

  void zero_grad() {
    for (auto& e : entries_) e.second.grad.reset();
  }

  // Same names, order and shapes.
  bool same_layout(const ParameterSet& other) const {
    if (other.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (entries_[i].first != other.entries_[i].first || entries_[i].second.shape != other.entries_[i].second.shape)
        return false;
    }
    return true;
  }

  bool values_equal(const ParameterSet& other) const {
    if (!same_layout(other)) return false;
    for (std::size_t i = 0; i < size(); ++i)
      if (entries_[i].second.values != other.entries_[i].second.values) return false;
    return true;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <typename To, typename From>
ParameterSet<To> cast_parameters(const ParameterSet<From>& in) {
  ParameterSet<To> out;
  for (const auto& [name, t] : in) {
    Tensor<To> c;
    c.shape = t.shape;
    c.values.assign(t.values.begin(), t.values.end());
    c.requires_grad = t.requires_grad;
    out.add(name, std::move(c));
  }
  return out;
}

}  // namespace certmark
