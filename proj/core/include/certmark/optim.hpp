#pragma once

#include "certmark/tensor.hpp"

namespace certmark {

// value -= lr * grad for every trainable tensor, then clears the gradients.
// A trainable tensor without a gradient is a contract error; nothing is
// updated in that case.
template <typename T>
void sgd_step(ParameterSet<T>& params, T lr) {
  for (const auto& [name, t] : params) {
    require(!t.requires_grad || t.grad.has_value(), ErrorKind::kContract,
            "parameter '" + name + "' has no gradient");
  }
  for (auto& [name, t] : params) {
    if (!t.requires_grad) continue;
    const auto& g = *t.grad;
    for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] -= lr * g[i];
  }
  params.zero_grad();
}

}  // namespace certmark
