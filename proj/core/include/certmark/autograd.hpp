#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "certmark/rng.hpp"
#include "certmark/tensor.hpp"

namespace certmark {

template <typename T>
class Tape;

// Handle to a node on a tape. Every value is a rows x cols matrix.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  std::size_t rows() const;
  std::size_t cols() const;
  const std::vector<T>& value() const;
};

// Compressed sparse rows, used for constant graph propagation operators.
template <typename T>
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<T> values;
};

template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> value;
    std::vector<T> grad;  // allocated lazily
    bool needs_grad = false;
    Tensor<T>* param = nullptr;
    Backward backward;
  };

  Var<T> constant(std::size_t rows, std::size_t cols, std::vector<T> values);
  Var<T> constant(const Tensor<T>& t);
  // Leaf bound to a parameter; its gradient is accumulated into t.grad on
  // backward() when t.requires_grad is set.
  Var<T> parameter(Tensor<T>& t);

  Var<T> emit(std::size_t rows, std::size_t cols, std::vector<T> value, bool needs_grad, Backward backward);

  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  // Zero-initialized gradient buffer of a node.
  std::vector<T>& grad(std::size_t id);

  // Loss must be 1x1. Runs every recorded backward in reverse creation order.
  void backward(Var<T> loss);

 private:
  std::vector<Node> nodes_;
};

template <typename T>
std::size_t Var<T>::rows() const {
  return tape->node(id).rows;
}
template <typename T>
std::size_t Var<T>::cols() const {
  return tape->node(id).cols;
}
template <typename T>
const std::vector<T>& Var<T>::value() const {
  return tape->node(id).value;
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);
template <typename T>
Var<T> add(Var<T> a, Var<T> b);
// a (n x m) + bias (1 x m) broadcast over rows.
template <typename T>
Var<T> add_bias(Var<T> a, Var<T> bias);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T s);
template <typename T>
Var<T> relu(Var<T> a);
template <typename T>
Var<T> sigmoid(Var<T> a);
// Inverted dropout. Identity when !training or p == 0.
template <typename T>
Var<T> dropout(Var<T> a, T p, Rng& rng, bool training);

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
};
// Column-wise batch norm over rows. In training mode uses batch statistics and
// updates running_mean / running_var (unbiased); otherwise uses the running
// statistics.
template <typename T>
Var<T> batch_norm(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                  const BatchNormOptions& opt);
// Eval-only variant that leaves running statistics untouched.
template <typename T>
Var<T> batch_norm_eval(Var<T> x, Var<T> gamma, Var<T> beta, const Tensor<T>& running_mean,
                       const Tensor<T>& running_var, double eps = 1e-5);

// Sums row blocks [offsets[g], offsets[g+1]) into row g.
template <typename T>
Var<T> sum_pool_rows(Var<T> x, std::span<const std::size_t> offsets);
// Mean cross-entropy over rows.
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::span<const int> targets);
template <typename T>
Var<T> sum(Var<T> a);
template <typename T>
Var<T> spmm(const CsrMatrix<T>& m, Var<T> x);

// Dense adjacency helpers used on the differentiable watermark path.
template <typename T>
Var<T> add_identity(Var<T> a);
// n x m -> n x 1.
template <typename T>
Var<T> row_sum(Var<T> a);
// x^p elementwise, with 0 wherever x == 0.
template <typename T>
Var<T> safe_pow(Var<T> a, T p);
// a (n x m) scaled row-wise by v (n x 1).
template <typename T>
Var<T> scale_rows(Var<T> a, Var<T> v);
// a (n x m) scaled column-wise by v (m x 1).
template <typename T>
Var<T> scale_cols(Var<T> a, Var<T> v);
template <typename T>
Var<T> slice(Var<T> a, std::size_t row0, std::size_t col0, std::size_t rows, std::size_t cols);
// Forward: I(a > 0.5), optionally OR-symmetrized. Backward: identity.
template <typename T>
Var<T> threshold_ste(Var<T> a, bool symmetrize);

}  // namespace certmark
