#include "certmark/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace certmark {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

template <typename T>
std::string dims(Var<T> v) {
  return shape_string({v.rows(), v.cols()});
}

template <typename T>
void check_same_tape(Var<T> a, Var<T> b) {
  require(a.tape == b.tape && a.tape != nullptr, ErrorKind::kContract, "variables live on different tapes");
}

template <typename T>
bool any_grad(Tape<T>& t, std::initializer_list<std::size_t> ids) {
  for (auto id : ids)
    if (t.node(id).needs_grad) return true;
  return false;
}

}  // namespace

template <typename T>
Var<T> Tape<T>::constant(std::size_t rows, std::size_t cols, std::vector<T> values) {
  require(values.size() == rows * cols, ErrorKind::kShape,
          "constant of shape " + shape_string({rows, cols}) + " given " + std::to_string(values.size()) + " values");
  return emit(rows, cols, std::move(values), false, nullptr);
}

template <typename T>
Var<T> Tape<T>::constant(const Tensor<T>& t) {
  return constant(t.rows(), t.cols(), t.values);
}

template <typename T>
Var<T> Tape<T>::parameter(Tensor<T>& t) {
  Var<T> v = emit(t.rows(), t.cols(), t.values, t.requires_grad, nullptr);
  nodes_[v.id].param = &t;
  return v;
}

template <typename T>
Var<T> Tape<T>::emit(std::size_t rows, std::size_t cols, std::vector<T> value, bool needs_grad, Backward backward) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
std::vector<T>& Tape<T>::grad(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), T(0));
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  require(loss.tape == this, ErrorKind::kContract, "loss belongs to another tape");
  const auto& ln = nodes_[loss.id];
  require(ln.rows == 1 && ln.cols == 1, ErrorKind::kContract,
          "backward needs a scalar loss, got shape " + shape_string({ln.rows, ln.cols}));
  if (!ln.needs_grad) return;
  grad(loss.id)[0] += T(1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr && n.param->requires_grad) {
      auto& g = n.param->ensure_grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
    }
  }
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  require(a.cols() == b.rows(), ErrorKind::kShape, "matmul shape mismatch " + dims(a) + " x " + dims(b));
  Tape<T>& t = *a.tape;
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<T> out(n * m, T(0));
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < n; ++i) {
    T* row = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = av[i * k + p];
      if (s == T(0)) continue;
      const T* brow = bv.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += s * brow[j];
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return t.emit(n, m, std::move(out), any_grad(t, {ia, ib}), [ia, ib, n, k, m](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    if (tp.node(ia).needs_grad) {
      auto& ga = tp.grad(ia);
      const auto& bv = tp.node(ib).value;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          T s = 0;
          for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * bv[p * m + j];
          ga[i * k + p] += s;
        }
    }
    if (tp.node(ib).needs_grad) {
      auto& gb = tp.grad(ib);
      const auto& av = tp.node(ia).value;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const T s = av[i * k + p];
          if (s == T(0)) continue;
          for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += s * g[i * m + j];
        }
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::kShape,
          "add shape mismatch " + dims(a) + " vs " + dims(b));
  Tape<T>& t = *a.tape;
  std::vector<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.emit(a.rows(), a.cols(), std::move(out), any_grad(t, {ia, ib}), [ia, ib](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    for (auto id : {ia, ib}) {
      if (!tp.node(id).needs_grad) continue;
      auto& gi = tp.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

template <typename T>
Var<T> add_bias(Var<T> a, Var<T> bias) {
  check_same_tape(a, bias);
  require(bias.rows() == 1 && bias.cols() == a.cols(), ErrorKind::kShape,
          "bias shape " + dims(bias) + " does not fit " + dims(a));
  Tape<T>& t = *a.tape;
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<T> out = a.value();
  const auto& bv = bias.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += bv[j];
  const std::size_t ia = a.id, ib = bias.id;
  return t.emit(n, m, std::move(out), any_grad(t, {ia, ib}), [ia, ib, n, m](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    if (tp.node(ia).needs_grad) {
      auto& ga = tp.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.node(ib).needs_grad) {
      auto& gb = tp.grad(ib);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gb[j] += g[i * m + j];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  check_same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::kShape,
          "elementwise multiply shape mismatch " + dims(a) + " vs " + dims(b));
  Tape<T>& t = *a.tape;
  std::vector<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.emit(a.rows(), a.cols(), std::move(out), any_grad(t, {ia, ib}), [ia, ib](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    if (tp.node(ia).needs_grad) {
      auto& ga = tp.grad(ia);
      const auto& bv = tp.node(ib).value;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.node(ib).needs_grad) {
      auto& gb = tp.grad(ib);
      const auto& av = tp.node(ia).value;
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  Tape<T>& t = *a.tape;
  std::vector<T> out = a.value();
  for (auto& v : out) v *= s;
  const std::size_t ia = a.id;
  return t.emit(a.rows(), a.cols(), std::move(out), t.node(ia).needs_grad, [ia, s](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

template <typename T>
Var<T> relu(Var<T> a) {
  Tape<T>& t = *a.tape;
  std::vector<T> out = a.value();
  for (auto& v : out) v = v > T(0) ? v : T(0);
  const std::size_t ia = a.id;
  return t.emit(a.rows(), a.cols(), std::move(out), t.node(ia).needs_grad, [ia](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    const auto& x = tp.node(ia).value;
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > T(0)) ga[i] += g[i];
  });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Tape<T>& t = *a.tape;
  std::vector<T> out = a.value();
  for (auto& v : out) v = T(1) / (T(1) + std::exp(-v));
  const std::size_t ia = a.id;
  return t.emit(a.rows(), a.cols(), std::move(out), t.node(ia).needs_grad, [ia](Tape<T>& tp, std::size_t self) {
    const auto& n = tp.node(self);
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * n.value[i] * (T(1) - n.value[i]);
  });
}

template <typename T>
Var<T> dropout(Var<T> a, T p, Rng& rng, bool training) {
  if (!training || p == T(0)) return a;
  require(p > T(0) && p < T(1), ErrorKind::kContract, "dropout probability must lie in [0, 1)");
  Tape<T>& t = *a.tape;
  const T keep_scale = T(1) / (T(1) - p);
  std::vector<T> mask(a.value().size());
  for (auto& m : mask) m = rng.bernoulli(static_cast<double>(p)) ? T(0) : keep_scale;
  std::vector<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t ia = a.id;
  return t.emit(a.rows(), a.cols(), std::move(out), t.node(ia).needs_grad,
                [ia, mask = std::move(mask)](Tape<T>& tp, std::size_t self) {
                  const auto& g = tp.node(self).grad;
                  auto& ga = tp.grad(ia);
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
                });
}

namespace {

template <typename T>
Var<T> batch_norm_affine(Var<T> x, Var<T> gamma, Var<T> beta, const std::vector<T>& mean, const std::vector<T>& inv_std,
                         bool batch_stats) {
  Tape<T>& t = *x.tape;
  const std::size_t n = x.rows(), m = x.cols();
  const auto& xv = x.value();
  const auto& gv = gamma.value();
  const auto& bv = beta.value();
  std::vector<T> xhat(n * m), out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const T h = (xv[i * m + j] - mean[j]) * inv_std[j];
      xhat[i * m + j] = h;
      out[i * m + j] = gv[j] * h + bv[j];
    }
  const std::size_t ix = x.id, ig = gamma.id, ib = beta.id;
  return t.emit(
      n, m, std::move(out), any_grad(t, {ix, ig, ib}),
      [ix, ig, ib, n, m, batch_stats, xhat = std::move(xhat), inv_std](Tape<T>& tp, std::size_t self) {
        const auto& g = tp.node(self).grad;
        std::vector<T> sum_g(m, T(0)), sum_gh(m, T(0));
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            sum_g[j] += g[i * m + j];
            sum_gh[j] += g[i * m + j] * xhat[i * m + j];
          }
        if (tp.node(ig).needs_grad) {
          auto& gg = tp.grad(ig);
          for (std::size_t j = 0; j < m; ++j) gg[j] += sum_gh[j];
        }
        if (tp.node(ib).needs_grad) {
          auto& gb = tp.grad(ib);
          for (std::size_t j = 0; j < m; ++j) gb[j] += sum_g[j];
        }
        if (tp.node(ix).needs_grad) {
          const auto& gamma_v = tp.node(ig).value;
          auto& gx = tp.grad(ix);
          const T inv_n = T(1) / static_cast<T>(n);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
              const T gy = g[i * m + j];
              const T scale_j = gamma_v[j] * inv_std[j];
              if (batch_stats) {
                gx[i * m + j] += scale_j * (gy - inv_n * sum_g[j] - xhat[i * m + j] * inv_n * sum_gh[j]);
              } else {
                gx[i * m + j] += scale_j * gy;
              }
            }
        }
      });
}

template <typename T>
void check_bn_shapes(Var<T> x, Var<T> gamma, Var<T> beta, std::size_t mean_n, std::size_t var_n) {
  check_same_tape(x, gamma);
  check_same_tape(x, beta);
  const std::size_t m = x.cols();
  require(gamma.rows() * gamma.cols() == m && beta.rows() * beta.cols() == m && mean_n == m && var_n == m,
          ErrorKind::kShape, "batch norm parameters do not match input " + dims(x));
}

}  // namespace

template <typename T>
Var<T> batch_norm(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                  const BatchNormOptions& opt) {
  check_bn_shapes(x, gamma, beta, running_mean.numel(), running_var.numel());
  if (!opt.training) return batch_norm_eval(x, gamma, beta, running_mean, running_var, opt.eps);
  const std::size_t n = x.rows(), m = x.cols();
  require(n > 0, ErrorKind::kShape, "batch norm on an empty batch");
  const auto& xv = x.value();
  std::vector<T> mean(m, T(0)), var(m, T(0)), inv_std(m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) mean[j] += xv[i * m + j];
  for (auto& v : mean) v /= static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const T d = xv[i * m + j] - mean[j];
      var[j] += d * d;
    }
  const T mom = static_cast<T>(opt.momentum);
  for (std::size_t j = 0; j < m; ++j) {
    const T biased = var[j] / static_cast<T>(n);
    const T unbiased = n > 1 ? var[j] / static_cast<T>(n - 1) : biased;
    inv_std[j] = T(1) / std::sqrt(biased + static_cast<T>(opt.eps));
    running_mean.values[j] = (T(1) - mom) * running_mean.values[j] + mom * mean[j];
    running_var.values[j] = (T(1) - mom) * running_var.values[j] + mom * unbiased;
  }
  return batch_norm_affine(x, gamma, beta, mean, inv_std, true);
}

template <typename T>
Var<T> batch_norm_eval(Var<T> x, Var<T> gamma, Var<T> beta, const Tensor<T>& running_mean,
                       const Tensor<T>& running_var, double eps) {
  check_bn_shapes(x, gamma, beta, running_mean.numel(), running_var.numel());
  std::vector<T> inv_std(x.cols());
  for (std::size_t j = 0; j < inv_std.size(); ++j)
    inv_std[j] = T(1) / std::sqrt(running_var.values[j] + static_cast<T>(eps));
  return batch_norm_affine(x, gamma, beta, running_mean.values, inv_std, false);
}

template <typename T>
Var<T> sum_pool_rows(Var<T> x, std::span<const std::size_t> offsets) {
  require(offsets.size() >= 1 && offsets.front() == 0 && offsets.back() == x.rows(), ErrorKind::kShape,
          "pool offsets do not cover the " + std::to_string(x.rows()) + " input rows");
  Tape<T>& t = *x.tape;
  const std::size_t groups = offsets.size() - 1, m = x.cols();
  std::vector<T> out(groups * m, T(0));
  const auto& xv = x.value();
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t i = offsets[g]; i < offsets[g + 1]; ++i)
      for (std::size_t j = 0; j < m; ++j) out[g * m + j] += xv[i * m + j];
  const std::size_t ix = x.id;
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  return t.emit(groups, m, std::move(out), t.node(ix).needs_grad,
                [ix, m, offs = std::move(offs)](Tape<T>& tp, std::size_t self) {
                  const auto& g = tp.node(self).grad;
                  auto& gx = tp.grad(ix);
                  for (std::size_t grp = 0; grp + 1 < offs.size(); ++grp)
                    for (std::size_t i = offs[grp]; i < offs[grp + 1]; ++i)
                      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += g[grp * m + j];
                });
}

template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, std::span<const int> targets) {
  const std::size_t n = logits.rows(), c = logits.cols();
  require(targets.size() == n && n > 0, ErrorKind::kShape,
          "cross entropy: " + std::to_string(targets.size()) + " targets for logits " + dims(logits));
  Tape<T>& t = *logits.tape;
  const auto& lv = logits.value();
  std::vector<T> probs(n * c);
  T loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    require(targets[i] >= 0 && static_cast<std::size_t>(targets[i]) < c, ErrorKind::kShape,
            "cross entropy target out of range");
    const T* row = lv.data() + i * c;
    const T mx = *std::max_element(row, row + c);
    T z = 0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(row[j] - mx);
      z += probs[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
    loss += -(row[targets[i]] - mx - std::log(z));
  }
  loss /= static_cast<T>(n);
  const std::size_t il = logits.id;
  std::vector<int> tg(targets.begin(), targets.end());
  return t.emit(1, 1, {loss}, t.node(il).needs_grad,
                [il, n, c, probs = std::move(probs), tg = std::move(tg)](Tape<T>& tp, std::size_t self) {
                  const T g = tp.node(self).grad[0] / static_cast<T>(n);
                  auto& gl = tp.grad(il);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < c; ++j) {
                      const T onehot = static_cast<int>(j) == tg[i] ? T(1) : T(0);
                      gl[i * c + j] += g * (probs[i * c + j] - onehot);
                    }
                });
}

template <typename T>
Var<T> sum(Var<T> a) {
  Tape<T>& t = *a.tape;
  T s = 0;
  for (auto v : a.value()) s += v;
  const std::size_t ia = a.id;
  return t.emit(1, 1, {s}, t.node(ia).needs_grad, [ia](Tape<T>& tp, std::size_t self) {
    const T g = tp.node(self).grad[0];
    for (auto& v : tp.grad(ia)) v += g;
  });
}

template <typename T>
Var<T> spmm(const CsrMatrix<T>& mat, Var<T> x) {
  require(mat.cols == x.rows() && mat.row_ptr.size() == mat.rows + 1, ErrorKind::kShape,
          "sparse operator " + shape_string({mat.rows, mat.cols}) + " cannot multiply " + dims(x));
  Tape<T>& t = *x.tape;
  const std::size_t m = x.cols();
  std::vector<T> out(mat.rows * m, T(0));
  const auto& xv = x.value();
  for (std::size_t i = 0; i < mat.rows; ++i)
    for (std::size_t e = mat.row_ptr[i]; e < mat.row_ptr[i + 1]; ++e) {
      const T w = mat.values[e];
      const T* src = xv.data() + static_cast<std::size_t>(mat.col_idx[e]) * m;
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += w * src[j];
    }
  const std::size_t ix = x.id;
  // The operator is captured by pointer; callers keep it alive for the tape's lifetime.
  const CsrMatrix<T>* op = &mat;
  return t.emit(mat.rows, m, std::move(out), t.node(ix).needs_grad, [ix, m, op](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    auto& gx = tp.grad(ix);
    for (std::size_t i = 0; i < op->rows; ++i)
      for (std::size_t e = op->row_ptr[i]; e < op->row_ptr[i + 1]; ++e) {
        const T w = op->values[e];
        T* dst = gx.data() + static_cast<std::size_t>(op->col_idx[e]) * m;
        for (std::size_t j = 0; j < m; ++j) dst[j] += w * g[i * m + j];
      }
  });
}

template <typename T>
Var<T> add_identity(Var<T> a) {
  require(a.rows() == a.cols(), ErrorKind::kShape, "add_identity needs a square matrix, got " + dims(a));
  Tape<T>& t = *a.tape;
  std::vector<T> out = a.value();
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) out[i * n + i] += T(1);
  const std::size_t ia = a.id;
  return t.emit(n, n, std::move(out), t.node(ia).needs_grad, [ia](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <typename T>
Var<T> row_sum(Var<T> a) {
  Tape<T>& t = *a.tape;
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<T> out(n, T(0));
  const auto& av = a.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i] += av[i * m + j];
  const std::size_t ia = a.id;
  return t.emit(n, 1, std::move(out), t.node(ia).needs_grad, [ia, n, m](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += g[i];
  });
}

template <typename T>
Var<T> safe_pow(Var<T> a, T p) {
  Tape<T>& t = *a.tape;
  std::vector<T> out = a.value();
  for (auto& v : out) v = v == T(0) ? T(0) : std::pow(v, p);
  const std::size_t ia = a.id;
  return t.emit(a.rows(), a.cols(), std::move(out), t.node(ia).needs_grad, [ia, p](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    const auto& x = tp.node(ia).value;
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] != T(0)) ga[i] += g[i] * p * std::pow(x[i], p - T(1));
  });
}

namespace {

template <typename T>
Var<T> scale_axis(Var<T> a, Var<T> v, bool by_row) {
  check_same_tape(a, v);
  const std::size_t n = a.rows(), m = a.cols();
  require(v.cols() == 1 && v.rows() == (by_row ? n : m), ErrorKind::kShape,
          std::string(by_row ? "scale_rows" : "scale_cols") + " factor " + dims(v) + " does not fit " + dims(a));
  Tape<T>& t = *a.tape;
  std::vector<T> out = a.value();
  const auto& vv = v.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] *= vv[by_row ? i : j];
  const std::size_t ia = a.id, iv = v.id;
  return t.emit(n, m, std::move(out), any_grad(t, {ia, iv}), [ia, iv, n, m, by_row](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    const auto& av = tp.node(ia).value;
    const auto& vv = tp.node(iv).value;
    if (tp.node(ia).needs_grad) {
      auto& ga = tp.grad(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += g[i * m + j] * vv[by_row ? i : j];
    }
    if (tp.node(iv).needs_grad) {
      auto& gv = tp.grad(iv);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gv[by_row ? i : j] += g[i * m + j] * av[i * m + j];
    }
  });
}

}  // namespace

template <typename T>
Var<T> scale_rows(Var<T> a, Var<T> v) {
  return scale_axis(a, v, true);
}

template <typename T>
Var<T> scale_cols(Var<T> a, Var<T> v) {
  return scale_axis(a, v, false);
}

template <typename T>
Var<T> slice(Var<T> a, std::size_t row0, std::size_t col0, std::size_t rows, std::size_t cols) {
  require(row0 + rows <= a.rows() && col0 + cols <= a.cols(), ErrorKind::kShape,
          "slice " + shape_string({row0, col0, rows, cols}) + " out of bounds for " + dims(a));
  Tape<T>& t = *a.tape;
  const std::size_t m = a.cols();
  std::vector<T> out(rows * cols);
  const auto& av = a.value();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = av[(row0 + i) * m + col0 + j];
  const std::size_t ia = a.id;
  return t.emit(rows, cols, std::move(out), t.node(ia).needs_grad,
                [ia, row0, col0, rows, cols, m](Tape<T>& tp, std::size_t self) {
                  const auto& g = tp.node(self).grad;
                  auto& ga = tp.grad(ia);
                  for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cols; ++j) ga[(row0 + i) * m + col0 + j] += g[i * cols + j];
                });
}

template <typename T>
Var<T> threshold_ste(Var<T> a, bool symmetrize) {
  const std::size_t n = a.rows(), m = a.cols();
  require(!symmetrize || n == m, ErrorKind::kShape, "symmetrized threshold needs a square matrix, got " + dims(a));
  Tape<T>& t = *a.tape;
  const auto& av = a.value();
  std::vector<T> out(n * m);
  for (std::size_t i = 0; i < n * m; ++i) out[i] = av[i] > T(0.5) ? T(1) : T(0);
  if (symmetrize) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const T v = (out[i * n + j] + out[j * n + i]) > T(0) ? T(1) : T(0);
        out[i * n + j] = v;
        out[j * n + i] = v;
      }
  }
  const std::size_t ia = a.id;
  return t.emit(n, m, std::move(out), t.node(ia).needs_grad, [ia](Tape<T>& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    auto& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

#define CERTMARK_INSTANTIATE_OPS(T)                                                                              \
  template class Tape<T>;                                                                                        \
  template Var<T> matmul(Var<T>, Var<T>);                                                                        \
  template Var<T> add(Var<T>, Var<T>);                                                                           \
  template Var<T> add_bias(Var<T>, Var<T>);                                                                      \
  template Var<T> mul(Var<T>, Var<T>);                                                                           \
  template Var<T> scale(Var<T>, T);                                                                              \
  template Var<T> relu(Var<T>);                                                                                  \
  template Var<T> sigmoid(Var<T>);                                                                               \
  template Var<T> dropout(Var<T>, T, Rng&, bool);                                                                \
  template Var<T> batch_norm(Var<T>, Var<T>, Var<T>, Tensor<T>&, Tensor<T>&, const BatchNormOptions&);           \
  template Var<T> batch_norm_eval(Var<T>, Var<T>, Var<T>, const Tensor<T>&, const Tensor<T>&, double);           \
  template Var<T> sum_pool_rows(Var<T>, std::span<const std::size_t>);                                           \
  template Var<T> softmax_cross_entropy(Var<T>, std::span<const int>);                                           \
  template Var<T> sum(Var<T>);                                                                                   \
  template Var<T> spmm(const CsrMatrix<T>&, Var<T>);                                                             \
  template Var<T> add_identity(Var<T>);                                                                          \
  template Var<T> row_sum(Var<T>);                                                                               \
  template Var<T> safe_pow(Var<T>, T);                                                                           \
  template Var<T> scale_rows(Var<T>, Var<T>);                                                                    \
  template Var<T> scale_cols(Var<T>, Var<T>);                                                                    \
  template Var<T> slice(Var<T>, std::size_t, std::size_t, std::size_t, std::size_t);                             \
  template Var<T> threshold_ste(Var<T>, bool);

CERTMARK_INSTANTIATE_OPS(float)
CERTMARK_INSTANTIATE_OPS(double)

#undef CERTMARK_INSTANTIATE_OPS

}  // namespace certmark
