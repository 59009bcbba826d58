#pragma once

// Finite-difference checks for every parameterized layer type, in double.
// Shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "certmark/autograd.hpp"
#include "certmark/gnn.hpp"
#include "certmark/watermark.hpp"
#include "testing.hpp"

namespace certmark::testing {

inline constexpr double kGradRtol = 1e-3;
inline constexpr double kGradAtol = 1e-6;  // floor for gradients that are exactly zero
inline constexpr double kFdStep = 1e-6;
inline constexpr std::size_t kGradInstances = 20;

using LossFn = std::function<Var<double>(Tape<double>&, ParameterSet<double>&)>;

struct GradCheck {
  std::size_t checked = 0;
  double worst_ratio = 0;  // |analytic - numeric| / (atol + rtol * max(|analytic|, |numeric|))
  std::string worst_at;
  bool ok() const { return checked > 0 && worst_ratio <= 1.0; }
};

// Backpropagated gradients of `analytic` against central differences of
// `numeric` for every trainable element of `params`.
inline GradCheck check_gradients(ParameterSet<double>& params, const LossFn& analytic, const LossFn& numeric) {
  params.zero_grad();
  {
    Tape<double> tape;
    tape.backward(analytic(tape, params));
  }
  std::vector<std::vector<double>> grads;
  for (auto& [name, t] : params) grads.push_back(t.grad ? *t.grad : std::vector<double>(t.numel(), 0.0));
  params.zero_grad();

  auto value = [&] {
    Tape<double> tape;
    return numeric(tape, params).value()[0];
  };
  GradCheck out;
  for (std::size_t e = 0; e < params.size(); ++e) {
    auto& [name, t] = params.entry(e);
    if (!t.requires_grad) continue;
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double saved = t.values[i];
      t.values[i] = saved + kFdStep;
      const double up = value();
      t.values[i] = saved - kFdStep;
      const double down = value();
      t.values[i] = saved;
      const double num = (up - down) / (2 * kFdStep);
      const double ana = grads[e][i];
      const double ratio = std::abs(ana - num) / (kGradAtol + kGradRtol * std::max(std::abs(ana), std::abs(num)));
      ++out.checked;
      if (ratio > out.worst_ratio) {
        out.worst_ratio = ratio;
        out.worst_at = name + "[" + std::to_string(i) + "] analytic " + std::to_string(ana) + " numeric " +
                       std::to_string(num);
      }
    }
  }
  return out;
}

inline GradCheck check_gradients(ParameterSet<double>& params, const LossFn& loss) {
  return check_gradients(params, loss, loss);
}

inline Tensor<double> uniform_tensor(Rng& rng, std::vector<std::size_t> shape, double lo, double hi,
                                     bool trainable = true) {
  Tensor<double> t(std::move(shape), 0.0, trainable);
  for (auto& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> uniform_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline GradCheck grad_linear(std::uint64_t seed) {
  Rng rng(seed);
  ParameterSet<double> p;
  p.add("x", uniform_tensor(rng, {3, 4}, -1, 1));
  p.add("weight", uniform_tensor(rng, {4, 5}, -1, 1));
  p.add("bias", uniform_tensor(rng, {1, 5}, -1, 1));
  const auto c = uniform_values(rng, 15, -1, 1);
  return check_gradients(p, [&](Tape<double>& tape, ParameterSet<double>& ps) {
    auto y = add_bias(matmul(tape.parameter(ps.at("x")), tape.parameter(ps.at("weight"))),
                      tape.parameter(ps.at("bias")));
    return sum(mul(sigmoid(y), tape.constant(3, 5, c)));
  });
}

inline GradCheck grad_batch_norm(std::uint64_t seed) {
  Rng rng(seed);
  ParameterSet<double> p;
  p.add("x", uniform_tensor(rng, {6, 4}, -2, 2));
  p.add("gamma", uniform_tensor(rng, {1, 4}, 0.5, 1.5));
  p.add("beta", uniform_tensor(rng, {1, 4}, -0.5, 0.5));
  Tensor<double> mean({4}, 0.0, false), var({4}, 1.0, false);
  const auto c = uniform_values(rng, 24, -1, 1);
  return check_gradients(p, [&](Tape<double>& tape, ParameterSet<double>& ps) {
    auto y = batch_norm(tape.parameter(ps.at("x")), tape.parameter(ps.at("gamma")), tape.parameter(ps.at("beta")),
                        mean, var, BatchNormOptions{});
    return sum(mul(sigmoid(y), tape.constant(6, 4, c)));
  });
}

inline SubmodelConfig tiny_config(ConvType conv) { return SubmodelConfig{conv, 5, 4, 4, 3, 2}; }

// Whole submodel in training mode on a small batch with the sparse operator.
inline GradCheck grad_conv(ConvType conv, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Graph> graphs;
  std::vector<int> labels;
  const std::size_t count = 2 + rng.below(2);
  for (std::size_t i = 0; i < count; ++i) {
    graphs.push_back(random_graph(rng, 3 + rng.below(5), 0.4, 3, static_cast<int>(rng.below(2))));
    labels.push_back(graphs.back().label);
  }
  const auto batch = make_batch(std::span<const Graph>(graphs));
  const auto op = propagation_operator<double>(batch, conv);
  // Continuous features: one-hot rows make nodes identical and park ReLUs on their kink.
  const auto features = uniform_values(rng, batch.features.size(), -1, 1);
  const auto config = tiny_config(conv);
  auto p = cast_parameters<double>(build_submodel(config, seed).params);
  return check_gradients(p, [&](Tape<double>& tape, ParameterSet<double>& ps) {
    ForwardInput<double> in{tape.constant(batch.node_count(), 3, features), batch.offsets, &op, std::nullopt};
    return softmax_cross_entropy(submodel_forward_train(tape, config, ps, in), std::span<const int>(labels));
  });
}

// Dense operator built from a differentiable weighted adjacency, checked
// together with the submodel parameters.
inline GradCheck grad_conv_dense(ConvType conv, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 3 + rng.below(4);
  const Graph g = random_graph(rng, n, 0.5, 3, static_cast<int>(rng.below(2)));
  const auto features = uniform_values(rng, g.features.size(), -1, 1);
  const std::vector<std::size_t> offsets{0, n};
  const std::vector<int> label{g.label};
  const auto config = tiny_config(conv);
  auto p = cast_parameters<double>(build_submodel(config, seed).params);
  auto& adj = p.add("adjacency", uniform_tensor(rng, {n, n}, 0.1, 1.0));
  for (std::size_t i = 0; i < n; ++i) adj.values[i * n + i] = 0;
  return check_gradients(p, [&](Tape<double>& tape, ParameterSet<double>& ps) {
    ForwardInput<double> in{tape.constant(n, 3, features), offsets, nullptr,
                            dense_propagation_operator(tape.parameter(ps.at("adjacency")), conv)};
    return softmax_cross_entropy(submodel_forward_train(tape, config, ps, in), std::span<const int>(label));
  });
}

struct CwgFixture {
  std::size_t n_max = 6;
  Graph graph;
  std::vector<std::uint32_t> nodes;
  ClientKey key;
  std::vector<double> a_pad;
  std::vector<double> mask;
  ParameterSet<double> params;
};

inline CwgFixture cwg_fixture(std::uint64_t seed) {
  Rng rng(seed);
  CwgFixture f;
  f.graph = random_graph(rng, 4 + rng.below(3), 0.4, 3, 0);
  f.nodes = *select_watermark_nodes(f.graph, 4, seed);
  f.key = derive_key_matrix("client-" + std::to_string(seed), f.n_max);
  const auto a = padded_adjacency(f.graph, f.nodes, f.n_max);
  f.a_pad.assign(a.begin(), a.end());
  const auto m = build_mask(f.nodes, f.n_max);
  f.mask.assign(m.begin(), m.end());
  f.params = cast_parameters<double>(build_cwg(f.n_max, seed).params);
  return f;
}

// Both generator nets through the soft watermark, dropout on with a fixed mask.
inline GradCheck grad_cwg_nets(std::uint64_t seed) {
  auto f = cwg_fixture(seed);
  Rng rng(seed ^ 0xC0FFEE);
  const auto c = uniform_values(rng, f.n_max * f.n_max, -1, 1);
  return check_gradients(f.params, [&](Tape<double>& tape, ParameterSet<double>& ps) {
    Rng drop(seed);
    auto out = cwg_forward(tape, f.a_pad, f.key, f.mask, ps, true, true, drop);
    return sum(mul(out.soft, tape.constant(f.n_max, f.n_max, c)));
  });
}

// Straight-through path: the backpropagated generator gradient of a
// downstream loss f(W) must equal J_soft^T * df/dW, with df/dW taken by
// finite differences on W as a continuous input.
inline GradCheck grad_cwg_ste(std::uint64_t seed) {
  auto f = cwg_fixture(seed);
  const std::size_t n = f.graph.node_count(), nm = f.n_max;
  const auto config = tiny_config(ConvType::kGin);
  const auto model = cast_parameters<double>(build_submodel(config, seed ^ 0x5EED).params);
  const auto a = padded_adjacency(f.graph, f.nodes, n);
  const std::vector<double> a_clear(a.begin(), a.end());
  Rng rng(seed ^ 0xFEA7);
  const auto features = uniform_values(rng, f.graph.features.size(), -1, 1);
  const std::vector<std::size_t> offsets{0, n};
  const std::vector<int> target{1};

  auto downstream = [&](Tape<double>& tape, Var<double> w) {
    auto adjacency = add(tape.constant(n, n, a_clear), slice(w, 0, 0, n, n));
    ForwardInput<double> in{tape.constant(n, 3, features), offsets, nullptr,
                            dense_propagation_operator(adjacency, config.conv)};
    return softmax_cross_entropy(submodel_forward_eval(tape, config, model, in), std::span<const int>(target));
  };
  std::vector<double> w_hard;
  {
    Tape<double> tape;
    Rng drop(seed);
    w_hard = cwg_forward(tape, f.a_pad, f.key, f.mask, f.params, true, true, drop).w.value();
  }
  std::vector<double> dfdw(nm * nm, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto at = [&](double delta) {
        auto w = w_hard;
        w[i * nm + j] += delta;
        Tape<double> tape;
        return downstream(tape, tape.constant(nm, nm, w)).value()[0];
      };
      dfdw[i * nm + j] = (at(kFdStep) - at(-kFdStep)) / (2 * kFdStep);
    }
  return check_gradients(
      f.params,
      [&](Tape<double>& tape, ParameterSet<double>& ps) {
        Rng drop(seed);
        return downstream(tape, cwg_forward(tape, f.a_pad, f.key, f.mask, ps, true, true, drop).w);
      },
      [&](Tape<double>& tape, ParameterSet<double>& ps) {
        Rng drop(seed);
        auto out = cwg_forward(tape, f.a_pad, f.key, f.mask, ps, true, true, drop);
        return sum(mul(out.soft, tape.constant(nm, nm, dfdw)));
      });
}

struct LayerGradSummary {
  std::string layer;
  std::size_t instances = 0;
  std::size_t passed = 0;
  double worst_ratio = 0;
  std::string worst_at;
  bool ok() const { return instances >= kGradInstances && passed == instances; }
};

inline std::vector<LayerGradSummary> run_gradient_suite(std::size_t instances = kGradInstances) {
  std::vector<std::pair<std::string, std::function<GradCheck(std::uint64_t)>>> kinds{
      {"linear", grad_linear},
      {"batch_norm", grad_batch_norm},
      {"cwg_nets", grad_cwg_nets},
      {"cwg_straight_through", grad_cwg_ste},
  };
  for (auto conv : {ConvType::kGin, ConvType::kGcn, ConvType::kGsage}) {
    const std::string name(to_string(conv));
    kinds.emplace_back("conv_" + name, [conv](std::uint64_t s) { return grad_conv(conv, s); });
    kinds.emplace_back("conv_" + name + "_dense", [conv](std::uint64_t s) { return grad_conv_dense(conv, s); });
  }
  std::vector<LayerGradSummary> out;
  for (const auto& [name, fn] : kinds) {
    LayerGradSummary s{name};
    for (std::size_t i = 0; i < instances; ++i) {
      const auto r = fn(derive_seed({0x6C4D, i}));
      ++s.instances;
      if (r.ok()) ++s.passed;
      if (r.worst_ratio >= s.worst_ratio) {
        s.worst_ratio = r.worst_ratio;
        s.worst_at = r.worst_at;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace certmark::testing
