#include "certmark/watermark.hpp"

#include <algorithm>
#include <cmath>

#include "certmark/hashing.hpp"
#include "certmark/optim.hpp"

namespace certmark {

ClientKey derive_key_matrix(const std::string& client_id, std::size_t n) {
  require(!client_id.empty(), ErrorKind::kContract, "client id must be non-empty");
  ClientKey key;
  key.client_id = client_id;
  key.n = n;
  key.matrix.resize(n * n);
  std::uint64_t state = md5_low64(client_id);
  for (auto& v : key.matrix) {
    const std::uint64_t z = splitmix64(state);
    state += 0x9E3779B97F4A7C15ULL;
    v = static_cast<float>(static_cast<double>(z >> 11) * 0x1.0p-53);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) key.matrix[j * n + i] = key.matrix[i * n + j];
  return key;
}

std::optional<std::vector<std::uint32_t>> select_watermark_nodes(const Graph& g, std::size_t n_w, std::uint64_t seed) {
  require(n_w >= 2, ErrorKind::kConfig, "watermark needs at least 2 nodes");
  if (g.node_count() < n_w) return std::nullopt;
  std::vector<std::uint32_t> all(g.node_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_w; ++i) {
    const auto j = i + rng.below(all.size() - i);
    std::swap(all[i], all[j]);
  }
  all.resize(n_w);
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<std::uint8_t> build_mask(std::span<const std::uint32_t> nodes, std::size_t n) {
  std::vector<std::uint8_t> m(n * n, 0);
  for (auto a : nodes)
    for (auto b : nodes) {
      require(a < n && b < n, ErrorKind::kShape, "watermark node outside mask");
      if (a != b) m[a * n + b] = 1;
    }
  return m;
}

std::size_t WatermarkPattern::edge_count() const {
  std::size_t c = 0;
  for (std::size_t a = 0; a < n_w; ++a)
    for (std::size_t b = a + 1; b < n_w; ++b) c += edges[a * n_w + b];
  return c;
}

Graph clear_watermark_pairs(const Graph& g, std::span<const std::uint32_t> nodes) {
  Graph out = g;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b) out.set_edge(nodes[a], nodes[b], false);
  return out;
}

Graph apply_watermark(const Graph& g, const WatermarkPattern& pattern, std::span<const std::uint32_t> nodes,
                      int label) {
  require(pattern.n_w == nodes.size() && pattern.edges.size() == nodes.size() * nodes.size(), ErrorKind::kShape,
          "watermark pattern does not match the node list");
  Graph out = g;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      const bool on = pattern.edges[a * nodes.size() + b] != 0 || pattern.edges[b * nodes.size() + a] != 0;
      out.set_edge(nodes[a], nodes[b], on);
    }
  out.label = label;
  return out;
}

WatermarkPattern er_random_watermark(std::size_t n_w, double p, std::uint64_t seed) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::kConfig, "edge probability must lie in [0, 1]");
  WatermarkPattern w{n_w, std::vector<std::uint8_t>(n_w * n_w, 0)};
  Rng rng(seed);
  for (std::size_t a = 0; a < n_w; ++a)
    for (std::size_t b = a + 1; b < n_w; ++b) {
      const std::uint8_t on = rng.bernoulli(p) ? 1 : 0;
      w.edges[a * n_w + b] = on;
      w.edges[b * n_w + a] = on;
    }
  return w;
}

CwgParams build_cwg(std::size_t n_max, std::uint64_t seed) {
  require(n_max >= 2, ErrorKind::kConfig, "watermark generator width must be at least 2");
  CwgParams cwg;
  cwg.n_max = n_max;
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(n_max));
  // Final biases start at logit(sqrt(0.5)) so the product of the two sigmoid
  // outputs begins near the 0.5 threshold instead of well below it.
  const float final_bias = static_cast<float>(std::log(std::sqrt(0.5) / (1.0 - std::sqrt(0.5))));
  for (const char* net : {"gating", "key"}) {
    for (int l = 0; l < 3; ++l) {
      const std::string pre = std::string(net) + ".linear" + std::to_string(l) + ".";
      Tensor<float> w({n_max, n_max});
      for (auto& v : w.values) v = static_cast<float>(rng.uniform(-bound, bound));
      Tensor<float> b({n_max});
      for (auto& v : b.values) v = static_cast<float>(rng.uniform(-bound, bound)) + (l == 2 ? final_bias : 0.0f);
      cwg.params.add(pre + "weight", std::move(w));
      cwg.params.add(pre + "bias", std::move(b));
    }
  }
  return cwg;
}

template <typename T>
CwgOutput<T> cwg_nets(Tape<T>& tape, Var<T> a_pad, Var<T> key, ParameterSet<T>& params, bool trainable,
                      bool training, Rng& rng) {
  auto bind = [&](const std::string& name) {
    return trainable ? tape.parameter(params.at(name)) : tape.constant(params.at(name));
  };
  auto net = [&](const std::string& prefix, Var<T> x) {
    for (int l = 0; l < 3; ++l) {
      const std::string pre = prefix + ".linear" + std::to_string(l) + ".";
      x = add_bias(matmul(x, bind(pre + "weight")), bind(pre + "bias"));
      x = l < 2 ? dropout(relu(x), static_cast<T>(kCwgDropout), rng, training) : sigmoid(x);
    }
    return x;
  };
  return {net("gating", a_pad), net("key", key)};
}

template <typename T>
CwgResult<T> cwg_forward(Tape<T>& tape, const std::vector<T>& a_pad, const ClientKey& key,
                         const std::vector<T>& mask, ParameterSet<T>& params, bool trainable, bool training, Rng& rng) {
  const std::size_t n = key.n;
  require(a_pad.size() == n * n && mask.size() == n * n, ErrorKind::kShape,
          "watermark generator inputs must be " + shape_string({n, n}));
  std::vector<T> k(key.matrix.begin(), key.matrix.end());
  auto out = cwg_nets(tape, tape.constant(n, n, a_pad), tape.constant(n, n, std::move(k)), params, trainable,
                      training, rng);
  auto soft = mul(mul(out.gated, out.keyed), tape.constant(n, n, mask));
  return {soft, threshold_ste(soft, true)};
}

std::vector<float> padded_adjacency(const Graph& g, std::span<const std::uint32_t> nodes, std::size_t n_max) {
  require(g.node_count() <= n_max, ErrorKind::kShape,
          "graph with " + std::to_string(g.node_count()) + " nodes exceeds generator width " + std::to_string(n_max));
  std::vector<float> a(n_max * n_max, 0.0f);
  for (std::size_t v = 0; v < g.node_count(); ++v)
    for (auto k : g.neighbors[v]) a[v * n_max + k] = 1.0f;
  for (auto x : nodes)
    for (auto y : nodes) a[x * n_max + y] = 0.0f;
  return a;
}

namespace {

WatermarkPattern pattern_from_dense(const std::vector<float>& w, std::size_t n_max,
                                    std::span<const std::uint32_t> nodes) {
  WatermarkPattern p{nodes.size(), std::vector<std::uint8_t>(nodes.size() * nodes.size(), 0)};
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = 0; b < nodes.size(); ++b)
      if (a != b) p.edges[a * nodes.size() + b] = w[nodes[a] * n_max + nodes[b]] > 0.5f ? 1 : 0;
  return p;
}

}  // namespace

WatermarkPattern generate_watermark(const CwgParams& cwg, const ClientKey& key, const Graph& g,
                                    std::span<const std::uint32_t> nodes) {
  require(key.n == cwg.n_max, ErrorKind::kShape, "key matrix width differs from generator width");
  Tape<float> tape;
  Rng unused(0);
  auto a = padded_adjacency(g, nodes, cwg.n_max);
  std::vector<float> mask(cwg.n_max * cwg.n_max);
  const auto m = build_mask(nodes, cwg.n_max);
  std::copy(m.begin(), m.end(), mask.begin());
  // Eval mode: parameters are read only.
  auto& params = const_cast<ParameterSet<float>&>(cwg.params);
  auto out = cwg_forward<float>(tape, a, key, mask, params, false, false, unused);
  return pattern_from_dense(out.w.value(), cwg.n_max, nodes);
}

double train_cwg_step(CwgParams& cwg, const ClientKey& key, const EnsembleModel& model,
                      std::span<const CwgSample> batch, int label, float lr, Rng& rng) {
  if (batch.empty()) return 0.0;
  const std::size_t n = cwg.n_max;
  require(key.n == n, ErrorKind::kShape, "key matrix width differs from generator width");
  Tape<float> tape;
  std::vector<float> stacked;
  stacked.reserve(batch.size() * n * n);
  for (const auto& s : batch) {
    const auto a = padded_adjacency(*s.base, s.nodes, n);
    stacked.insert(stacked.end(), a.begin(), a.end());
  }
  auto nets = cwg_nets<float>(tape, tape.constant(batch.size() * n, n, std::move(stacked)),
                              tape.constant(n, n, key.matrix), cwg.params, true, true, rng);
  const std::vector<int> target{label};
  Var<float> total{};
  bool first = true;
  // Operators must outlive the tape's backward pass.
  std::vector<std::vector<std::size_t>> offsets;
  offsets.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Graph& g = *batch[i].base;
    const std::size_t nodes = g.node_count();
    std::vector<float> mask(n * n);
    const auto m = build_mask(batch[i].nodes, n);
    std::copy(m.begin(), m.end(), mask.begin());
    auto soft = mul(mul(slice(nets.gated, i * n, 0, n, n), nets.keyed), tape.constant(n, n, std::move(mask)));
    auto w = threshold_ste(soft, true);
    const auto a = padded_adjacency(g, batch[i].nodes, nodes);
    auto adjacency = add(tape.constant(nodes, nodes, a), slice(w, 0, 0, nodes, nodes));
    offsets.push_back({0, nodes});
    const auto features = tape.constant(nodes, g.feature_dim, g.features);
    for (const auto& sub : model.submodels) {
      ForwardInput<float> in{features, offsets.back(), nullptr, dense_propagation_operator(adjacency, sub.config.conv)};
      auto loss = softmax_cross_entropy(submodel_forward_eval(tape, sub.config, sub.params, in),
                                        std::span<const int>(target));
      total = first ? loss : add(total, loss);
      first = false;
    }
  }
  total = scale(total, 1.0f / static_cast<float>(batch.size() * model.size()));
  const double value = total.value()[0];
  tape.backward(total);
  sgd_step(cwg.params, lr);
  return value;
}

WatermarkPattern WatermarkSource::pattern_for(const Graph& g, std::span<const std::uint32_t> nodes) const {
  if (fixed_pattern) return *fixed_pattern;
  if (random) {
    std::uint64_t h = derive_seed({random->seed, static_cast<std::uint64_t>(g.graph_id)});
    for (auto v : nodes) h = derive_seed({h, v});
    return er_random_watermark(nodes.size(), random->p, h);
  }
  require(cwg != nullptr && key != nullptr, ErrorKind::kContract, "watermark source has no generator");
  return generate_watermark(*cwg, *key, g, nodes);
}

std::string_view to_string(WatermarkMode mode) {
  return mode == WatermarkMode::kGlobal ? "global" : "per_client";
}

WatermarkMode parse_watermark_mode(std::string_view text) {
  if (text == "per_client" || text == "local") return WatermarkMode::kPerClient;
  if (text == "global") return WatermarkMode::kGlobal;
  fail(ErrorKind::kConfig, "unknown watermark mode '" + std::string(text) + "' (expected per_client or global)");
}

std::uint64_t test_node_seed(std::uint64_t seed, std::size_t client, std::int64_t graph_id) {
  return derive_seed({seed, 0x7E57ULL, client, static_cast<std::uint64_t>(graph_id)});
}

std::uint64_t train_node_seed(std::uint64_t seed, std::size_t client, std::int64_t graph_id) {
  return derive_seed({seed, 0x7EA1ULL, client, static_cast<std::uint64_t>(graph_id)});
}

namespace {

void add_per_client(std::vector<WatermarkedGraph>& out, const Graph& g, std::span<const WatermarkSource> sources,
                    const WatermarkSpec& spec, std::uint64_t seed, bool fallback) {
  for (const auto& src : sources) {
    auto nodes = select_watermark_nodes(g, spec.n_w, test_node_seed(seed, src.client, g.graph_id));
    if (!nodes) continue;
    WatermarkedGraph wg;
    wg.graph = apply_watermark(g, src.pattern_for(g, *nodes), *nodes, spec.target_label);
    wg.base_graph_id = g.graph_id;
    wg.nodes = std::move(*nodes);
    wg.client = static_cast<int>(src.client);
    wg.fallback = fallback;
    out.push_back(std::move(wg));
  }
}

}  // namespace

std::vector<WatermarkedGraph> build_watermark_testset(const Dataset& test, std::span<const WatermarkSource> sources,
                                                      const WatermarkSpec& spec, WatermarkMode mode,
                                                      std::uint64_t seed) {
  std::vector<WatermarkedGraph> out;
  const std::size_t block = spec.n_w;
  const std::size_t total = block * sources.size();
  for (const auto& g : test.graphs) {
    if (g.label == spec.target_label) continue;
    if (mode == WatermarkMode::kPerClient || sources.size() <= 1) {
      add_per_client(out, g, sources, spec, seed, false);
      continue;
    }
    if (g.node_count() < total) {
      add_per_client(out, g, sources, spec, seed, true);
      continue;
    }
    auto all = select_watermark_nodes(g, total, derive_seed({seed, 0x610BULL, static_cast<std::uint64_t>(g.graph_id)}));
    Graph result = clear_watermark_pairs(g, *all);
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const std::span<const std::uint32_t> nodes(all->data() + i * block, block);
      const auto pattern = sources[i].pattern_for(g, nodes);
      for (std::size_t a = 0; a < block; ++a)
        for (std::size_t b = a + 1; b < block; ++b)
          if (pattern.edges[a * block + b]) result.set_edge(nodes[a], nodes[b], true);
    }
    for (std::size_t a = 0; a < total; ++a)
      for (std::size_t b = a + 1; b < total; ++b)
        if (a / block != b / block) result.set_edge((*all)[a], (*all)[b], true);
    result.label = spec.target_label;
    WatermarkedGraph wg;
    wg.graph = std::move(result);
    wg.base_graph_id = g.graph_id;
    wg.nodes = std::move(*all);
    out.push_back(std::move(wg));
  }
  return out;
}

template CwgOutput<float> cwg_nets<float>(Tape<float>&, Var<float>, Var<float>, ParameterSet<float>&, bool, bool,
                                          Rng&);
template CwgOutput<double> cwg_nets<double>(Tape<double>&, Var<double>, Var<double>, ParameterSet<double>&, bool,
                                            bool, Rng&);
template CwgResult<float> cwg_forward<float>(Tape<float>&, const std::vector<float>&, const ClientKey&,
                                             const std::vector<float>&, ParameterSet<float>&, bool, bool, Rng&);
template CwgResult<double> cwg_forward<double>(Tape<double>&, const std::vector<double>&, const ClientKey&,
                                               const std::vector<double>&, ParameterSet<double>&, bool, bool, Rng&);

}  // namespace certmark
