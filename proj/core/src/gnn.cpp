#include "certmark/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "certmark/hashing.hpp"
#include "certmark/optim.hpp"

namespace certmark {

std::string_view to_string(ConvType type) {
  switch (type) {
    case ConvType::kGin: return "GIN";
    case ConvType::kGcn: return "GCN";
    case ConvType::kGsage: return "GSAGE";
  }
  return "?";
}

ConvType parse_conv_type(std::string_view text) {
  std::string upper(text);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "GIN") return ConvType::kGin;
  if (upper == "GCN") return ConvType::kGcn;
  if (upper == "GSAGE" || upper == "SAGE" || upper == "GRAPHSAGE") return ConvType::kGsage;
  fail(ErrorKind::kConfig, "unknown conv type '" + std::string(text) + "' (expected GIN, GCN or GSAGE)");
}

namespace {

std::string layer_prefix(std::size_t l) { return "layer" + std::to_string(l) + "."; }

void add_uniform(ParameterSet<float>& params, const std::string& name, std::vector<std::size_t> shape,
                 std::size_t fan_in, Rng& rng) {
  Tensor<float> t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.values) v = static_cast<float>(rng.uniform(-bound, bound));
  params.add(name, std::move(t));
}

void add_linear(ParameterSet<float>& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
  add_uniform(params, prefix + "weight", {in, out}, in, rng);
  add_uniform(params, prefix + "bias", {out}, in, rng);
}

}  // namespace

SubmodelConfig submodel_config(std::size_t k, ConvType conv, std::size_t in_dim, std::size_t out_dim) {
  static constexpr std::size_t kFinal[4] = {64, 32, 16, 8};
  SubmodelConfig c;
  c.conv = conv;
  c.in_dim = in_dim;
  c.out_dim = out_dim;
  if (k < 4) {
    c.hidden_width = 64;
  } else if (k < 8) {
    c.hidden_width = 128;
  } else {
    c.hidden_width = k % 2 == 0 ? 72 : 96;
  }
  c.final_width = kFinal[k % 4];
  return c;
}

Submodel build_submodel(const SubmodelConfig& config, std::uint64_t seed) {
  require(config.in_dim > 0 && config.out_dim > 0, ErrorKind::kConfig, "submodel needs positive input/output dims");
  require(config.conv_layers == 4, ErrorKind::kConfig, "submodels have exactly 4 conv blocks");
  Rng rng(seed);
  Submodel m;
  m.config = config;
  auto& p = m.params;
  add_linear(p, "layer0.readout.", config.in_dim, config.out_dim, rng);
  std::size_t in = config.in_dim;
  for (std::size_t l = 1; l <= config.conv_layers; ++l) {
    const std::size_t out = config.block_width(l);
    const auto pre = layer_prefix(l);
    if (config.conv == ConvType::kGsage) {
      add_uniform(p, pre + "conv.weight_neighbor", {in, out}, in, rng);
      add_uniform(p, pre + "conv.weight_self", {in, out}, in, rng);
    } else {
      add_uniform(p, pre + "conv.weight", {in, out}, in, rng);
    }
    p.add(pre + "bn.weight", Tensor<float>({out}, 1.0f));
    p.add(pre + "bn.bias", Tensor<float>({out}, 0.0f));
    p.add(pre + "bn.running_mean", Tensor<float>({out}, 0.0f, false));
    p.add(pre + "bn.running_var", Tensor<float>({out}, 1.0f, false));
    add_linear(p, pre + "readout.", out, config.out_dim, rng);
    in = out;
  }
  return m;
}

EnsembleModel build_ensemble(std::size_t S, ConvType conv, std::size_t in_dim, std::size_t out_dim,
                             std::uint64_t seed) {
  require(S == 1 || S == 2 || S == 4 || S == 8 || S == 16, ErrorKind::kConfig,
          "unsupported ensemble size S=" + std::to_string(S) + " (expected 1, 2, 4, 8 or 16)");
  EnsembleModel model;
  for (std::size_t k = 0; k < S; ++k) {
    model.submodels.push_back(build_submodel(submodel_config(k, conv, in_dim, out_dim), derive_seed({seed, 0x5B, k})));
  }
  return model;
}

std::vector<LayerId> EnsembleModel::layer_ids() const {
  std::vector<LayerId> ids;
  for (std::size_t s = 0; s < submodels.size(); ++s)
    for (std::size_t l = 0; l < kLayersPerSubmodel; ++l) ids.push_back({s, l});
  return ids;
}

ParameterSet<float> EnsembleModel::flatten() const {
  ParameterSet<float> flat;
  for (std::size_t s = 0; s < submodels.size(); ++s) {
    const std::string pre = "sub" + std::to_string(s) + ".";
    for (const auto& [name, t] : submodels[s].params) flat.add(pre + name, t);
  }
  return flat;
}

void EnsembleModel::assign(const ParameterSet<float>& flat) {
  std::size_t i = 0;
  for (std::size_t s = 0; s < submodels.size(); ++s) {
    const std::string pre = "sub" + std::to_string(s) + ".";
    for (auto& [name, t] : submodels[s].params) {
      require(i < flat.size(), ErrorKind::kContract, "parameter set too short for ensemble");
      const auto& [fname, ft] = flat.entry(i++);
      require(fname == pre + name && ft.shape == t.shape, ErrorKind::kContract,
              "parameter layout mismatch at '" + fname + "' (expected '" + pre + name + "' " + shape_string(t.shape) +
                  ")");
      t.values = ft.values;
    }
  }
  require(i == flat.size(), ErrorKind::kContract, "parameter set has extra entries");
}

std::string EnsembleModel::architecture_hash() const {
  std::ostringstream os;
  for (std::size_t s = 0; s < submodels.size(); ++s) {
    const auto& c = submodels[s].config;
    os << s << ':' << to_string(c.conv) << ':' << c.hidden_width << ':' << c.final_width << ':' << c.conv_layers << ':'
       << c.in_dim << ':' << c.out_dim << '\n';
    for (const auto& [name, t] : submodels[s].params) os << name << shape_string(t.shape) << '\n';
  }
  return sha256_hex(os.str());
}

namespace {

template <typename G>
GraphBatch make_batch_impl(std::span<G> graphs, auto&& deref) {
  GraphBatch b;
  for (auto& item : graphs) {
    const Graph& g = deref(item);
    if (b.labels.empty()) {
      b.feature_dim = g.feature_dim;
    } else {
      require(g.feature_dim == b.feature_dim, ErrorKind::kShape, "graphs in a batch disagree on feature width");
    }
    const std::size_t base = b.node_count();
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      for (auto k : g.neighbors[v]) b.col_idx.push_back(static_cast<std::uint32_t>(base + k));
      b.row_ptr.push_back(b.col_idx.size());
    }
    b.features.insert(b.features.end(), g.features.begin(), g.features.end());
    b.offsets.push_back(base + g.node_count());
    b.labels.push_back(g.label);
  }
  return b;
}

}  // namespace

GraphBatch make_batch(std::span<const Graph* const> graphs) {
  return make_batch_impl(graphs, [](const Graph* g) -> const Graph& { return *g; });
}

GraphBatch make_batch(std::span<const Graph> graphs) {
  return make_batch_impl(graphs, [](const Graph& g) -> const Graph& { return g; });
}

template <typename T>
CsrMatrix<T> propagation_operator(const GraphBatch& batch, ConvType conv) {
  const std::size_t n = batch.node_count();
  CsrMatrix<T> m;
  m.rows = m.cols = n;
  m.row_ptr.assign(1, 0);
  auto deg = [&](std::size_t v) { return batch.row_ptr[v + 1] - batch.row_ptr[v]; };
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t b = batch.row_ptr[v], e = batch.row_ptr[v + 1];
    if (conv == ConvType::kGsage) {
      const T w = deg(v) == 0 ? T(0) : T(1) / static_cast<T>(deg(v));
      for (std::size_t i = b; i < e; ++i) {
        m.col_idx.push_back(batch.col_idx[i]);
        m.values.push_back(w);
      }
    } else {
      // Neighbors are sorted, so the self entry is spliced in at its place.
      bool self_done = false;
      auto push = [&](std::uint32_t k) {
        T w = T(1);
        if (conv == ConvType::kGcn) {
          w = T(1) / std::sqrt(static_cast<T>(deg(v) + 1) * static_cast<T>(deg(k) + 1));
        }
        m.col_idx.push_back(k);
        m.values.push_back(w);
      };
      for (std::size_t i = b; i < e; ++i) {
        if (!self_done && batch.col_idx[i] > v) {
          push(static_cast<std::uint32_t>(v));
          self_done = true;
        }
        push(batch.col_idx[i]);
      }
      if (!self_done) push(static_cast<std::uint32_t>(v));
    }
    m.row_ptr.push_back(m.col_idx.size());
  }
  return m;
}

template <typename T>
Var<T> dense_propagation_operator(Var<T> adjacency, ConvType conv) {
  switch (conv) {
    case ConvType::kGin: return add_identity(adjacency);
    case ConvType::kGcn: {
      auto a_hat = add_identity(adjacency);
      auto d = safe_pow(row_sum(a_hat), T(-0.5));
      return scale_cols(scale_rows(a_hat, d), d);
    }
    case ConvType::kGsage: {
      auto inv = safe_pow(row_sum(adjacency), T(-1));
      return scale_rows(adjacency, inv);
    }
  }
  fail(ErrorKind::kContract, "unknown conv type");
}

namespace {

template <typename T>
Var<T> propagate(const ForwardInput<T>& in, Var<T> x) {
  if (in.sparse != nullptr) return spmm(*in.sparse, x);
  require(in.dense.has_value(), ErrorKind::kContract, "forward input has no propagation operator");
  return matmul(*in.dense, x);
}

// Shared body of the two forward modes. `bind` turns a named parameter into a
// tape variable; `norm` applies batch norm for block l.
template <typename T, typename Bind, typename Norm>
Var<T> forward_body(const SubmodelConfig& config, const ForwardInput<T>& in, Bind&& bind, Norm&& norm) {
  require(in.features.cols() == config.in_dim, ErrorKind::kShape,
          "feature width " + std::to_string(in.features.cols()) + " does not match model input " +
              std::to_string(config.in_dim));
  auto readout = [&](Var<T> h, const std::string& pre) {
    auto pooled = sum_pool_rows(h, in.offsets);
    return add_bias(matmul(pooled, bind(pre + "readout.weight")), bind(pre + "readout.bias"));
  };
  Var<T> h = in.features;
  Var<T> logits = readout(h, "layer0.");
  for (std::size_t l = 1; l <= config.conv_layers; ++l) {
    const auto pre = layer_prefix(l);
    Var<T> z;
    if (config.conv == ConvType::kGsage) {
      z = add(propagate(in, matmul(h, bind(pre + "conv.weight_neighbor"))), matmul(h, bind(pre + "conv.weight_self")));
    } else {
      z = propagate(in, matmul(h, bind(pre + "conv.weight")));
    }
    h = relu(norm(z, pre));
    logits = add(logits, readout(h, pre));
  }
  return logits;
}

}  // namespace

template <typename T>
Var<T> submodel_forward_train(Tape<T>& tape, const SubmodelConfig& config, ParameterSet<T>& params,
                              const ForwardInput<T>& input) {
  auto bind = [&](const std::string& name) { return tape.parameter(params.at(name)); };
  auto norm = [&](Var<T> z, const std::string& pre) {
    return batch_norm(z, bind(pre + "bn.weight"), bind(pre + "bn.bias"), params.at(pre + "bn.running_mean"),
                      params.at(pre + "bn.running_var"), BatchNormOptions{});
  };
  return forward_body<T>(config, input, bind, norm);
}

template <typename T>
Var<T> submodel_forward_eval(Tape<T>& tape, const SubmodelConfig& config, const ParameterSet<T>& params,
                             const ForwardInput<T>& input) {
  auto bind = [&](const std::string& name) { return tape.constant(params.at(name)); };
  auto norm = [&](Var<T> z, const std::string& pre) {
    return batch_norm_eval(z, bind(pre + "bn.weight"), bind(pre + "bn.bias"), params.at(pre + "bn.running_mean"),
                           params.at(pre + "bn.running_var"));
  };
  return forward_body<T>(config, input, bind, norm);
}

std::vector<float> submodel_logits(const Submodel& m, const GraphBatch& batch) {
  if (batch.graph_count() == 0) return {};
  Tape<float> tape;
  const auto op = propagation_operator<float>(batch, m.config.conv);
  ForwardInput<float> in{tape.constant(batch.node_count(), batch.feature_dim, batch.features), batch.offsets, &op, {}};
  return submodel_forward_eval(tape, m.config, m.params, in).value();
}

std::vector<float> submodel_logits(const Submodel& m, const Graph& g) {
  return submodel_logits(m, make_batch(std::span<const Graph>(&g, 1)));
}

int argmax(std::span<const float> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

VoteCount tally_votes(std::span<const int> votes, std::size_t num_classes) {
  VoteCount v;
  v.counts.assign(num_classes, 0);
  for (int label : votes) {
    require(label >= 0 && static_cast<std::size_t>(label) < num_classes, ErrorKind::kContract, "vote out of range");
    ++v.counts[static_cast<std::size_t>(label)];
  }
  v.predicted = 0;
  for (std::size_t c = 1; c < num_classes; ++c)
    if (v.counts[c] > v.counts[static_cast<std::size_t>(v.predicted)]) v.predicted = static_cast<int>(c);
  return v;
}

namespace {
constexpr std::size_t kEvalChunk = 256;
}

std::vector<int> submodel_predict(const Submodel& m, std::span<const Graph> graphs) {
  std::vector<int> out;
  out.reserve(graphs.size());
  const std::size_t c = m.config.out_dim;
  for (std::size_t start = 0; start < graphs.size(); start += kEvalChunk) {
    const auto chunk = graphs.subspan(start, std::min(kEvalChunk, graphs.size() - start));
    const auto logits = submodel_logits(m, make_batch(chunk));
    for (std::size_t g = 0; g < chunk.size(); ++g)
      out.push_back(argmax(std::span<const float>(logits).subspan(g * c, c)));
  }
  return out;
}

SubmodelPredictions submodel_predictions(const EnsembleModel& model, std::span<const Graph> graphs) {
  SubmodelPredictions p;
  for (const auto& m : model.submodels) p.push_back(submodel_predict(m, graphs));
  return p;
}

std::vector<VoteCount> votes_from_predictions(const SubmodelPredictions& predictions, std::size_t num_classes) {
  std::vector<VoteCount> out;
  if (predictions.empty()) return out;
  const std::size_t graphs = predictions.front().size();
  std::vector<int> column(predictions.size());
  for (std::size_t g = 0; g < graphs; ++g) {
    for (std::size_t s = 0; s < predictions.size(); ++s) column[s] = predictions[s][g];
    out.push_back(tally_votes(column, num_classes));
  }
  return out;
}

std::vector<VoteCount> ensemble_votes(const EnsembleModel& model, std::span<const Graph> graphs) {
  return votes_from_predictions(submodel_predictions(model, graphs), model.num_classes());
}

VoteCount ensemble_predict(const EnsembleModel& model, const Graph& g) {
  return ensemble_votes(model, std::span<const Graph>(&g, 1)).front();
}

int ensemble_predict_sum(const EnsembleModel& model, const Graph& g) {
  const std::size_t c = model.num_classes();
  std::vector<double> total(c, 0.0);
  for (const auto& m : model.submodels) {
    const auto logits = submodel_logits(m, g);
    const float mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    std::vector<double> e(c);
    for (std::size_t j = 0; j < c; ++j) z += e[j] = std::exp(static_cast<double>(logits[j] - mx));
    for (std::size_t j = 0; j < c; ++j) total[j] += e[j] / z;
  }
  int best = 0;
  for (std::size_t j = 1; j < c; ++j)
    if (total[j] > total[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  return best;
}

EnsembleModel replace_layer(const EnsembleModel& model, LayerId layer, const EnsembleModel& donor) {
  require(model.architecture_hash() == donor.architecture_hash(), ErrorKind::kContract,
          "replace_layer donor architecture differs from the model");
  require(layer.submodel < model.size() && layer.layer < kLayersPerSubmodel, ErrorKind::kContract,
          "layer id " + layer.name() + " out of range");
  EnsembleModel out = model;
  const auto pre = layer_prefix(layer.layer);
  auto& dst = out.submodels[layer.submodel].params;
  const auto& src = donor.submodels[layer.submodel].params;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst.entry(i).first.starts_with(pre)) dst.entry(i).second.values = src.entry(i).second.values;
  }
  return out;
}

double train_submodel_epoch(Submodel& m, std::span<const Graph> graphs, std::span<const int> labels, float lr,
                            std::size_t batch_size, Rng& rng) {
  if (graphs.empty()) return 0.0;
  require(labels.empty() || labels.size() == graphs.size(), ErrorKind::kContract, "label override length mismatch");
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (graphs.size() > batch_size) rng.shuffle(order.begin(), order.end());
  double total = 0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<const Graph*> members;
    std::vector<int> targets;
    for (std::size_t i = start; i < end; ++i) {
      members.push_back(&graphs[order[i]]);
      targets.push_back(labels.empty() ? graphs[order[i]].label : labels[order[i]]);
    }
    const auto batch = make_batch(members);
    Tape<float> tape;
    const auto op = propagation_operator<float>(batch, m.config.conv);
    ForwardInput<float> in{tape.constant(batch.node_count(), batch.feature_dim, batch.features), batch.offsets, &op,
                           {}};
    auto loss = softmax_cross_entropy(submodel_forward_train(tape, m.config, m.params, in), std::span<const int>(targets));
    tape.backward(loss);
    sgd_step(m.params, lr);
    total += loss.value()[0];
    ++batches;
  }
  return total / static_cast<double>(batches);
}

template CsrMatrix<float> propagation_operator<float>(const GraphBatch&, ConvType);
template CsrMatrix<double> propagation_operator<double>(const GraphBatch&, ConvType);
template Var<float> dense_propagation_operator<float>(Var<float>, ConvType);
template Var<double> dense_propagation_operator<double>(Var<double>, ConvType);
template Var<float> submodel_forward_train<float>(Tape<float>&, const SubmodelConfig&, ParameterSet<float>&,
                                                  const ForwardInput<float>&);
template Var<double> submodel_forward_train<double>(Tape<double>&, const SubmodelConfig&, ParameterSet<double>&,
                                                    const ForwardInput<double>&);
template Var<float> submodel_forward_eval<float>(Tape<float>&, const SubmodelConfig&, const ParameterSet<float>&,
                                                 const ForwardInput<float>&);
template Var<double> submodel_forward_eval<double>(Tape<double>&, const SubmodelConfig&, const ParameterSet<double>&,
                                                   const ForwardInput<double>&);

}  // namespace certmark
