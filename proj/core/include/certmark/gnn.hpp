#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "certmark/autograd.hpp"
#include "certmark/graph.hpp"
#include "certmark/tensor.hpp"

namespace certmark {

enum class ConvType { kGin, kGcn, kGsage };

std::string_view to_string(ConvType type);
ConvType parse_conv_type(std::string_view text);

struct SubmodelConfig {
  ConvType conv = ConvType::kGin;
  std::size_t hidden_width = 64;
  std::size_t final_width = 64;
  std::size_t conv_layers = 4;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;

  // Output width of conv block l in [1, conv_layers].
  std::size_t block_width(std::size_t l) const { return l == conv_layers ? final_width : hidden_width; }
  friend bool operator==(const SubmodelConfig&, const SubmodelConfig&) = default;
};

// Input readout plus one entry per conv block.
inline constexpr std::size_t kLayersPerSubmodel = 5;

struct Submodel {
  SubmodelConfig config;
  // Local names: layer0.readout.{weight,bias}; layer{l}.conv.weight (GSAGE:
  // weight_neighbor, weight_self); layer{l}.bn.{weight,bias,running_mean,
  // running_var}; layer{l}.readout.{weight,bias}. Linear weights are in x out.
  ParameterSet<float> params;
};

struct LayerId {
  std::size_t submodel = 0;
  std::size_t layer = 0;

  std::string name() const { return "sub" + std::to_string(submodel) + ".layer" + std::to_string(layer); }
  friend bool operator==(const LayerId&, const LayerId&) = default;
};

struct EnsembleModel {
  std::vector<Submodel> submodels;

  std::size_t size() const { return submodels.size(); }
  std::size_t num_classes() const { return submodels.empty() ? 0 : submodels.front().config.out_dim; }
  std::vector<LayerId> layer_ids() const;

  // Parameters under global names sub{i}.{local name}, in submodel order.
  ParameterSet<float> flatten() const;
  // Inverse of flatten(); the layout must match exactly.
  void assign(const ParameterSet<float>& flat);
  std::string architecture_hash() const;
};

// Table 7 schedule for the k-th (0-based) submodel.
SubmodelConfig submodel_config(std::size_t k, ConvType conv, std::size_t in_dim, std::size_t out_dim);

Submodel build_submodel(const SubmodelConfig& config, std::uint64_t seed);
EnsembleModel build_ensemble(std::size_t S, ConvType conv, std::size_t in_dim, std::size_t out_dim,
                             std::uint64_t seed);

// Several graphs stacked block-diagonally.
struct GraphBatch {
  std::size_t feature_dim = 0;
  std::vector<float> features;          // total_nodes x feature_dim
  std::vector<std::size_t> offsets{0};  // graph g owns rows [offsets[g], offsets[g+1])
  std::vector<int> labels;
  std::vector<std::size_t> row_ptr{0};  // 0/1 adjacency in CSR form
  std::vector<std::uint32_t> col_idx;

  std::size_t graph_count() const { return offsets.size() - 1; }
  std::size_t node_count() const { return offsets.back(); }
};

GraphBatch make_batch(std::span<const Graph* const> graphs);
GraphBatch make_batch(std::span<const Graph> graphs);

// The message-passing operator P of a conv type: GIN A+I, GCN the symmetric
// normalization of A+I, GSAGE the row-normalized D^-1 A.
template <typename T>
CsrMatrix<T> propagation_operator(const GraphBatch& batch, ConvType conv);

// Same operator built from a differentiable dense adjacency (one graph).
template <typename T>
Var<T> dense_propagation_operator(Var<T> adjacency, ConvType conv);

template <typename T>
struct ForwardInput {
  Var<T> features;
  std::span<const std::size_t> offsets;
  const CsrMatrix<T>* sparse = nullptr;  // exactly one of sparse / dense is set
  std::optional<Var<T>> dense;
};

// Training mode: parameters become trainable leaves and batch norm uses and
// updates batch statistics.
template <typename T>
Var<T> submodel_forward_train(Tape<T>& tape, const SubmodelConfig& config, ParameterSet<T>& params,
                              const ForwardInput<T>& input);
// Eval mode: parameters enter as constants, batch norm uses running statistics.
template <typename T>
Var<T> submodel_forward_eval(Tape<T>& tape, const SubmodelConfig& config, const ParameterSet<T>& params,
                             const ForwardInput<T>& input);

// Per-graph logits (graph_count x C) in eval mode.
std::vector<float> submodel_logits(const Submodel& m, const GraphBatch& batch);
std::vector<float> submodel_logits(const Submodel& m, const Graph& g);

// Index of the largest entry; ties go to the smaller index.
int argmax(std::span<const float> values);

struct VoteCount {
  std::vector<int> counts;
  int predicted = 0;
};

VoteCount tally_votes(std::span<const int> votes, std::size_t num_classes);

// predictions[s][g]: label voted by submodel s on graph g.
using SubmodelPredictions = std::vector<std::vector<int>>;

std::vector<int> submodel_predict(const Submodel& m, std::span<const Graph> graphs);
SubmodelPredictions submodel_predictions(const EnsembleModel& model, std::span<const Graph> graphs);
std::vector<VoteCount> votes_from_predictions(const SubmodelPredictions& predictions, std::size_t num_classes);

std::vector<VoteCount> ensemble_votes(const EnsembleModel& model, std::span<const Graph> graphs);
VoteCount ensemble_predict(const EnsembleModel& model, const Graph& g);
// Argmax of the summed per-submodel softmax vectors.
int ensemble_predict_sum(const EnsembleModel& model, const Graph& g);

EnsembleModel replace_layer(const EnsembleModel& model, LayerId layer, const EnsembleModel& donor);

// One pass over `graphs` in mini-batches (full batch when graphs.size() <=
// batch_size, shuffled otherwise). `labels` overrides graph labels when
// non-empty. Returns the mean batch loss.
double train_submodel_epoch(Submodel& m, std::span<const Graph> graphs, std::span<const int> labels, float lr,
                            std::size_t batch_size, Rng& rng);

inline constexpr std::size_t kDefaultBatchSize = 32;

}  // namespace certmark
