#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "certmark/aggregation.hpp"
#include "certmark/gnn.hpp"
#include "certmark/graph.hpp"
#include "certmark/record.hpp"
#include "certmark/watermark.hpp"

namespace certmark {

struct FederatedConfig {
  std::size_t clients = 40;
  std::size_t watermarked_clients = 10;
  std::size_t rounds = 200;
  double selection_fraction = 0.5;
  float lr = 0.01f;
  std::size_t local_epochs = 5;
  AggregatorConfig aggregator;
  double malicious_fraction = 0.0;
  int wrong_label = 1;
  float cwg_lr = 0.05f;
  std::size_t cwg_epochs = 1;
  std::size_t batch_size = kDefaultBatchSize;
  // Random-graph baseline: fresh ER patterns replace the learned generator.
  bool random_watermark = false;
  double er_edge_probability = kErEdgeProbability;
  std::size_t threads = 1;
  std::uint64_t seed = 0;

  friend bool operator==(const FederatedConfig&, const FederatedConfig&) = default;
};

struct ModelSpec {
  ConvType conv = ConvType::kGin;
  std::size_t ensemble_size = 4;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ClientWatermarkState {
  std::size_t client = 0;
  ClientKey key;
  CwgParams cwg;
  std::optional<RandomPatternSource> random;  // set for the random-graph baseline
  bool malicious = false;
  int label = 0;  // label the client trains its watermark graphs with

  WatermarkSource source() const;
};

struct ClientState {
  std::size_t index = 0;
  std::vector<std::size_t> graphs;      // indices into the training set
  std::vector<std::size_t> candidates;  // graphs eligible for G_w
  std::optional<ClientWatermarkState> wm;
};

// One round's split of a client's graphs into G_c and G_w.
struct ClientDivision {
  std::vector<std::size_t> clean;
  std::vector<std::size_t> watermark;
  std::vector<std::vector<std::uint32_t>> watermark_nodes;  // parallel to `watermark`
};

struct RoundStats {
  std::size_t round = 0;
  std::vector<std::size_t> selected;
  double train_loss = 0;
  double cwg_loss = 0;
};

nlohmann::ordered_json to_json(const RoundStats& stats);
RoundStats round_stats_from_json(const nlohmann::ordered_json& j);

// ceil(fraction * T) distinct clients, ascending.
std::vector<std::size_t> select_clients(std::uint64_t seed, std::size_t round, std::size_t clients, double fraction);

class FederatedTrainer {
 public:
  FederatedTrainer(const FederatedConfig& config, const ModelSpec& model, const WatermarkSpec& watermark,
                   Dataset train, const ClientPartition& partition);

  void run_round();
  // Runs rounds until round() == last (no-op if already there).
  void run_until(std::size_t last);
  void run() { run_until(config_.rounds); }

  std::size_t round() const { return round_; }
  const FederatedConfig& config() const { return config_; }
  const WatermarkSpec& watermark_spec() const { return watermark_; }
  const EnsembleModel& model() const { return model_; }
  const Dataset& train() const { return train_; }
  const std::vector<ClientState>& clients() const { return clients_; }
  const std::vector<RoundStats>& history() const { return history_; }

  // Watermark sources of all watermarked clients, ascending client index.
  std::vector<WatermarkSource> watermark_sources() const;
  // G_c / G_w are redrawn every round from (seed, round, client).
  ClientDivision divide(std::size_t client, std::size_t round) const;
  // A client's G_w for `round` as watermarked graphs.
  std::vector<Graph> client_watermark_graphs(std::size_t client, std::size_t round) const;

  // Global model (sub{i}.*) followed by client{i}.cwg.* tensors.
  ParameterSet<float> state_tensors() const;
  Record checkpoint(const nlohmann::ordered_json& extra = nlohmann::ordered_json::object()) const;
  void restore(const Record& record);

 private:
  struct LocalResult {
    ParameterSet<float> params;
    double train_loss = 0;
    double cwg_loss = 0;
  };
  LocalResult local_update(std::size_t client);

  FederatedConfig config_;
  ModelSpec spec_;
  WatermarkSpec watermark_;
  Dataset train_;
  EnsembleModel model_;
  std::vector<ClientState> clients_;
  std::vector<RoundStats> history_;
  std::size_t round_ = 0;
};

}  // namespace certmark
