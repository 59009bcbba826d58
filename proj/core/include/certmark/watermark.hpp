#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "certmark/autograd.hpp"
#include "certmark/gnn.hpp"
#include "certmark/graph.hpp"

namespace certmark {

struct WatermarkSpec {
  std::size_t n_w = 4;
  int target_label = 0;
  double watermark_fraction = 0.10;

  friend bool operator==(const WatermarkSpec&, const WatermarkSpec&) = default;
};

struct ClientKey {
  std::string client_id;
  std::size_t n = 0;
  std::vector<float> matrix;  // n x n, symmetric, entries in [0, 1)
};

// Seed = low 64 bits of MD5(client_id); entries drawn row-major from a
// splitmix64 stream as (z >> 11) * 2^-53; the upper triangle is copied down.
ClientKey derive_key_matrix(const std::string& client_id, std::size_t n);

// n_w distinct nodes in ascending order, or nullopt when the graph is too small.
std::optional<std::vector<std::uint32_t>> select_watermark_nodes(const Graph& g, std::size_t n_w, std::uint64_t seed);
// n x n 0/1 mask with ones on ordered pairs of distinct selected nodes.
std::vector<std::uint8_t> build_mask(std::span<const std::uint32_t> nodes, std::size_t n);

// Edge pattern among the watermark nodes: n_w x n_w, symmetric, zero diagonal,
// pattern[a * n_w + b] refers to nodes[a], nodes[b].
struct WatermarkPattern {
  std::size_t n_w = 0;
  std::vector<std::uint8_t> edges;

  std::size_t edge_count() const;
  friend bool operator==(const WatermarkPattern&, const WatermarkPattern&) = default;
};

// Copy of g with every pair among `nodes` replaced by the pattern; label set to
// `label`. Features and node count are unchanged.
Graph apply_watermark(const Graph& g, const WatermarkPattern& pattern, std::span<const std::uint32_t> nodes, int label);

// g with every edge among `nodes` removed.
Graph clear_watermark_pairs(const Graph& g, std::span<const std::uint32_t> nodes);

// Each unordered pair independently present with probability p.
WatermarkPattern er_random_watermark(std::size_t n_w, double p, std::uint64_t seed);

inline constexpr double kErEdgeProbability = 0.5;
inline constexpr float kCwgDropout = 0.05f;

// GatingNet and KeyNet: three Linear-n_max layers each, ReLU + Dropout after
// the first two and Sigmoid after the last. Local names
// {gating,key}.linear{0,1,2}.{weight,bias}.
struct CwgParams {
  std::size_t n_max = 0;
  ParameterSet<float> params;
};

CwgParams build_cwg(std::size_t n_max, std::uint64_t seed);

template <typename T>
struct CwgOutput {
  Var<T> gated;  // GatingNet(A_pad rows), (B * n_max) x n_max
  Var<T> keyed;  // KeyNet(K), n_max x n_max
};

// Runs both nets. `a_pad` stacks B zero-padded adjacency matrices vertically.
// trainable: parameters enter as gradient leaves; training: dropout active.
template <typename T>
CwgOutput<T> cwg_nets(Tape<T>& tape, Var<T> a_pad, Var<T> key, ParameterSet<T>& params, bool trainable,
                      bool training, Rng& rng);

template <typename T>
struct CwgResult {
  Var<T> soft;  // gated (.) keyed (.) mask
  Var<T> w;     // I(soft > 0.5), symmetrized, straight-through gradient
};

// Single-graph convenience: a_pad and mask are n_max x n_max.
template <typename T>
CwgResult<T> cwg_forward(Tape<T>& tape, const std::vector<T>& a_pad, const ClientKey& key,
                         const std::vector<T>& mask, ParameterSet<T>& params, bool trainable, bool training, Rng& rng);

// Zero-padded adjacency of `g` with pairs among `nodes` cleared.
std::vector<float> padded_adjacency(const Graph& g, std::span<const std::uint32_t> nodes, std::size_t n_max);

// Deterministic (eval mode) watermark pattern for one graph.
WatermarkPattern generate_watermark(const CwgParams& cwg, const ClientKey& key, const Graph& g,
                                    std::span<const std::uint32_t> nodes);

struct CwgSample {
  const Graph* base = nullptr;
  std::vector<std::uint32_t> nodes;
};

// One SGD step on the mean (over submodels and samples) cross-entropy of the
// frozen ensemble on the generated watermarked graphs, w.r.t. CWG parameters
// only. Returns the loss before the step; an empty batch is a no-op.
double train_cwg_step(CwgParams& cwg, const ClientKey& key, const EnsembleModel& model,
                      std::span<const CwgSample> batch, int label, float lr, Rng& rng);

struct WatermarkedGraph {
  Graph graph;  // result graph, label = target
  std::int64_t base_graph_id = 0;
  std::vector<std::uint32_t> nodes;
  int client = -1;  // owning client; -1 for a global (all-client) watermark
  bool fallback = false;
};

// Random-graph baseline: a fresh ER pattern per watermarked graph, seeded by
// (seed, graph id, watermark nodes).
struct RandomPatternSource {
  double p = kErEdgeProbability;
  std::uint64_t seed = 0;
};

// Where a client's watermark comes from: a learned CWG, a fixed pattern, or
// the random-graph baseline (checked in that order of precedence: fixed, random, CWG).
struct WatermarkSource {
  std::size_t client = 0;
  const CwgParams* cwg = nullptr;
  const ClientKey* key = nullptr;
  std::optional<WatermarkPattern> fixed_pattern;
  std::optional<RandomPatternSource> random;

  WatermarkPattern pattern_for(const Graph& g, std::span<const std::uint32_t> nodes) const;
};

enum class WatermarkMode { kPerClient, kGlobal };

std::string_view to_string(WatermarkMode mode);
WatermarkMode parse_watermark_mode(std::string_view text);

// Node seed for test-time watermark placement.
std::uint64_t test_node_seed(std::uint64_t seed, std::size_t client, std::int64_t graph_id);
// Node seed for a client's training watermark graphs.
std::uint64_t train_node_seed(std::uint64_t seed, std::size_t client, std::int64_t graph_id);

// Uses test graphs whose label differs from spec.target_label.
std::vector<WatermarkedGraph> build_watermark_testset(const Dataset& test, std::span<const WatermarkSource> sources,
                                                      const WatermarkSpec& spec, WatermarkMode mode,
                                                      std::uint64_t seed);

}  // namespace certmark
