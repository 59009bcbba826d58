#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace certmark {

// One labeled graph. The adjacency is kept as sorted neighbor lists; it is
// binary, symmetric and loop-free by construction (see validate()).
struct Graph {
  std::vector<std::vector<std::uint32_t>> neighbors;
  std::vector<float> features;  // node_count x feature_dim, row-major
  std::size_t feature_dim = 0;
  int label = 0;
  std::int64_t graph_id = 0;

  std::size_t node_count() const { return neighbors.size(); }
  std::size_t edge_count() const;
  std::size_t degree(std::size_t node) const { return neighbors[node].size(); }
  bool has_edge(std::size_t j, std::size_t k) const;
  // Sets or clears the undirected edge {j, k}. Self loops are rejected.
  void set_edge(std::size_t j, std::size_t k, bool present);

  // Row-major node_count x node_count 0/1 matrix.
  std::vector<std::uint8_t> dense_adjacency() const;

  // Throws kContract if any structural invariant is broken.
  void validate() const;

  friend bool operator==(const Graph&, const Graph&) = default;
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  std::size_t num_classes = 0;
  std::size_t max_nodes = 0;
  std::size_t feature_dim = 0;
  // raw_labels[c] is the corpus label text mapped to class index c.
  std::vector<std::string> raw_labels;

  std::size_t size() const { return graphs.size(); }
  std::vector<std::size_t> class_counts() const;
  double average_nodes() const;
  double average_edges() const;

  // Copy holding graphs[indices[i]] in order. Corpus-level statistics
  // (num_classes, max_nodes, feature_dim) are inherited, since model widths
  // are fixed per corpus.
  Dataset subset(std::span<const std::size_t> indices) const;
};

// Reads the TU plain-text format from `directory`. The corpus name defaults to
// the directory's basename and is the DS prefix of the files.
Dataset parse_tudataset(const std::filesystem::path& directory, std::string name = {});

inline constexpr std::size_t kMaxDegreeFeatures = 64;

struct DatasetSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// Per-class counts are in class-index order. When `per_class_test` is absent
// the test side holds every graph not drawn for training.
DatasetSplit stratified_split(const Dataset& dataset, std::span<const std::size_t> per_class_train,
                              std::uint64_t seed,
                              std::optional<std::vector<std::size_t>> per_class_test = std::nullopt);

// Stratified split drawing round(train_fraction * class size) graphs per class.
DatasetSplit fraction_split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

enum class PartitionMode { kIid, kLabelSkew };

std::string_view to_string(PartitionMode mode);
PartitionMode parse_partition_mode(std::string_view text);

struct ClientPartition {
  std::vector<std::vector<std::size_t>> assignment;
  PartitionMode mode = PartitionMode::kIid;

  std::size_t clients() const { return assignment.size(); }
};

ClientPartition partition_clients(const Dataset& train, std::size_t clients, PartitionMode mode,
                                  std::uint64_t seed);

std::string dataset_hash(const Dataset& dataset);

}  // namespace certmark
