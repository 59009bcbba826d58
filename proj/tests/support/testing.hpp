#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "certmark/graph.hpp"
#include "certmark/rng.hpp"

namespace certmark::testing {

inline std::filesystem::path data_dir() { return CERTMARK_DATA_DIR; }
inline std::filesystem::path mutag_dir() { return data_dir() / "MUTAG"; }
inline std::filesystem::path cli_path() { return CERTMARK_CLI; }
inline std::filesystem::path config_dir() { return CERTMARK_CONFIG_DIR; }

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("certmark-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Hand-written TU corpus. Each graph is (raw label, node labels, edges with
// 0-based local endpoints); edges are written in both directions like the
// published files.
struct CorpusGraph {
  int label = 0;
  std::vector<int> node_labels;
  std::vector<std::pair<int, int>> edges;
};

inline std::filesystem::path write_corpus(const std::filesystem::path& root, const std::string& name,
                                          const std::vector<CorpusGraph>& graphs, bool node_labels = true) {
  const auto dir = root / name;
  std::filesystem::create_directories(dir);
  std::string a, indicator, labels, nodes;
  int offset = 0;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    labels += std::to_string(graphs[g].label) + "\n";
    for (int l : graphs[g].node_labels) {
      indicator += std::to_string(g + 1) + "\n";
      nodes += std::to_string(l) + "\n";
    }
    for (auto [u, v] : graphs[g].edges) {
      a += std::to_string(offset + u + 1) + ", " + std::to_string(offset + v + 1) + "\n";
      a += std::to_string(offset + v + 1) + ", " + std::to_string(offset + u + 1) + "\n";
    }
    offset += static_cast<int>(graphs[g].node_labels.size());
  }
  write_text(dir / (name + "_A.txt"), a);
  write_text(dir / (name + "_graph_indicator.txt"), indicator);
  write_text(dir / (name + "_graph_labels.txt"), labels);
  if (node_labels) write_text(dir / (name + "_node_labels.txt"), nodes);
  return dir;
}

// Erdos-Renyi graph with one-hot features over `feature_dim` random types.
inline Graph random_graph(Rng& rng, std::size_t n, double p, std::size_t feature_dim, int label,
                          std::int64_t id = 0) {
  Graph g;
  g.neighbors.resize(n);
  g.feature_dim = feature_dim;
  g.features.assign(n * feature_dim, 0.0f);
  g.label = label;
  g.graph_id = id;
  for (std::size_t v = 0; v < n; ++v) g.features[v * feature_dim + rng.below(feature_dim)] = 1.0f;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k)
      if (rng.bernoulli(p)) g.set_edge(j, k, true);
  return g;
}

// Small two-class corpus in memory, labels alternating.
inline Dataset random_dataset(std::uint64_t seed, std::size_t count, std::size_t min_nodes, std::size_t max_nodes,
                              std::size_t feature_dim = 3, std::size_t classes = 2) {
  Rng rng(seed);
  Dataset ds;
  ds.name = "synthetic";
  ds.num_classes = classes;
  ds.feature_dim = feature_dim;
  for (std::size_t c = 0; c < classes; ++c) ds.raw_labels.push_back(std::to_string(c));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = min_nodes + rng.below(max_nodes - min_nodes + 1);
    ds.graphs.push_back(random_graph(rng, n, 0.35, feature_dim, static_cast<int>(i % classes),
                                     static_cast<std::int64_t>(i)));
    ds.max_nodes = std::max(ds.max_nodes, n);
  }
  return ds;
}

}  // namespace certmark::testing
