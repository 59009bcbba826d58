#include "certmark/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "certmark/error.hpp"
#include "certmark/hashing.hpp"
#include "certmark/rng.hpp"

namespace certmark {

std::size_t Graph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& n : neighbors) twice += n.size();
  return twice / 2;
}

bool Graph::has_edge(std::size_t j, std::size_t k) const {
  const auto& n = neighbors.at(j);
  return std::binary_search(n.begin(), n.end(), static_cast<std::uint32_t>(k));
}

void Graph::set_edge(std::size_t j, std::size_t k, bool present) {
  require(j != k, ErrorKind::kContract, "self loops are not allowed");
  require(j < node_count() && k < node_count(), ErrorKind::kContract, "edge endpoint out of range");
  auto update = [present](std::vector<std::uint32_t>& list, std::uint32_t v) {
    auto it = std::lower_bound(list.begin(), list.end(), v);
    const bool found = it != list.end() && *it == v;
    if (present && !found) list.insert(it, v);
    if (!present && found) list.erase(it);
  };
  update(neighbors[j], static_cast<std::uint32_t>(k));
  update(neighbors[k], static_cast<std::uint32_t>(j));
}

std::vector<std::uint8_t> Graph::dense_adjacency() const {
  const std::size_t n = node_count();
  std::vector<std::uint8_t> a(n * n, 0);
  for (std::size_t j = 0; j < n; ++j)
    for (auto k : neighbors[j]) a[j * n + k] = 1;
  return a;
}

void Graph::validate() const {
  const std::size_t n = node_count();
  require(n > 0, ErrorKind::kContract, "graph has no nodes");
  require(features.size() == n * feature_dim, ErrorKind::kContract, "feature matrix row count mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    const auto& list = neighbors[j];
    require(std::is_sorted(list.begin(), list.end()) &&
                std::adjacent_find(list.begin(), list.end()) == list.end(),
            ErrorKind::kContract, "neighbor list not sorted/unique");
    for (auto k : list) {
      require(k < n, ErrorKind::kContract, "neighbor index out of range");
      require(k != j, ErrorKind::kContract, "adjacency diagonal must be zero");
      require(has_edge(k, j), ErrorKind::kContract, "adjacency must be symmetric");
    }
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& g : graphs) ++counts.at(static_cast<std::size_t>(g.label));
  return counts;
}

double Dataset::average_nodes() const {
  if (graphs.empty()) return 0.0;
  double total = 0;
  for (const auto& g : graphs) total += static_cast<double>(g.node_count());
  return total / static_cast<double>(graphs.size());
}

double Dataset::average_edges() const {
  if (graphs.empty()) return 0.0;
  double total = 0;
  for (const auto& g : graphs) total += static_cast<double>(g.edge_count());
  return total / static_cast<double>(graphs.size());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.num_classes = num_classes;
  out.max_nodes = max_nodes;
  out.feature_dim = feature_dim;
  out.raw_labels = raw_labels;
  out.graphs.reserve(indices.size());
  for (auto i : indices) out.graphs.push_back(graphs.at(i));
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_int(std::string_view text, const std::filesystem::path& file, std::size_t line) {
  text = trim(text);
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorKind::kCorruptCorpus,
         file.filename().string() + ":" + std::to_string(line) + ": expected integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::kIngestion, "cannot open required corpus file " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

Dataset parse_tudataset(const std::filesystem::path& directory, std::string name) {
  if (name.empty()) name = directory.filename().string();
  if (name.empty()) name = directory.parent_path().filename().string();
  auto file = [&](const char* suffix) { return directory / (name + suffix); };

  const auto indicator_path = file("_graph_indicator.txt");
  const auto labels_path = file("_graph_labels.txt");
  const auto edges_path = file("_A.txt");
  const auto node_labels_path = file("_node_labels.txt");

  const auto indicator_lines = read_lines(indicator_path);
  const auto label_lines = read_lines(labels_path);
  const auto edge_lines = read_lines(edges_path);

  const std::size_t total_nodes = indicator_lines.size();
  const std::size_t graph_count = label_lines.size();
  require(graph_count > 0, ErrorKind::kCorruptCorpus, "no graph labels in " + labels_path.string());

  // node (0-based global) -> graph (0-based), and the node's local index.
  std::vector<std::size_t> node_graph(total_nodes);
  std::vector<std::uint32_t> node_local(total_nodes);
  std::vector<std::size_t> nodes_per_graph(graph_count, 0);
  for (std::size_t i = 0; i < total_nodes; ++i) {
    const auto gid = parse_int(indicator_lines[i], indicator_path, i + 1);
    if (gid < 1 || static_cast<std::size_t>(gid) > graph_count) {
      fail(ErrorKind::kCorruptCorpus, indicator_path.filename().string() + ":" + std::to_string(i + 1) +
                                          ": graph id " + std::to_string(gid) + " out of range");
    }
    node_graph[i] = static_cast<std::size_t>(gid - 1);
    node_local[i] = static_cast<std::uint32_t>(nodes_per_graph[node_graph[i]]++);
  }

  std::vector<Graph> graphs(graph_count);
  for (std::size_t g = 0; g < graph_count; ++g) {
    require(nodes_per_graph[g] > 0, ErrorKind::kCorruptCorpus, "graph " + std::to_string(g + 1) + " has no nodes");
    graphs[g].neighbors.resize(nodes_per_graph[g]);
    graphs[g].graph_id = static_cast<std::int64_t>(g);
  }

  for (std::size_t line = 0; line < edge_lines.size(); ++line) {
    std::string_view text = edge_lines[line];
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) {
      fail(ErrorKind::kCorruptCorpus, edges_path.filename().string() + ":" + std::to_string(line + 1) + ": expected 'i, j'");
    }
    const auto a = parse_int(text.substr(0, comma), edges_path, line + 1);
    const auto b = parse_int(text.substr(comma + 1), edges_path, line + 1);
    for (auto v : {a, b}) {
      if (v < 1 || static_cast<std::size_t>(v) > total_nodes) {
        fail(ErrorKind::kCorruptCorpus, edges_path.filename().string() + ":" + std::to_string(line + 1) +
                                            ": dangling node index " + std::to_string(v));
      }
    }
    const auto u = static_cast<std::size_t>(a - 1);
    const auto w = static_cast<std::size_t>(b - 1);
    if (node_graph[u] != node_graph[w]) {
      fail(ErrorKind::kCorruptCorpus, edges_path.filename().string() + ":" + std::to_string(line + 1) +
                                          ": edge crosses graphs");
    }
    if (u == w) continue;
    auto& g = graphs[node_graph[u]];
    g.neighbors[node_local[u]].push_back(node_local[w]);
    g.neighbors[node_local[w]].push_back(node_local[u]);
  }
  for (auto& g : graphs) {
    for (auto& list : g.neighbors) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
  }

  // Graph labels, remapped to contiguous indices in ascending numeric order.
  std::vector<long long> raw(graph_count);
  std::map<long long, int> label_map;
  for (std::size_t g = 0; g < graph_count; ++g) {
    raw[g] = parse_int(label_lines[g], labels_path, g + 1);
    label_map.emplace(raw[g], 0);
  }
  Dataset ds;
  ds.name = name;
  int next = 0;
  for (auto& [value, index] : label_map) {
    index = next++;
    ds.raw_labels.push_back(std::to_string(value));
  }
  for (std::size_t g = 0; g < graph_count; ++g) graphs[g].label = label_map.at(raw[g]);
  ds.num_classes = label_map.size();

  // Node features.
  if (std::filesystem::exists(node_labels_path)) {
    const auto node_label_lines = read_lines(node_labels_path);
    require(node_label_lines.size() == total_nodes, ErrorKind::kCorruptCorpus,
            node_labels_path.filename().string() + " has " + std::to_string(node_label_lines.size()) +
                " lines, expected " + std::to_string(total_nodes));
    std::vector<long long> node_raw(total_nodes);
    std::map<long long, std::size_t> node_map;
    for (std::size_t i = 0; i < total_nodes; ++i) {
      node_raw[i] = parse_int(node_label_lines[i], node_labels_path, i + 1);
      node_map.emplace(node_raw[i], 0);
    }
    std::size_t idx = 0;
    for (auto& [value, index] : node_map) index = idx++;
    ds.feature_dim = node_map.size();
    for (auto& g : graphs) {
      g.feature_dim = ds.feature_dim;
      g.features.assign(g.node_count() * ds.feature_dim, 0.0f);
    }
    for (std::size_t i = 0; i < total_nodes; ++i) {
      auto& g = graphs[node_graph[i]];
      g.features[node_local[i] * ds.feature_dim + node_map.at(node_raw[i])] = 1.0f;
    }
  } else {
    std::size_t max_degree = 0;
    for (const auto& g : graphs)
      for (std::size_t v = 0; v < g.node_count(); ++v) max_degree = std::max(max_degree, g.degree(v));
    ds.feature_dim = std::min(max_degree, kMaxDegreeFeatures) + 1;
    for (auto& g : graphs) {
      g.feature_dim = ds.feature_dim;
      g.features.assign(g.node_count() * ds.feature_dim, 0.0f);
      for (std::size_t v = 0; v < g.node_count(); ++v) {
        const std::size_t slot = std::min(g.degree(v), ds.feature_dim - 1);
        g.features[v * ds.feature_dim + slot] = 1.0f;
      }
    }
  }

  for (const auto& g : graphs) ds.max_nodes = std::max(ds.max_nodes, g.node_count());
  ds.graphs = std::move(graphs);
  return ds;
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& dataset) {
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.graphs.size(); ++i) {
    by_class.at(static_cast<std::size_t>(dataset.graphs[i].label)).push_back(i);
  }
  return by_class;
}

}  // namespace

DatasetSplit stratified_split(const Dataset& dataset, std::span<const std::size_t> per_class_train,
                              std::uint64_t seed, std::optional<std::vector<std::size_t>> per_class_test) {
  require(per_class_train.size() == dataset.num_classes, ErrorKind::kConfig,
          "per-class train counts: expected " + std::to_string(dataset.num_classes) + " entries, got " +
              std::to_string(per_class_train.size()));
  if (per_class_test) {
    require(per_class_test->size() == dataset.num_classes, ErrorKind::kConfig,
            "per-class test counts: expected " + std::to_string(dataset.num_classes) + " entries");
  }
  auto by_class = indices_by_class(dataset);
  DatasetSplit split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    const std::size_t want_train = per_class_train[c];
    const std::size_t want_test = per_class_test ? (*per_class_test)[c] : members.size() - std::min(want_train, members.size());
    if (want_train + want_test > members.size()) {
      fail(ErrorKind::kConfig, "class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                                   " graphs but the split requests " + std::to_string(want_train) + " train + " +
                                   std::to_string(want_test) + " test");
    }
    Rng rng(derive_seed({seed, 0x5B117ULL, c}));
    rng.shuffle(members.begin(), members.end());
    split.train_indices.insert(split.train_indices.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(want_train));
    split.test_indices.insert(split.test_indices.end(), members.begin() + static_cast<std::ptrdiff_t>(want_train),
                              members.begin() + static_cast<std::ptrdiff_t>(want_train + want_test));
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  split.train = dataset.subset(split.train_indices);
  split.test = dataset.subset(split.test_indices);
  return split;
}

DatasetSplit fraction_split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  require(train_fraction >= 0.0 && train_fraction <= 1.0, ErrorKind::kConfig, "train fraction must lie in [0, 1]");
  std::vector<std::size_t> counts;
  for (auto n : dataset.class_counts()) {
    counts.push_back(static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n))));
  }
  return stratified_split(dataset, counts, seed);
}

std::string_view to_string(PartitionMode mode) {
  return mode == PartitionMode::kLabelSkew ? "label_skew" : "iid";
}

PartitionMode parse_partition_mode(std::string_view text) {
  if (text == "iid") return PartitionMode::kIid;
  if (text == "label_skew" || text == "noniid") return PartitionMode::kLabelSkew;
  fail(ErrorKind::kConfig, "unknown partition mode '" + std::string(text) + "' (expected iid or label_skew)");
}

ClientPartition partition_clients(const Dataset& train, std::size_t clients, PartitionMode mode, std::uint64_t seed) {
  const std::size_t n = train.graphs.size();
  require(clients > 0, ErrorKind::kConfig, "client count must be positive");
  require(clients <= n, ErrorKind::kConfig,
          "cannot partition " + std::to_string(n) + " training graphs across " + std::to_string(clients) + " clients");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, 0xC11E27ULL}));
  rng.shuffle(order.begin(), order.end());

  ClientPartition partition;
  partition.mode = mode;
  partition.assignment.resize(clients);
  if (mode == PartitionMode::kIid) {
    for (std::size_t i = 0; i < n; ++i) partition.assignment[i % clients].push_back(order[i]);
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return train.graphs[a].label < train.graphs[b].label; });
    const std::size_t base = n / clients;
    const std::size_t extra = n % clients;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < clients; ++c) {
      const std::size_t take = base + (c < extra ? 1 : 0);
      partition.assignment[c].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                     order.begin() + static_cast<std::ptrdiff_t>(pos + take));
      pos += take;
    }
  }
  for (auto& list : partition.assignment) std::sort(list.begin(), list.end());
  return partition;
}

std::string dataset_hash(const Dataset& dataset) {
  std::ostringstream os;
  os << dataset.name << '|' << dataset.num_classes << '|' << dataset.feature_dim << '|' << dataset.max_nodes << '\n';
  for (const auto& g : dataset.graphs) {
    os << g.graph_id << ':' << g.label << ':' << g.node_count() << ':';
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      for (auto k : g.neighbors[v])
        if (k > v) os << v << '-' << k << ',';
    }
    os << ':';
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      for (std::size_t f = 0; f < g.feature_dim; ++f)
        if (g.features[v * g.feature_dim + f] != 0.0f) os << v << '.' << f << ',';
    }
    os << '\n';
  }
  return sha256_hex(os.str());
}

}  // namespace certmark
