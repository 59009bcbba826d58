#include "certmark/federated.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "certmark/rng.hpp"

namespace certmark {

namespace {

std::size_t ceil_fraction(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

std::string cwg_prefix(std::size_t client) { return "client" + std::to_string(client) + ".cwg."; }

}  // namespace

WatermarkSource ClientWatermarkState::source() const {
  WatermarkSource s;
  s.client = client;
  s.cwg = &cwg;
  s.key = &key;
  s.random = random;
  return s;
}

nlohmann::ordered_json to_json(const RoundStats& stats) {
  nlohmann::ordered_json j;
  j["round"] = stats.round;
  j["selected"] = stats.selected;
  j["train_loss"] = stats.train_loss;
  j["cwg_loss"] = stats.cwg_loss;
  return j;
}

RoundStats round_stats_from_json(const nlohmann::ordered_json& j) {
  RoundStats s;
  s.round = j.at("round").get<std::size_t>();
  s.selected = j.at("selected").get<std::vector<std::size_t>>();
  s.train_loss = j.at("train_loss").get<double>();
  s.cwg_loss = j.at("cwg_loss").get<double>();
  return s;
}

std::vector<std::size_t> select_clients(std::uint64_t seed, std::size_t round, std::size_t clients, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::kConfig, "selection fraction must lie in (0, 1]");
  const std::size_t k = ceil_fraction(fraction, clients);
  require(k > 0, ErrorKind::kConfig, "client selection is empty");
  std::vector<std::size_t> order(clients);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({seed, 0x5E1EC7ULL, round}));
  rng.shuffle(order.begin(), order.end());
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

FederatedTrainer::FederatedTrainer(const FederatedConfig& config, const ModelSpec& model, const WatermarkSpec& watermark,
                                   Dataset train, const ClientPartition& partition)
    : config_(config), spec_(model), watermark_(watermark), train_(std::move(train)) {
  const std::size_t classes = train_.num_classes;
  require(config_.clients > 0, ErrorKind::kConfig, "federated.clients must be positive");
  require(config_.watermarked_clients <= config_.clients, ErrorKind::kConfig,
          "federated.watermarked_clients exceeds federated.clients");
  require(config_.selection_fraction > 0.0 && config_.selection_fraction <= 1.0, ErrorKind::kConfig,
          "federated.selection_fraction must lie in (0, 1]");
  require(partition.clients() == config_.clients, ErrorKind::kConfig, "partition does not match the client count");
  require(watermark_.target_label >= 0 && static_cast<std::size_t>(watermark_.target_label) < classes,
          ErrorKind::kConfig, "watermark.target_label out of range");
  require(config_.wrong_label >= 0 && static_cast<std::size_t>(config_.wrong_label) < classes, ErrorKind::kConfig,
          "federated.wrong_label out of range");
  require(config_.malicious_fraction >= 0.0 && config_.malicious_fraction <= 1.0, ErrorKind::kConfig,
          "federated.malicious_fraction must lie in [0, 1]");
  require(config_.batch_size > 0, ErrorKind::kConfig, "federated.batch_size must be positive");

  model_ = build_ensemble(spec_.ensemble_size, spec_.conv, train_.feature_dim, classes,
                          derive_seed({config_.seed, 0x40DE1ULL}));
  const std::size_t malicious = ceil_fraction(config_.malicious_fraction, config_.watermarked_clients);

  for (std::size_t c = 0; c < config_.clients; ++c) {
    ClientState st;
    st.index = c;
    st.graphs = partition.assignment[c];
    require(!st.graphs.empty(), ErrorKind::kConfig, "client " + std::to_string(c) + " holds no graphs");
    if (c < config_.watermarked_clients) {
      ClientWatermarkState wm;
      wm.client = c;
      wm.key = derive_key_matrix(std::to_string(c), train_.max_nodes);
      wm.cwg = build_cwg(train_.max_nodes, derive_seed({config_.seed, 0xC36ULL, c}));
      if (config_.random_watermark) {
        wm.random = RandomPatternSource{config_.er_edge_probability, derive_seed({config_.seed, 0xE4ULL, c})};
      }
      wm.malicious = c < malicious;
      wm.label = wm.malicious ? config_.wrong_label : watermark_.target_label;

      for (auto i : st.graphs) {
        const auto& g = train_.graphs[i];
        if (g.label != watermark_.target_label && g.node_count() >= watermark_.n_w) st.candidates.push_back(i);
      }
      st.wm = std::move(wm);
    }
    clients_.push_back(std::move(st));
  }
}

std::vector<WatermarkSource> FederatedTrainer::watermark_sources() const {
  std::vector<WatermarkSource> out;
  for (const auto& c : clients_)
    if (c.wm) out.push_back(c.wm->source());
  return out;
}

ClientDivision FederatedTrainer::divide(std::size_t client, std::size_t round) const {
  const auto& st = clients_.at(client);
  ClientDivision d;
  if (st.wm && !st.candidates.empty()) {
    auto picked = st.candidates;
    const std::size_t take = std::max<std::size_t>(1, ceil_fraction(watermark_.watermark_fraction, picked.size()));
    Rng rng(derive_seed({config_.seed, 0x3A5CULL, client, round}));
    rng.shuffle(picked.begin(), picked.end());
    picked.resize(take);
    std::sort(picked.begin(), picked.end());
    for (auto i : picked) {
      const auto& g = train_.graphs[i];
      d.watermark.push_back(i);
      d.watermark_nodes.push_back(
          *select_watermark_nodes(g, watermark_.n_w, train_node_seed(derive_seed({config_.seed, round}), client, g.graph_id)));
    }
  }
  for (auto i : st.graphs)
    if (!std::binary_search(d.watermark.begin(), d.watermark.end(), i)) d.clean.push_back(i);
  return d;
}

std::vector<Graph> FederatedTrainer::client_watermark_graphs(std::size_t client, std::size_t round) const {
  const auto& st = clients_.at(client);
  std::vector<Graph> out;
  if (!st.wm) return out;
  const auto d = divide(client, round);
  const auto source = st.wm->source();
  for (std::size_t j = 0; j < d.watermark.size(); ++j) {
    const auto& g = train_.graphs[d.watermark[j]];
    out.push_back(apply_watermark(g, source.pattern_for(g, d.watermark_nodes[j]), d.watermark_nodes[j], st.wm->label));
  }
  return out;
}

FederatedTrainer::LocalResult FederatedTrainer::local_update(std::size_t client) {
  ClientState& st = clients_[client];
  EnsembleModel local = model_;
  LocalResult result;

  const auto division = divide(client, round_);
  std::vector<Graph> data;
  data.reserve(st.graphs.size());
  for (auto i : division.clean) data.push_back(train_.graphs[i]);
  for (auto& g : client_watermark_graphs(client, round_)) data.push_back(std::move(g));

  double loss = 0;
  std::size_t passes = 0;
  for (std::size_t e = 0; e < config_.local_epochs; ++e)
    for (std::size_t s = 0; s < local.size(); ++s) {
      Rng rng(derive_seed({config_.seed, 0x10CA1ULL, round_, client, e, s}));
      loss += train_submodel_epoch(local.submodels[s], data, {}, config_.lr, config_.batch_size, rng);
      ++passes;
    }
  result.train_loss = passes ? loss / static_cast<double>(passes) : 0.0;

  if (st.wm && !st.wm->random && !division.watermark.empty()) {
    std::vector<CwgSample> samples;
    for (std::size_t j = 0; j < division.watermark.size(); ++j)
      samples.push_back({&train_.graphs[division.watermark[j]], division.watermark_nodes[j]});
    double cwg_loss = 0;
    std::size_t steps = 0;
    for (std::size_t e = 0; e < config_.cwg_epochs; ++e) {
      Rng rng(derive_seed({config_.seed, 0xC3A1ULL, round_, client, e}));
      for (std::size_t start = 0; start < samples.size(); start += config_.batch_size) {
        const std::size_t n = std::min(config_.batch_size, samples.size() - start);
        cwg_loss += train_cwg_step(st.wm->cwg, st.wm->key, local, std::span<const CwgSample>(samples).subspan(start, n),
                                   st.wm->label, config_.cwg_lr, rng);
        ++steps;
      }
    }
    result.cwg_loss = steps ? cwg_loss / static_cast<double>(steps) : 0.0;
  }
  result.params = local.flatten();
  return result;
}

void FederatedTrainer::run_round() {
  const auto selected = select_clients(config_.seed, round_, config_.clients, config_.selection_fraction);
  std::vector<LocalResult> results(selected.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(config_.threads, selected.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < selected.size(); ++i) results[i] = local_update(selected[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < selected.size(); i = next++) results[i] = local_update(selected[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<ParameterSet<float>> sets;
  RoundStats stats;
  stats.round = round_;
  stats.selected = selected;
  std::size_t cwg_clients = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    sets.push_back(std::move(results[i].params));
    stats.train_loss += results[i].train_loss;
    if (clients_[selected[i]].wm && !clients_[selected[i]].candidates.empty() && !config_.random_watermark) {
      stats.cwg_loss += results[i].cwg_loss;
      ++cwg_clients;
    }
  }
  stats.train_loss /= static_cast<double>(results.size());
  if (cwg_clients) stats.cwg_loss /= static_cast<double>(cwg_clients);
  model_.assign(aggregate(sets, config_.aggregator));
  history_.push_back(std::move(stats));
  ++round_;
}

void FederatedTrainer::run_until(std::size_t last) {
  while (round_ < last) run_round();
}

ParameterSet<float> FederatedTrainer::state_tensors() const {
  ParameterSet<float> out = model_.flatten();
  for (const auto& c : clients_) {
    if (!c.wm) continue;
    for (const auto& [name, t] : c.wm->cwg.params) out.add(cwg_prefix(c.index) + name, t);
  }
  return out;
}

Record FederatedTrainer::checkpoint(const nlohmann::ordered_json& extra) const {
  Record r;
  r.tensors = state_tensors();
  for (auto& [name, t] : r.tensors) t.grad.reset();
  nlohmann::ordered_json meta;
  meta["format"] = "certmark-checkpoint";
  meta["round"] = round_;
  meta["seed"] = config_.seed;
  meta["architecture_hash"] = model_.architecture_hash();
  auto hist = nlohmann::ordered_json::array();
  for (const auto& h : history_) hist.push_back(to_json(h));
  meta["history"] = std::move(hist);
  meta["extra"] = extra;
  r.metadata = meta.dump();
  return r;
}

void FederatedTrainer::restore(const Record& record) {
  nlohmann::ordered_json meta;
  try {
    meta = nlohmann::ordered_json::parse(record.metadata);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kCheckpoint, std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  if (meta.value("format", "") != "certmark-checkpoint") fail(ErrorKind::kCheckpoint, "not a training checkpoint");
  if (meta.value("architecture_hash", "") != model_.architecture_hash()) {
    fail(ErrorKind::kCheckpoint, "checkpoint architecture does not match the configured model");
  }
  const auto expected = state_tensors();
  require(expected.same_layout(record.tensors), ErrorKind::kCheckpoint,
          "checkpoint tensors do not match the configured model and clients");

  ParameterSet<float> global;
  std::size_t i = 0;
  for (; i < model_.flatten().size(); ++i) global.add(record.tensors.entry(i).first, record.tensors.entry(i).second);
  model_.assign(global);
  for (auto& c : clients_) {
    if (!c.wm) continue;
    for (auto& [name, t] : c.wm->cwg.params) t.values = record.tensors.at(cwg_prefix(c.index) + name).values;
  }
  round_ = meta.at("round").get<std::size_t>();
  history_.clear();
  for (const auto& h : meta.at("history")) history_.push_back(round_stats_from_json(h));
}

}  // namespace certmark
