#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "certmark/certify.hpp"
#include "certmark/error.hpp"
#include "certmark/record.hpp"
#include "certmark/rng.hpp"

namespace certmark::cli {

namespace fs = std::filesystem;

Workspace load_workspace(const RunConfig& config) {
  validate(config);
  Workspace ws;
  ws.config = config;
  ws.corpus = parse_tudataset(dataset_directory(config), config.dataset.name);
  const auto& d = config.dataset;
  if (d.train_counts.empty()) {
    ws.split = fraction_split(ws.corpus, d.train_fraction, config.seed);
  } else {
    std::optional<std::vector<std::size_t>> test;
    if (!d.test_counts.empty()) test = d.test_counts;
    ws.split = stratified_split(ws.corpus, d.train_counts, config.seed, test);
  }
  require(static_cast<std::size_t>(config.watermark.target_label) < ws.corpus.num_classes, ErrorKind::kConfig,
          "watermark.target_label: corpus has only " + std::to_string(ws.corpus.num_classes) + " classes");
  require(!ws.split.test.graphs.empty(), ErrorKind::kConfig, "dataset split leaves no test graphs");
  ws.partition = partition_clients(ws.split.train, config.federated.clients, d.partition, config.seed);
  ws.dataset_hash = dataset_hash(ws.corpus);
  return ws;
}

std::unique_ptr<FederatedTrainer> make_trainer(const Workspace& ws) {
  return std::make_unique<FederatedTrainer>(ws.config.federated_config(), ws.config.model, ws.config.watermark,
                                            ws.split.train, ws.partition);
}

std::unique_ptr<FederatedTrainer> load_trainer(const Workspace& ws, const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) fail(ErrorKind::kIo, "checkpoint not found: " + checkpoint.string());
  const Record record = load_record(checkpoint);
  const auto meta = Json::parse(record.metadata, nullptr, false);
  const auto hash = meta.is_object() && meta.contains("extra") ? meta["extra"].value("config_hash", "") : "";
  if (hash != config_hash(ws.config)) {
    fail(ErrorKind::kCheckpoint, checkpoint.string() + " was written under a different configuration");
  }
  auto trainer = make_trainer(ws);
  trainer->restore(record);
  return trainer;
}

std::vector<WatermarkedGraph> watermark_testset(const FederatedTrainer& trainer, const Workspace& ws) {
  const auto sources = trainer.watermark_sources();
  require(!sources.empty(), ErrorKind::kConfig, "federated.watermarked_clients is 0; nothing to evaluate");
  auto set = build_watermark_testset(ws.split.test, sources, ws.config.watermark, ws.config.evaluation.mode,
                                     ws.config.seed);
  require(!set.empty(), ErrorKind::kConfig, "no test graph can carry a watermark");
  return set;
}

Metrics evaluate(const EnsembleModel& model, const Workspace& ws, std::span<const WatermarkedGraph> testset) {
  return evaluate_metrics(model, ws.split.test.graphs, testset, ws.config.watermark.target_label,
                          ws.config.evaluation.radii);
}

AttackerData attacker_data(const FederatedTrainer& trainer, const Workspace& ws) {
  const auto& cfg = ws.config;
  const auto& train = ws.split.train.graphs;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed({cfg.seed, 0xA77ACCULL}));
  rng.shuffle(order.begin(), order.end());
  const auto take = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.attack.attacker_data_fraction * static_cast<double>(train.size()) - 1e-9)));
  order.resize(std::min(take, order.size()));
  std::sort(order.begin(), order.end());

  AttackerData data;
  for (auto i : order) data.graphs.push_back(train[i]);

  const WatermarkSource* leaked = nullptr;
  const auto sources = trainer.watermark_sources();
  for (const auto& c : trainer.clients()) {
    if (!c.wm || c.wm->malicious) continue;
    for (const auto& s : sources)
      if (s.client == c.index) leaked = &s;
    break;
  }
  if (!leaked) return data;
  data.leaked_client = leaked->client;
  for (const auto& g : data.graphs) {
    if (data.watermarked.size() >= cfg.attack.watermark_samples) break;
    if (g.label == cfg.watermark.target_label) continue;
    const auto nodes = select_watermark_nodes(
        g, cfg.watermark.n_w, derive_seed({cfg.seed, 0xA77AC2ULL, static_cast<std::uint64_t>(g.graph_id)}));
    if (!nodes) continue;
    data.watermarked.push_back(
        apply_watermark(g, leaked->pattern_for(g, *nodes), *nodes, cfg.watermark.target_label));
  }
  return data;
}

EnsembleModel shadow_model(const FederatedTrainer& trainer, const Workspace& ws, const AttackerData& data) {
  return train_shadow_model(trainer.model(), data.graphs, ws.config.attack, derive_seed({ws.config.seed, 0x5AD0ULL}));
}

AttackOutcome run_attack(AttackKind kind, const FederatedTrainer& trainer, const Workspace& ws,
                         const AttackerData& data, std::span<const WatermarkedGraph> testset,
                         const EnsembleModel* shadow) {
  const auto& cfg = ws.config;
  const std::uint64_t seed = derive_seed({cfg.seed, 0xA7ULL, static_cast<std::uint64_t>(kind)});
  AttackOutcome out;
  out.kind = kind;
  switch (kind) {
    case AttackKind::kDistillation:
      out.model = distillation_attack(trainer.model(), data.graphs, cfg.attack, seed);
      break;
    case AttackKind::kFinetune:
      out.model = finetune_attack(trainer.model(), data.graphs, cfg.attack, seed);
      break;
    case AttackKind::kLayerPerturbation: {
      require(shadow != nullptr, ErrorKind::kContract, "layer perturbation needs a shadow model");
      require(!data.watermarked.empty(), ErrorKind::kConfig,
              "layer perturbation needs attacker watermark samples; none could be built");
      auto result = layer_perturbation_attack(trainer.model(), *shadow, data.watermarked, data.graphs,
                                              cfg.watermark.target_label, cfg.attack.perturbed_layers, cfg.attack);
      out.model = std::move(result.model);
      out.steps = std::move(result.steps);
      break;
    }
  }
  out.after = evaluate(out.model, ws, testset);
  return out;
}

double verification_threshold(const Workspace& ws) {
  return ws.config.evaluation.threshold > 0 ? ws.config.evaluation.threshold
                                            : default_verification_threshold(ws.corpus.num_classes);
}

std::vector<Claimant> verification_claimants(const FederatedTrainer& trainer, const Workspace& ws,
                                             std::span<const WatermarkedGraph> testset) {
  std::map<std::int64_t, const Graph*> base;
  for (const auto& g : ws.split.test.graphs) base[g.graph_id] = &g;
  const auto& spec = ws.config.watermark;
  const RandomPatternSource er{ws.config.federated.er_edge_probability, derive_seed({ws.config.seed, 0x1A90ULL})};

  Claimant owner{"owner", ws.split.test.graphs, {}};
  Claimant impostor{"random_impostor", ws.split.test.graphs, {}};
  for (const auto& c : trainer.clients()) {
    if (!c.wm) continue;
    std::vector<Graph> own, fake;
    for (const auto& w : testset) {
      if (w.client != static_cast<int>(c.index)) continue;
      own.push_back(w.graph);
      WatermarkSource src;
      src.client = c.index;
      src.random = er;
      const Graph& g = *base.at(w.base_graph_id);
      fake.push_back(apply_watermark(g, src.pattern_for(g, w.nodes), w.nodes, spec.target_label));
    }
    owner.clients.push_back({c.index, own.empty() ? std::nullopt : std::optional(std::move(own))});
    impostor.clients.push_back({c.index, fake.empty() ? std::nullopt : std::optional(std::move(fake))});
  }
  return {std::move(owner), std::move(impostor)};
}

// ---------------------------------------------------------------------------
// Reporting helpers

Json to_json(const Metrics& m) {
  Json j;
  j["ma"] = m.ma;
  j["wa"] = m.wa;
  Json cwa = Json::object();
  for (const auto& [r, v] : m.cwa) cwa[std::to_string(r)] = v;
  j["cwa"] = std::move(cwa);
  Json per = Json::object();
  for (const auto& [c, v] : m.per_client_wa) per[std::to_string(c)] = v;
  j["per_client_wa"] = std::move(per);
  return j;
}

Json to_json(const VerificationVerdict& v) {
  Json j;
  j["claimant"] = v.claimant;
  j["threshold"] = v.threshold;
  j["participating"] = v.participating;
  j["passing"] = v.passing;
  j["decision"] = v.decision;
  j["clean_accuracy"] = v.clean_accuracy;
  Json per = Json::object();
  for (const auto& [c, wa] : v.per_client_wa) per[std::to_string(c)] = wa;
  j["per_client_wa"] = std::move(per);
  j["offline"] = v.offline;
  return j;
}

Json manifest(const std::string& command, const RunConfig& config, const std::string& dataset_hash) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config_hash"] = config_hash(config);
  j["dataset_hash"] = dataset_hash;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  j["versions"] = {{"certmark", kToolVersion}, {"record_format", kRecordVersion}, {"report_schema", kSchemaVersion}};
  j["config"] = emit_run_config(config);
  return j;
}

Json manifest(const std::string& command, const Workspace& ws) {
  return manifest(command, ws.config, ws.dataset_hash);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      const std::string pad(width[c] - cell.size(), ' ');
      if (c) out += "  ";
      out += c == 0 ? cell + pad : pad + cell;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

namespace {

void write_outputs(const fs::path& out, const std::string& name, const Json& report, const std::string& table,
                   const Json& manifest_json) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create output directory " + out.string() + ": " + ec.message());
  write_file_atomic(out / (name + ".json"), report.dump(2) + "\n");
  write_file_atomic(out / (name + ".txt"), table);
  write_file_atomic(out / (name + ".manifest.json"), manifest_json.dump(2) + "\n");
}

fs::path checkpoint_path(const CommandOptions& opts) { return opts.checkpoint.value_or(opts.out / kCheckpointFile); }

std::vector<std::vector<std::string>> metric_rows(const std::string& label, const Metrics& m) {
  return {{label, fixed(m.ma), fixed(m.wa)}};
}

Json load_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    fail(ErrorKind::kIo, path.string() + " is not valid JSON: " + e.what());
  }
}

std::string cwa_header(int r) { return "CWA@" + std::to_string(r); }

}  // namespace

// ---------------------------------------------------------------------------
// Commands

Json run_ingest(const RunConfig& config, const CommandOptions& opts) {
  const auto ws = load_workspace(config);
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = ws.corpus.name;
  j["graphs"] = ws.corpus.size();
  j["classes"] = ws.corpus.num_classes;
  j["raw_labels"] = ws.corpus.raw_labels;
  j["class_counts"] = ws.corpus.class_counts();
  j["average_nodes"] = ws.corpus.average_nodes();
  j["average_edges"] = ws.corpus.average_edges();
  j["max_nodes"] = ws.corpus.max_nodes;
  j["feature_dim"] = ws.corpus.feature_dim;
  j["train_class_counts"] = ws.split.train.class_counts();
  j["test_class_counts"] = ws.split.test.class_counts();
  std::vector<std::size_t> per_client;
  for (const auto& a : ws.partition.assignment) per_client.push_back(a.size());
  j["client_graph_counts"] = per_client;
  j["dataset_hash"] = ws.dataset_hash;

  std::vector<std::vector<std::string>> rows;
  const auto tr = ws.split.train.class_counts();
  const auto te = ws.split.test.class_counts();
  const auto all = ws.corpus.class_counts();
  for (std::size_t c = 0; c < ws.corpus.num_classes; ++c) {
    rows.push_back({std::to_string(c) + " (" + ws.corpus.raw_labels.at(c) + ")", std::to_string(all[c]),
                    std::to_string(tr[c]), std::to_string(te[c])});
  }
  std::string table = ws.corpus.name + ": " + std::to_string(ws.corpus.size()) + " graphs, avg nodes " +
                      fixed(ws.corpus.average_nodes(), 2) + ", avg edges " + fixed(ws.corpus.average_edges(), 2) +
                      "\n\n" + format_table({"class", "graphs", "train", "test"}, rows);
  write_outputs(opts.out, "ingest", j, table, manifest("ingest", ws));
  return j;
}

Json run_train(const RunConfig& config, const CommandOptions& opts) {
  const auto ws = load_workspace(config);
  auto trainer = opts.resume ? load_trainer(ws, *opts.resume) : make_trainer(ws);
  const std::size_t last = std::min(opts.until.value_or(config.federated.rounds), config.federated.rounds);
  trainer->run_until(last);

  Json extra;
  extra["config_hash"] = config_hash(config);
  extra["dataset_hash"] = ws.dataset_hash;
  std::error_code ec;
  fs::create_directories(opts.out, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create output directory " + opts.out.string() + ": " + ec.message());
  save_record(opts.out / kCheckpointFile, trainer->checkpoint(extra));

  const auto testset = watermark_testset(*trainer, ws);
  const auto metrics = evaluate(trainer->model(), ws, testset);
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = ws.corpus.name;
  j["round"] = trainer->round();
  j["rounds"] = config.federated.rounds;
  j["complete"] = trainer->round() == config.federated.rounds;
  j["random_watermark"] = config.federated.random_watermark;
  j["watermark_test_graphs"] = testset.size();
  j["metrics"] = to_json(metrics);
  Json hist = Json::array();
  for (const auto& h : trainer->history()) hist.push_back(to_json(h));
  j["history"] = std::move(hist);
  j["checkpoint"] = kCheckpointFile;

  std::vector<std::string> header{"model", "MA", "WA"};
  std::vector<std::string> row{config.federated.random_watermark ? "random-watermark" : "learned-watermark",
                               fixed(metrics.ma), fixed(metrics.wa)};
  for (const auto& [r, v] : metrics.cwa) {
    header.push_back(cwa_header(r));
    row.push_back(fixed(v));
  }
  const std::string table = ws.corpus.name + " round " + std::to_string(trainer->round()) + "/" +
                            std::to_string(config.federated.rounds) + "\n\n" + format_table(header, {row});
  write_outputs(opts.out, "train", j, table, manifest("train", ws));
  return j;
}

Json run_attack_command(const RunConfig& config, const CommandOptions& opts) {
  require(!config.attacks.empty(), ErrorKind::kConfig, "attack.kinds: empty");
  const auto ws = load_workspace(config);
  const auto trainer = load_trainer(ws, checkpoint_path(opts));
  const auto testset = watermark_testset(*trainer, ws);
  const auto before = evaluate(trainer->model(), ws, testset);
  const auto data = attacker_data(*trainer, ws);

  std::optional<EnsembleModel> shadow;
  if (std::find(config.attacks.begin(), config.attacks.end(), AttackKind::kLayerPerturbation) != config.attacks.end()) {
    shadow = shadow_model(*trainer, ws, data);
  }

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = ws.corpus.name;
  j["attacker_graphs"] = data.graphs.size();
  j["attacker_watermark_samples"] = data.watermarked.size();
  j["leaked_client"] = data.leaked_client;
  j["before"] = to_json(before);
  if (shadow) {
    Json s;
    s["ma"] = compute_ma(*shadow, ws.split.test.graphs);
    std::vector<Graph> g;
    for (const auto& w : testset) g.push_back(w.graph);
    s["wa"] = target_rate(*shadow, g, config.watermark.target_label);
    j["shadow"] = std::move(s);
  }
  Json attacks = Json::array();
  std::vector<std::vector<std::string>> rows = metric_rows("none", before);
  for (const auto kind : config.attacks) {
    const auto outcome = run_attack(kind, *trainer, ws, data, testset, shadow ? &*shadow : nullptr);
    Json a;
    a["kind"] = std::string(to_string(kind));
    a["after"] = to_json(outcome.after);
    a["wa_drop"] = before.wa - outcome.after.wa;
    a["ma_drop"] = before.ma - outcome.after.ma;
    if (kind == AttackKind::kLayerPerturbation) {
      Json steps = Json::array();
      for (const auto& s : outcome.steps) {
        steps.push_back({{"layer", s.layer.name()},
                         {"attacker_wa", s.wa},
                         {"attacker_ma", s.ma},
                         {"within_budget", s.within_budget}});
      }
      a["steps"] = std::move(steps);
    }
    const std::string file = "attacked_" + std::string(to_string(kind)) + ".cmrk";
    Record rec;
    rec.tensors = outcome.model.flatten();
    Json meta;
    meta["format"] = "certmark-attacked-model";
    meta["attack"] = std::string(to_string(kind));
    meta["architecture_hash"] = outcome.model.architecture_hash();
    meta["config_hash"] = config_hash(config);
    rec.metadata = meta.dump();
    save_record(opts.out / file, rec);
    a["model"] = file;
    attacks.push_back(std::move(a));
    rows.push_back({std::string(to_string(kind)), fixed(outcome.after.ma), fixed(outcome.after.wa)});
  }
  j["attacks"] = std::move(attacks);
  write_outputs(opts.out, "attack", j, ws.corpus.name + " attacks\n\n" + format_table({"attack", "MA", "WA"}, rows),
                manifest("attack", ws));
  return j;
}

Json run_certify(const RunConfig& config, const CommandOptions& opts) {
  const auto ws = load_workspace(config);
  const auto trainer = load_trainer(ws, checkpoint_path(opts));
  const auto testset = watermark_testset(*trainer, ws);
  const auto metrics = evaluate(trainer->model(), ws, testset);
  std::vector<Graph> graphs;
  for (const auto& w : testset) graphs.push_back(w.graph);
  const auto votes = ensemble_votes(trainer->model(), graphs);

  std::map<int, std::size_t> histogram;
  Json per = Json::array();
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const auto cert = certified_radius(votes[i]);
    const int radius = votes[i].predicted == config.watermark.target_label ? cert.r_star : -1;
    ++histogram[radius];
    per.push_back({{"graph_id", testset[i].base_graph_id},
                   {"client", testset[i].client},
                   {"votes", votes[i].counts},
                   {"predicted", votes[i].predicted},
                   {"r_star", cert.r_star}});
  }
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = ws.corpus.name;
  j["ensemble_size"] = config.model.ensemble_size;
  j["wa"] = metrics.wa;
  Json cwa = Json::object();
  for (const auto& [r, v] : metrics.cwa) cwa[std::to_string(r)] = v;
  j["cwa"] = std::move(cwa);
  Json hist = Json::object();
  for (const auto& [r, n] : histogram) hist[std::to_string(r)] = n;
  j["radius_histogram"] = std::move(hist);  // -1: not predicted as the target
  j["graphs"] = std::move(per);

  std::vector<std::vector<std::string>> rows;
  for (const auto& [r, v] : metrics.cwa) rows.push_back({std::to_string(r), fixed(v)});
  write_outputs(opts.out, "certify", j,
                ws.corpus.name + " S=" + std::to_string(config.model.ensemble_size) + "\n\n" +
                    format_table({"r", "CWA@r"}, rows),
                manifest("certify", ws));
  return j;
}

Json run_verify(const RunConfig& config, const CommandOptions& opts) {
  const auto ws = load_workspace(config);
  const auto trainer = load_trainer(ws, checkpoint_path(opts));
  const auto testset = watermark_testset(*trainer, ws);
  const double tau = verification_threshold(ws);
  Json verdicts = Json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& claimant : verification_claimants(*trainer, ws, testset)) {
    const auto v = ownership_verification(trainer->model(), claimant, config.watermark.target_label, tau);
    verdicts.push_back(to_json(v));
    rows.push_back({v.claimant, std::to_string(v.passing) + "/" + std::to_string(v.participating),
                    fixed(v.clean_accuracy), v.decision ? "owner" : "rejected"});
  }
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = ws.corpus.name;
  j["threshold"] = tau;
  j["verdicts"] = std::move(verdicts);
  write_outputs(opts.out, "verify", j,
                "threshold " + fixed(tau) + "\n\n" + format_table({"claimant", "passing", "clean acc", "verdict"}, rows),
                manifest("verify", ws));
  return j;
}

Json run_report(const CommandOptions& opts) {
  const fs::path train_path = opts.out / "train.json";
  if (!fs::exists(train_path)) fail(ErrorKind::kIo, "no train.json in " + opts.out.string());
  const Json train = load_json(train_path);
  const Json manifest_json = load_json(opts.out / "train.manifest.json");
  const RunConfig config = parse_run_config(manifest_json.at("config").get<std::string>(), "train.manifest.json");

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = train.at("dataset");
  j["round"] = train.at("round");
  j["rounds"] = train.at("rounds");
  const auto& m = train.at("metrics");
  Json rows = Json::array();
  rows.push_back({{"attack", "none"}, {"ma", m.at("ma")}, {"wa", m.at("wa")}});
  std::vector<std::vector<std::string>> table{
      {"None", fixed(m.at("ma").get<double>()), fixed(m.at("wa").get<double>())}};
  if (fs::exists(opts.out / "attack.json")) {
    const Json attack = load_json(opts.out / "attack.json");
    for (const auto& a : attack.at("attacks")) {
      const auto kind = parse_attack(a.at("kind").get<std::string>());
      std::string label = kind == AttackKind::kDistillation ? "Distillation"
                          : kind == AttackKind::kFinetune   ? "Finetuning"
                                                            : std::to_string(config.attack.perturbed_layers) +
                                                                  "-Layer Pert.";
      rows.push_back({{"attack", a.at("kind")}, {"ma", a.at("after").at("ma")}, {"wa", a.at("after").at("wa")}});
      table.push_back({label, fixed(a.at("after").at("ma").get<double>()), fixed(a.at("after").at("wa").get<double>())});
    }
  }
  j["rows"] = std::move(rows);
  j["cwa"] = m.at("cwa");
  std::string text = train.at("dataset").get<std::string>() + " (" +
                     (config.federated.random_watermark ? "random watermark" : "learned watermark") + ", S=" +
                     std::to_string(config.model.ensemble_size) + ")\n\n" + format_table({"Attack", "MA", "WA"}, table);

  std::vector<std::string> cwa_head{"r"};
  std::vector<std::string> cwa_row{"CWA@r"};
  for (const auto& [r, v] : m.at("cwa").items()) {
    cwa_head.push_back(r);
    cwa_row.push_back(fixed(v.get<double>()));
  }
  text += "\n" + format_table(cwa_head, {cwa_row});

  if (fs::exists(opts.out / "verify.json")) {
    const Json verify = load_json(opts.out / "verify.json");
    j["verdicts"] = verify.at("verdicts");
    std::vector<std::vector<std::string>> vrows;
    for (const auto& v : verify.at("verdicts")) {
      vrows.push_back({v.at("claimant").get<std::string>(),
                       std::to_string(v.at("passing").get<std::size_t>()) + "/" +
                           std::to_string(v.at("participating").get<std::size_t>()),
                       v.at("decision").get<bool>() ? "owner" : "rejected"});
    }
    text += "\n" + format_table({"claimant", "passing", "verdict"}, vrows);
  }
  Json man = manifest("report", config, manifest_json.at("dataset_hash").get<std::string>());
  write_outputs(opts.out, "report", j, text, man);
  return j;
}

}  // namespace certmark::cli
