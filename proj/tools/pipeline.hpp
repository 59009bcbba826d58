#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "certmark/attacks.hpp"
#include "certmark/federated.hpp"
#include "certmark/verify.hpp"
#include "config.hpp"

namespace certmark::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kCheckpointFile = "checkpoint.cmrk";

using Json = nlohmann::ordered_json;

struct Workspace {
  RunConfig config;
  Dataset corpus;
  DatasetSplit split;
  ClientPartition partition;
  std::string dataset_hash;
};

// Parses the corpus, splits it and partitions the training side.
Workspace load_workspace(const RunConfig& config);

std::unique_ptr<FederatedTrainer> make_trainer(const Workspace& ws);
// Trainer restored from a checkpoint written by `train` under the same config.
std::unique_ptr<FederatedTrainer> load_trainer(const Workspace& ws, const std::filesystem::path& checkpoint);

std::vector<WatermarkedGraph> watermark_testset(const FederatedTrainer& trainer, const Workspace& ws);
Metrics evaluate(const EnsembleModel& model, const Workspace& ws, std::span<const WatermarkedGraph> testset);

// The attacker's slice of the training pool plus the watermarked samples it
// builds with one leaked (honest) client's generator.
struct AttackerData {
  std::vector<Graph> graphs;
  std::vector<Graph> watermarked;
  std::size_t leaked_client = 0;
};
AttackerData attacker_data(const FederatedTrainer& trainer, const Workspace& ws);

struct AttackOutcome {
  AttackKind kind = AttackKind::kDistillation;
  EnsembleModel model;
  Metrics after;
  std::vector<PerturbationStep> steps;  // layer perturbation only
};
// `shadow` is required for layer perturbation and ignored otherwise.
AttackOutcome run_attack(AttackKind kind, const FederatedTrainer& trainer, const Workspace& ws,
                         const AttackerData& data, std::span<const WatermarkedGraph> testset,
                         const EnsembleModel* shadow);
EnsembleModel shadow_model(const FederatedTrainer& trainer, const Workspace& ws, const AttackerData& data);

// The owner submits each watermarked client's own test watermarks; the
// impostor submits the same graphs and nodes carrying random ER patterns.
std::vector<Claimant> verification_claimants(const FederatedTrainer& trainer, const Workspace& ws,
                                             std::span<const WatermarkedGraph> testset);
double verification_threshold(const Workspace& ws);

Json to_json(const Metrics& m);
Json to_json(const VerificationVerdict& v);
Json manifest(const std::string& command, const Workspace& ws);
Json manifest(const std::string& command, const RunConfig& config, const std::string& dataset_hash);

// Left-aligned first column, right-aligned rest.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);
std::string fixed(double v, int digits = 3);

struct CommandOptions {
  std::filesystem::path out = "run";
  std::optional<std::filesystem::path> checkpoint;  // default: <out>/checkpoint.cmrk
  std::optional<std::filesystem::path> resume;      // train: continue from this checkpoint
  std::optional<std::size_t> until;                 // train: stop after this round
};

// Each command writes <out>/<name>.json, <name>.txt and <name>.manifest.json
// and returns the JSON report.
Json run_ingest(const RunConfig& config, const CommandOptions& opts);
Json run_train(const RunConfig& config, const CommandOptions& opts);
Json run_attack_command(const RunConfig& config, const CommandOptions& opts);
Json run_certify(const RunConfig& config, const CommandOptions& opts);
Json run_verify(const RunConfig& config, const CommandOptions& opts);
// Consolidates whatever reports exist in opts.out.
Json run_report(const CommandOptions& opts);

}  // namespace certmark::cli
