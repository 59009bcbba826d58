#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "certmark/attacks.hpp"
#include "certmark/federated.hpp"
#include "certmark/graph.hpp"
#include "certmark/watermark.hpp"

namespace certmark::cli {

inline constexpr const char* kDataRootEnv = "CERTMARK_DATA_ROOT";

struct DatasetConfig {
  std::string name = "MUTAG";
  std::string root;  // empty: $CERTMARK_DATA_ROOT, then ./data
  // Per-class counts in class-index order. Empty train_counts falls back to
  // train_fraction.
  std::vector<std::size_t> train_counts;
  std::vector<std::size_t> test_counts;
  double train_fraction = 0.67;
  PartitionMode partition = PartitionMode::kIid;
};

struct EvaluationConfig {
  WatermarkMode mode = WatermarkMode::kPerClient;
  std::vector<int> radii{0, 1, 2, 3, 4, 5};
  double threshold = 0;  // 0: default_verification_threshold(C)
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  DatasetConfig dataset;
  ModelSpec model;
  FederatedConfig federated;
  WatermarkSpec watermark;
  AttackConfig attack;
  std::vector<AttackKind> attacks{AttackKind::kDistillation, AttackKind::kFinetune, AttackKind::kLayerPerturbation};
  EvaluationConfig evaluation;

  // Copy of `federated` with the run-level seed and thread count filled in.
  FederatedConfig federated_config() const;

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

// Flat typed key/value document: [section] headers, `key = value` lines,
// integers, floats, booleans, double-quoted strings and one-line arrays.
using TomlScalar = std::variant<std::int64_t, double, bool, std::string>;
using TomlValue = std::variant<std::int64_t, double, bool, std::string, std::vector<TomlScalar>>;
// Keys are "section.key" (or "key" for the top level), in file order.
using TomlTable = std::vector<std::pair<std::string, TomlValue>>;

TomlTable parse_toml(const std::string& text, const std::string& source = "<config>");

// Corpus-specific overrides applied before explicit keys (MUTAG: S and T_w halved).
void apply_dataset_profile(RunConfig& config);
// "ci": T=10, rounds=40, MUTAG.
void apply_scale(RunConfig& config, const std::string& scale);

// Defaults, then the dataset profile, then the document. Unknown keys and
// ill-typed values raise a configuration error naming the key.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical text: every key, fixed order; re-parses to an equal RunConfig.
std::string emit_run_config(const RunConfig& config);
// SHA-256 of the canonical text with threads fixed at 1.
std::string config_hash(const RunConfig& config);

void validate(const RunConfig& config);

std::filesystem::path dataset_directory(const RunConfig& config);

}  // namespace certmark::cli
