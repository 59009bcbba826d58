#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "certmark/gnn.hpp"

namespace certmark {

enum class AttackKind { kDistillation, kFinetune, kLayerPerturbation };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack(std::string_view text);

struct AttackConfig {
  double attacker_data_fraction = 0.2;
  std::size_t epochs = 20;
  float lr = 0.01f;
  std::size_t shadow_epochs = 100;
  std::size_t perturbed_layers = 1;
  double ma_drop_budget = 0.04;
  std::size_t watermark_samples = 20;
  std::size_t batch_size = kDefaultBatchSize;

  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

// Labels `unlabeled` with the target's majority vote and trains a copy of the
// target on those labels (every submodel on the ensemble label).
EnsembleModel distillation_attack(const EnsembleModel& target, std::span<const Graph> unlabeled,
                                  const AttackConfig& cfg, std::uint64_t seed);

EnsembleModel finetune_attack(const EnsembleModel& target, std::span<const Graph> labeled, const AttackConfig& cfg,
                              std::uint64_t seed);

// Fresh model with the target's architecture trained on clean labeled data.
EnsembleModel train_shadow_model(const EnsembleModel& architecture, std::span<const Graph> labeled,
                                 const AttackConfig& cfg, std::uint64_t seed);

struct PerturbationStep {
  LayerId layer;
  double wa = 0;
  double ma = 0;
  bool within_budget = true;
};

struct PerturbationResult {
  EnsembleModel model;
  double base_wa = 0;
  double base_ma = 0;
  std::vector<PerturbationStep> steps;
};

// Greedy: each step commits the not-yet-replaced layer (taken from the shadow)
// minimizing WA on the watermarked samples among layers whose MA drop stays
// within budget; if none qualifies the budget is ignored for that step. Ties go
// to higher MA, then to the earlier layer id.
PerturbationResult layer_perturbation_attack(const EnsembleModel& target, const EnsembleModel& shadow,
                                             std::span<const Graph> watermarked, std::span<const Graph> clean,
                                             int target_label, std::size_t r, const AttackConfig& cfg);

}  // namespace certmark
