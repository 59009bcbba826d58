#include "certmark/attacks.hpp"

#include <algorithm>
#include <optional>

#include "certmark/rng.hpp"

namespace certmark {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kDistillation: return "distillation";
    case AttackKind::kFinetune: return "finetune";
    case AttackKind::kLayerPerturbation: return "layer_perturbation";
  }
  return "?";
}

AttackKind parse_attack(std::string_view text) {
  if (text == "distillation") return AttackKind::kDistillation;
  if (text == "finetune" || text == "finetuning") return AttackKind::kFinetune;
  if (text == "layer_perturbation" || text == "perturbation") return AttackKind::kLayerPerturbation;
  fail(ErrorKind::kConfig,
       "unknown attack '" + std::string(text) + "' (expected distillation, finetune or layer_perturbation)");
}

namespace {

void train_all(EnsembleModel& model, std::span<const Graph> graphs, std::span<const int> labels, std::size_t epochs,
               float lr, std::size_t batch_size, std::uint64_t seed) {
  for (std::size_t e = 0; e < epochs; ++e)
    for (std::size_t s = 0; s < model.size(); ++s) {
      Rng rng(derive_seed({seed, e, s}));
      train_submodel_epoch(model.submodels[s], graphs, labels, lr, batch_size, rng);
    }
}

}  // namespace

EnsembleModel distillation_attack(const EnsembleModel& target, std::span<const Graph> unlabeled,
                                  const AttackConfig& cfg, std::uint64_t seed) {
  require(!unlabeled.empty(), ErrorKind::kConfig, "distillation attack needs attacker data");
  std::vector<int> pseudo;
  for (const auto& v : ensemble_votes(target, unlabeled)) pseudo.push_back(v.predicted);
  EnsembleModel out = target;
  train_all(out, unlabeled, pseudo, cfg.epochs, cfg.lr, cfg.batch_size, derive_seed({seed, 0xD157ULL}));
  return out;
}

EnsembleModel finetune_attack(const EnsembleModel& target, std::span<const Graph> labeled, const AttackConfig& cfg,
                              std::uint64_t seed) {
  require(!labeled.empty(), ErrorKind::kConfig, "finetune attack needs attacker data");
  EnsembleModel out = target;
  train_all(out, labeled, {}, cfg.epochs, cfg.lr, cfg.batch_size, derive_seed({seed, 0xF17EULL}));
  return out;
}

EnsembleModel train_shadow_model(const EnsembleModel& architecture, std::span<const Graph> labeled,
                                 const AttackConfig& cfg, std::uint64_t seed) {
  EnsembleModel shadow;
  for (std::size_t k = 0; k < architecture.size(); ++k) {
    shadow.submodels.push_back(build_submodel(architecture.submodels[k].config, derive_seed({seed, 0x5AD0ULL, k})));
  }
  train_all(shadow, labeled, {}, cfg.shadow_epochs, cfg.lr, cfg.batch_size, derive_seed({seed, 0x5AD1ULL}));
  return shadow;
}

namespace {

double rate(const SubmodelPredictions& preds, std::size_t classes, std::span<const int> expected) {
  if (expected.empty()) return 0.0;
  const auto votes = votes_from_predictions(preds, classes);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < votes.size(); ++i) hits += votes[i].predicted == expected[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(votes.size());
}

}  // namespace

PerturbationResult layer_perturbation_attack(const EnsembleModel& target, const EnsembleModel& shadow,
                                             std::span<const Graph> watermarked, std::span<const Graph> clean,
                                             int target_label, std::size_t r, const AttackConfig& cfg) {
  require(target.architecture_hash() == shadow.architecture_hash(), ErrorKind::kContract,
          "shadow architecture differs from the target");
  const auto ids = target.layer_ids();
  require(r <= ids.size(), ErrorKind::kConfig,
          "cannot perturb " + std::to_string(r) + " layers of a model with " + std::to_string(ids.size()));
  const std::size_t classes = target.num_classes();
  const std::vector<int> wm_expected(watermarked.size(), target_label);
  std::vector<int> clean_expected;
  for (const auto& g : clean) clean_expected.push_back(g.label);

  PerturbationResult result;
  result.model = target;
  auto wm_preds = submodel_predictions(target, watermarked);
  auto clean_preds = submodel_predictions(target, clean);
  result.base_wa = rate(wm_preds, classes, wm_expected);
  result.base_ma = rate(clean_preds, classes, clean_expected);

  std::vector<bool> used(ids.size(), false);
  for (std::size_t step = 0; step < r; ++step) {
    struct Candidate {
      std::size_t index;
      double wa, ma;
      bool within;
      EnsembleModel model;
      std::vector<int> wm, clean;
    };
    std::optional<Candidate> best_within, best_any;
    auto better = [](const Candidate& a, const std::optional<Candidate>& b) {
      if (!b) return true;
      if (a.wa != b->wa) return a.wa < b->wa;
      if (a.ma != b->ma) return a.ma > b->ma;
      return a.index < b->index;
    };
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (used[i]) continue;
      const auto id = ids[i];
      Candidate c{i, 0, 0, false, replace_layer(result.model, id, shadow), {}, {}};
      const auto& sub = c.model.submodels[id.submodel];
      c.wm = submodel_predict(sub, watermarked);
      c.clean = submodel_predict(sub, clean);
      auto wm_p = wm_preds;
      auto cl_p = clean_preds;
      wm_p[id.submodel] = c.wm;
      cl_p[id.submodel] = c.clean;
      c.wa = rate(wm_p, classes, wm_expected);
      c.ma = rate(cl_p, classes, clean_expected);
      c.within = result.base_ma - c.ma <= cfg.ma_drop_budget + 1e-12;
      if (c.within && better(c, best_within)) best_within = c;
      if (better(c, best_any)) best_any = std::move(c);
    }
    Candidate& chosen = best_within ? *best_within : *best_any;
    used[chosen.index] = true;
    const auto id = ids[chosen.index];
    wm_preds[id.submodel] = chosen.wm;
    clean_preds[id.submodel] = chosen.clean;
    result.model = std::move(chosen.model);
    result.steps.push_back({id, chosen.wa, chosen.ma, chosen.within});
  }
  return result;
}

}  // namespace certmark
