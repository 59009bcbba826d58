#include <gtest/gtest.h>

#include "certmark/attacks.hpp"
#include "certmark/verify.hpp"
#include "testing.hpp"

namespace certmark {
namespace {

struct AttackFixture {
  Dataset data = testing::random_dataset(21, 24, 4, 9);
  EnsembleModel target = build_ensemble(2, ConvType::kGin, 3, 2, 7);
  std::vector<Graph> watermarked;
};

AttackFixture fixture() {
  AttackFixture f;
  Rng rng(3);
  for (int i = 0; i < 10; ++i) f.watermarked.push_back(testing::random_graph(rng, 8, 0.6, 3, 1, 100 + i));
  return f;
}

TEST(Attacks, ZeroEpochsAndZeroRateAreIdentity) {
  auto f = fixture();
  AttackConfig cfg;
  cfg.epochs = 0;
  EXPECT_TRUE(distillation_attack(f.target, f.data.graphs, cfg, 1).flatten().values_equal(f.target.flatten()));
  EXPECT_TRUE(finetune_attack(f.target, f.data.graphs, cfg, 1).flatten().values_equal(f.target.flatten()));
  // A zero step leaves every weight alone; BN running statistics still track the data.
  cfg.epochs = 3;
  cfg.lr = 0.0f;
  const auto tuned = finetune_attack(f.target, f.data.graphs, cfg, 1).flatten();
  const auto base = f.target.flatten();
  ASSERT_TRUE(tuned.same_layout(base));
  for (std::size_t i = 0; i < base.size(); ++i)
    if (base.entry(i).second.requires_grad)
      EXPECT_EQ(tuned.entry(i).second.values, base.entry(i).second.values) << base.entry(i).first;
}

TEST(Attacks, EmptyAttackerDataIsConfigError) {
  auto f = fixture();
  AttackConfig cfg;
  for (auto fn : {distillation_attack, finetune_attack}) {
    try {
      fn(f.target, {}, cfg, 1);
      FAIL() << "expected a configuration error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    }
  }
}

TEST(Attacks, ArchitectureAndDeterminism) {
  auto f = fixture();
  AttackConfig cfg;
  cfg.epochs = 2;
  cfg.shadow_epochs = 2;
  const auto d1 = distillation_attack(f.target, f.data.graphs, cfg, 5);
  const auto d2 = distillation_attack(f.target, f.data.graphs, cfg, 5);
  EXPECT_TRUE(d1.flatten().values_equal(d2.flatten()));
  EXPECT_FALSE(d1.flatten().values_equal(f.target.flatten()));
  EXPECT_EQ(d1.architecture_hash(), f.target.architecture_hash());
  const auto ft = finetune_attack(f.target, f.data.graphs, cfg, 5);
  EXPECT_EQ(ft.architecture_hash(), f.target.architecture_hash());
  const auto shadow = train_shadow_model(f.target, f.data.graphs, cfg, 9);
  EXPECT_EQ(shadow.architecture_hash(), f.target.architecture_hash());
  EXPECT_TRUE(shadow.flatten().values_equal(train_shadow_model(f.target, f.data.graphs, cfg, 9).flatten()));
}

// With one epoch of full-batch training on the pseudo-labels, distillation
// equals finetuning on graphs relabeled with the target's own votes.
TEST(Attacks, DistillationUsesEnsembleLabels) {
  auto f = fixture();
  AttackConfig cfg;
  cfg.epochs = 1;
  auto relabeled = f.data.graphs;
  for (auto& g : relabeled) g.label = ensemble_predict(f.target, g).predicted;
  const auto d = distillation_attack(f.target, f.data.graphs, cfg, 5);
  const auto ft = finetune_attack(f.target, relabeled, cfg, 5);
  EXPECT_TRUE(d.flatten().values_equal(ft.flatten()));
}

TEST(LayerPerturbation, ZeroStepsAndSelfDonor) {
  auto f = fixture();
  AttackConfig cfg;
  const auto none = layer_perturbation_attack(f.target, f.target, f.watermarked, f.data.graphs, 1, 0, cfg);
  EXPECT_TRUE(none.model.flatten().values_equal(f.target.flatten()));
  EXPECT_TRUE(none.steps.empty());
  const auto self = layer_perturbation_attack(f.target, f.target, f.watermarked, f.data.graphs, 1, 3, cfg);
  EXPECT_EQ(self.steps.size(), 3u);
  for (const auto& s : self.steps) EXPECT_DOUBLE_EQ(s.wa, self.base_wa);
  EXPECT_TRUE(self.model.flatten().values_equal(f.target.flatten()));
}

TEST(LayerPerturbation, TooManyLayersAndArchitectureMismatch) {
  auto f = fixture();
  AttackConfig cfg;
  EXPECT_THROW(layer_perturbation_attack(f.target, f.target, f.watermarked, f.data.graphs, 1, 11, cfg), Error);
  const auto other = build_ensemble(4, ConvType::kGin, 3, 2, 7);
  EXPECT_THROW(layer_perturbation_attack(f.target, other, f.watermarked, f.data.graphs, 1, 1, cfg), Error);
}

// The first greedy step against an exhaustive scan of all single swaps.
TEST(LayerPerturbation, FirstStepMatchesExhaustiveScan) {
  auto f = fixture();
  const auto shadow = build_ensemble(2, ConvType::kGin, 3, 2, 99);
  AttackConfig cfg;
  const auto result = layer_perturbation_attack(f.target, shadow, f.watermarked, f.data.graphs, 1, 2, cfg);
  const double base_ma = compute_ma(f.target, f.data.graphs);
  EXPECT_DOUBLE_EQ(result.base_ma, base_ma);
  EXPECT_DOUBLE_EQ(result.base_wa, target_rate(f.target, f.watermarked, 1));
  struct Candidate {
    LayerId id;
    double wa, ma;
  };
  std::vector<Candidate> all;
  for (const auto id : f.target.layer_ids()) {
    const auto m = replace_layer(f.target, id, shadow);
    all.push_back({id, target_rate(m, f.watermarked, 1), compute_ma(m, f.data.graphs)});
  }
  bool any_ok = false;
  for (const auto& c : all) any_ok |= base_ma - c.ma <= cfg.ma_drop_budget;
  const Candidate* best = nullptr;
  for (const auto& c : all) {
    if (any_ok && base_ma - c.ma > cfg.ma_drop_budget) continue;
    if (!best || c.wa < best->wa || (c.wa == best->wa && c.ma > best->ma)) best = &c;
  }
  ASSERT_NE(best, nullptr);
  ASSERT_EQ(result.steps.size(), 2u);
  EXPECT_EQ(result.steps[0].layer, best->id);
  EXPECT_DOUBLE_EQ(result.steps[0].wa, best->wa);
  EXPECT_NE(result.steps[1].layer, result.steps[0].layer);
  const auto again = layer_perturbation_attack(f.target, shadow, f.watermarked, f.data.graphs, 1, 2, cfg);
  EXPECT_TRUE(again.model.flatten().values_equal(result.model.flatten()));
}

TEST(Attacks, KindNames) {
  for (auto k : {AttackKind::kDistillation, AttackKind::kFinetune, AttackKind::kLayerPerturbation})
    EXPECT_EQ(parse_attack(to_string(k)), k);
  EXPECT_THROW(parse_attack("pruning"), Error);
}

}  // namespace
}  // namespace certmark
