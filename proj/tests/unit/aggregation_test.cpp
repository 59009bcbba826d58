#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "aggregation_oracle.hpp"
#include "certmark/aggregation.hpp"
#include "certmark/rng.hpp"

namespace certmark {
namespace {

using testing::brute_multikrum;
using testing::brute_trimmed_mean;
using testing::flat;
using testing::random_sets;

ParameterSet<float> scalar_set(std::vector<float> values) {
  ParameterSet<float> p;
  const std::size_t n = values.size();
  p.add("w", Tensor<float>({n}, std::move(values)));
  return p;
}

TEST(FedAvg, SmallExamples) {
  const std::vector<ParameterSet<float>> two{scalar_set({1, 3}), scalar_set({3, 5})};
  EXPECT_EQ(aggregate_fedavg(two).at("w").values, (std::vector<float>{2, 4}));
  const std::vector<ParameterSet<float>> one{scalar_set({1.5f, -2})};
  EXPECT_TRUE(aggregate_fedavg(one).values_equal(one[0]));
}

TEST(FedAvg, ShapeMismatchIsContractError) {
  const std::vector<ParameterSet<float>> bad{scalar_set({1, 3}), scalar_set({3})};
  try {
    aggregate_fedavg(bad);
    FAIL() << "expected a contract error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

TEST(FedAvg, MatchesReverseOrderMean) {
  Rng rng(1);
  auto sets = random_sets(rng, 5);
  const auto got = flat(aggregate_fedavg(sets));
  std::reverse(sets.begin(), sets.end());
  const auto reversed = flat(aggregate_fedavg(sets));
  for (std::size_t k = 0; k < got.size(); ++k) {
    double acc = 0;
    for (std::size_t i = sets.size(); i-- > 0;) acc += flat(sets[i])[k];
    EXPECT_NEAR(got[k], acc / 5.0, 1e-6);
    EXPECT_NEAR(reversed[k], got[k], 1e-6);
  }
}

TEST(TrimmedMean, HandExamples) {
  std::vector<ParameterSet<float>> sets;
  for (float v : {1.0f, 2.0f, 3.0f, 4.0f, 100.0f}) sets.push_back(scalar_set({v}));
  EXPECT_FLOAT_EQ(aggregate_trimmed_mean(sets, 1).at("w").values[0], 3.0f);
  EXPECT_TRUE(aggregate_trimmed_mean(sets, 0).values_equal(aggregate_fedavg(sets)));
  EXPECT_THROW(aggregate_trimmed_mean(sets, 3), Error);
}

TEST(TrimmedMean, FiftyRandomFixturesMatchBruteForce) {
  for (std::uint64_t f = 0; f < 50; ++f) {
    Rng rng(derive_seed({0xA66, f}));
    const std::size_t n = 3 + rng.below(8);
    const std::size_t q = rng.below((n - 1) / 2 + 1);
    auto sets = random_sets(rng, n);
    const auto got = flat(aggregate_trimmed_mean(sets, q));
    const auto want = brute_trimmed_mean(sets, q);
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-6) << "fixture " << f;
    std::reverse(sets.begin(), sets.end());
    EXPECT_EQ(flat(aggregate_trimmed_mean(sets, q)), got) << "fixture " << f;
  }
}

TEST(MultiKrum, HandExampleExcludesOutlier) {
  std::vector<ParameterSet<float>> sets;
  for (float v : {0.0f, 0.1f, 0.2f, 0.3f, 10.0f}) sets.push_back(scalar_set({v}));
  const auto sel = multikrum_select(sets, 1);
  EXPECT_EQ(sel.selected, (std::vector<std::size_t>{0, 1, 2, 3}));
  // n - p - 2 = 2 nearest: 0 -> .01 + .04, 0.1 -> .01 + .01, 0.2 -> .01 + .01, 0.3 -> .01 + .04.
  EXPECT_NEAR(sel.scores[0], 0.05, 1e-6);
  EXPECT_NEAR(sel.scores[1], 0.02, 1e-6);
  EXPECT_NEAR(sel.scores[4], 9.7 * 9.7 + 9.8 * 9.8, 1e-3);
  EXPECT_NEAR(aggregate_multikrum(sets, 1).at("w").values[0], 0.15f, 1e-6);
  EXPECT_THROW(multikrum_select(sets, 3), Error);
}

TEST(MultiKrum, IdenticalInputsEqualFedAvg) {
  std::vector<ParameterSet<float>> sets(4, scalar_set({0.25f, -1.5f}));
  EXPECT_TRUE(aggregate_multikrum(sets, 0).values_equal(aggregate_fedavg(sets)));
}

TEST(MultiKrum, FiftyRandomFixturesMatchBruteForce) {
  for (std::uint64_t f = 0; f < 50; ++f) {
    Rng rng(derive_seed({0xC4A, f}));
    const std::size_t n = 4 + rng.below(7);
    const std::size_t p = rng.below(n - 2);
    const auto sets = random_sets(rng, n);
    const auto sel = multikrum_select(sets, p);
    const auto want = brute_multikrum(sets, p);
    EXPECT_EQ(sel.selected, want.selected) << "fixture " << f;
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(sel.scores[i], want.scores[i], 1e-6 * (1 + want.scores[i]));
    const auto got = flat(aggregate_multikrum(sets, p));
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want.mean[k], 1e-6) << "fixture " << f;
  }
}

// All permutations of a 4-set fixture without exact ties select the same sets.
TEST(MultiKrum, PermutationInvariantWithoutTies) {
  std::vector<ParameterSet<float>> base{scalar_set({0.0f}), scalar_set({0.4f}), scalar_set({1.1f}), scalar_set({5.0f})};
  std::vector<std::size_t> perm{0, 1, 2, 3};
  const auto reference = aggregate_multikrum(base, 1).at("w").values[0];
  do {
    std::vector<ParameterSet<float>> sets;
    for (auto i : perm) sets.push_back(base[i]);
    EXPECT_NEAR(aggregate_multikrum(sets, 1).at("w").values[0], reference, 1e-6);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(MultiKrum, ExactTiesGoToLowerIndex) {
  // With one nearest neighbour every set scores exactly 1.
  std::vector<ParameterSet<float>> sets{scalar_set({10.0f}), scalar_set({9.0f}), scalar_set({0.0f}),
                                        scalar_set({1.0f}), scalar_set({-1.0f})};
  const auto sel = multikrum_select(sets, 2);
  for (double s : sel.scores) EXPECT_EQ(s, 1.0);
  EXPECT_EQ(sel.selected, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Aggregator, NamesAndDispatch) {
  EXPECT_EQ(parse_aggregator("trimmed_mean"), AggregatorKind::kTrimMean);
  EXPECT_EQ(parse_aggregator(to_string(AggregatorKind::kMultiKrum)), AggregatorKind::kMultiKrum);
  EXPECT_THROW(parse_aggregator("median"), Error);
  std::vector<ParameterSet<float>> sets;
  for (float v : {1.0f, 2.0f, 3.0f, 4.0f, 100.0f}) sets.push_back(scalar_set({v}));
  EXPECT_FLOAT_EQ(aggregate(sets, {AggregatorKind::kTrimMean, 1, 0}).at("w").values[0], 3.0f);
  EXPECT_FLOAT_EQ(aggregate(sets, {AggregatorKind::kFedAvg, 0, 0}).at("w").values[0], 22.0f);
}

}  // namespace
}  // namespace certmark
