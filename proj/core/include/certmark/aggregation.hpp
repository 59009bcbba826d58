#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "certmark/tensor.hpp"

namespace certmark {

enum class AggregatorKind { kFedAvg, kTrimMean, kMultiKrum };

struct AggregatorConfig {
  AggregatorKind kind = AggregatorKind::kFedAvg;
  std::size_t trim = 0;       // q for trimmed mean
  std::size_t byzantine = 0;  // p for Multi-Krum

  friend bool operator==(const AggregatorConfig&, const AggregatorConfig&) = default;
};

std::string_view to_string(AggregatorKind kind);
AggregatorKind parse_aggregator(std::string_view text);

// Element-wise mean, accumulated in double in input order.
ParameterSet<float> aggregate_fedavg(std::span<const ParameterSet<float>> sets);

// Per coordinate: drop the q smallest and q largest values, average the rest.
ParameterSet<float> aggregate_trimmed_mean(std::span<const ParameterSet<float>> sets, std::size_t q);

struct KrumSelection {
  std::vector<double> scores;
  std::vector<std::size_t> selected;  // ascending input index
};

// score(i) = sum of squared distances to the n-p-2 nearest other sets; keeps
// the n-p lowest scores, ties to the lower index.
KrumSelection multikrum_select(std::span<const ParameterSet<float>> sets, std::size_t p);
ParameterSet<float> aggregate_multikrum(std::span<const ParameterSet<float>> sets, std::size_t p);

ParameterSet<float> aggregate(std::span<const ParameterSet<float>> sets, const AggregatorConfig& config);

}  // namespace certmark
