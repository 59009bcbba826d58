#include "certmark/aggregation.hpp"

#include <algorithm>
#include <numeric>

namespace certmark {

std::string_view to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kFedAvg: return "fedavg";
    case AggregatorKind::kTrimMean: return "trimmed_mean";
    case AggregatorKind::kMultiKrum: return "multikrum";
  }
  return "?";
}

AggregatorKind parse_aggregator(std::string_view text) {
  if (text == "fedavg") return AggregatorKind::kFedAvg;
  if (text == "trimmed_mean" || text == "trimmean") return AggregatorKind::kTrimMean;
  if (text == "multikrum" || text == "multi_krum") return AggregatorKind::kMultiKrum;
  fail(ErrorKind::kConfig, "unknown aggregator '" + std::string(text) + "' (expected fedavg, trimmed_mean or multikrum)");
}

namespace {

void check_layouts(std::span<const ParameterSet<float>> sets) {
  require(!sets.empty(), ErrorKind::kContract, "aggregation needs at least one parameter set");
  for (std::size_t i = 1; i < sets.size(); ++i) {
    require(sets[i].same_layout(sets[0]), ErrorKind::kContract,
            "parameter set " + std::to_string(i) + " differs in names or shapes from set 0");
  }
}

// Copy of sets[0] whose values are produced per coordinate by `reduce`.
template <typename Reduce>
ParameterSet<float> per_coordinate(std::span<const ParameterSet<float>> sets, Reduce&& reduce) {
  ParameterSet<float> out = sets[0];
  out.zero_grad();
  std::vector<float> column(sets.size());
  for (std::size_t e = 0; e < out.size(); ++e) {
    auto& values = out.entry(e).second.values;
    for (std::size_t k = 0; k < values.size(); ++k) {
      for (std::size_t i = 0; i < sets.size(); ++i) column[i] = sets[i].entry(e).second.values[k];
      values[k] = reduce(column);
    }
  }
  return out;
}

}  // namespace

ParameterSet<float> aggregate_fedavg(std::span<const ParameterSet<float>> sets) {
  check_layouts(sets);
  const double inv = 1.0 / static_cast<double>(sets.size());
  return per_coordinate(sets, [inv](const std::vector<float>& col) {
    double s = 0;
    for (float v : col) s += v;
    return static_cast<float>(s * inv);
  });
}

ParameterSet<float> aggregate_trimmed_mean(std::span<const ParameterSet<float>> sets, std::size_t q) {
  check_layouts(sets);
  require(2 * q < sets.size(), ErrorKind::kConfig,
          "trimmed mean with q=" + std::to_string(q) + " needs more than " + std::to_string(2 * q) + " inputs, got " +
              std::to_string(sets.size()));
  const double inv = 1.0 / static_cast<double>(sets.size() - 2 * q);
  return per_coordinate(sets, [q, inv](std::vector<float>& col) {
    std::sort(col.begin(), col.end());
    double s = 0;
    for (std::size_t i = q; i + q < col.size(); ++i) s += col[i];
    return static_cast<float>(s * inv);
  });
}

KrumSelection multikrum_select(std::span<const ParameterSet<float>> sets, std::size_t p) {
  check_layouts(sets);
  const std::size_t n = sets.size();
  require(n > p + 2, ErrorKind::kConfig,
          "Multi-Krum with p=" + std::to_string(p) + " needs more than " + std::to_string(p + 2) + " inputs, got " +
              std::to_string(n));
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0;
      for (std::size_t e = 0; e < sets[i].size(); ++e) {
        const auto& a = sets[i].entry(e).second.values;
        const auto& b = sets[j].entry(e).second.values;
        for (std::size_t k = 0; k < a.size(); ++k) {
          const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
          d += diff * diff;
        }
      }
      dist[i][j] = dist[j][i] = d;
    }
  KrumSelection sel;
  const std::size_t nearest = n - p - 2;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(dist[i][j]);
    std::sort(others.begin(), others.end());
    sel.scores.push_back(std::accumulate(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(nearest), 0.0));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sel.scores[a] < sel.scores[b]; });
  sel.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n - p));
  std::sort(sel.selected.begin(), sel.selected.end());
  return sel;
}

ParameterSet<float> aggregate_multikrum(std::span<const ParameterSet<float>> sets, std::size_t p) {
  const auto sel = multikrum_select(sets, p);
  std::vector<ParameterSet<float>> kept;
  for (auto i : sel.selected) kept.push_back(sets[i]);
  return aggregate_fedavg(kept);
}

ParameterSet<float> aggregate(std::span<const ParameterSet<float>> sets, const AggregatorConfig& config) {
  switch (config.kind) {
    case AggregatorKind::kFedAvg: return aggregate_fedavg(sets);
    case AggregatorKind::kTrimMean: return aggregate_trimmed_mean(sets, config.trim);
    case AggregatorKind::kMultiKrum: return aggregate_multikrum(sets, config.byzantine);
  }
  fail(ErrorKind::kContract, "unknown aggregator");
}

}  // namespace certmark
