#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "certmark/aggregation.hpp"
#include "certmark/rng.hpp"

// Brute-force aggregation oracles shared by the unit and acceptance tests.
namespace certmark::testing {

inline std::vector<ParameterSet<float>> random_sets(Rng& rng, std::size_t n) {
  std::vector<ParameterSet<float>> sets;
  for (std::size_t i = 0; i < n; ++i) {
    ParameterSet<float> p;
    Tensor<float> a({2, 3}), b({4});
    for (auto& v : a.values) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : b.values) v = static_cast<float>(rng.uniform(-1, 1) * (i == 0 ? 50 : 1));
    p.add("a", std::move(a));
    p.add("b", std::move(b));
    sets.push_back(std::move(p));
  }
  return sets;
}

// Flattened coordinates, independent of the library's own traversal.
inline std::vector<double> flat(const ParameterSet<float>& p) {
  std::vector<double> out;
  for (const auto& [name, t] : p) out.insert(out.end(), t.values.begin(), t.values.end());
  return out;
}

inline std::vector<double> brute_trimmed_mean(const std::vector<ParameterSet<float>>& sets, std::size_t q) {
  const std::size_t dims = flat(sets[0]).size();
  std::vector<double> out(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<double> column;
    for (const auto& s : sets) column.push_back(flat(s)[d]);
    std::sort(column.begin(), column.end());
    double acc = 0;
    for (std::size_t i = column.size() - q; i-- > q;) acc += column[i];  // reverse order on purpose
    out[d] = acc / static_cast<double>(column.size() - 2 * q);
  }
  return out;
}

struct BruteKrum {
  std::vector<double> scores;
  std::vector<std::size_t> selected;
  std::vector<double> mean;
};

inline BruteKrum brute_multikrum(const std::vector<ParameterSet<float>>& sets, std::size_t p) {
  const std::size_t n = sets.size();
  std::vector<std::vector<double>> x;
  for (const auto& s : sets) x.push_back(flat(s));
  BruteKrum out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double acc = 0;
      for (std::size_t k = 0; k < x[i].size(); ++k) acc += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      d.push_back(acc);
    }
    std::sort(d.begin(), d.end());
    out.scores.push_back(std::accumulate(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n - p - 2), 0.0));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return out.scores[a] < out.scores[b]; });
  out.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n - p));
  std::sort(out.selected.begin(), out.selected.end());
  out.mean.assign(x[0].size(), 0.0);
  for (auto i : out.selected)
    for (std::size_t k = 0; k < x[i].size(); ++k) out.mean[k] += x[i][k] / static_cast<double>(n - p);
  return out;
}

}  // namespace certmark::testing
