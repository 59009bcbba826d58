#include <benchmark/benchmark.h>

#include "certmark/certify.hpp"

namespace {

using namespace certmark;

VoteCount votes_for(int S, std::size_t C) {
  std::vector<int> v;
  for (int s = 0; s < S; ++s) v.push_back(s % 3 == 0 ? 1 : 0);
  return tally_votes(v, C);
}

void BM_CertifiedRadius(benchmark::State& state) {
  const auto v = votes_for(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(certified_radius(v));
}
BENCHMARK(BM_CertifiedRadius)->Arg(4)->Arg(16)->Arg(64);

void BM_BruteForceCheck(benchmark::State& state) {
  const int S = static_cast<int>(state.range(0));
  const auto v = votes_for(S, 3);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_certificate_check(v, S / 4));
}
BENCHMARK(BM_BruteForceCheck)->Arg(4)->Arg(8)->Arg(16);

}  // namespace
