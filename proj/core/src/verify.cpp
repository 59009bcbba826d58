#include "certmark/verify.hpp"

#include <algorithm>

#include "certmark/certify.hpp"

namespace certmark {

double compute_ma(const EnsembleModel& model, std::span<const Graph> clean) {
  require(!clean.empty(), ErrorKind::kContract, "main-task accuracy over an empty set");
  const auto votes = ensemble_votes(model, clean);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) hits += votes[i].predicted == clean[i].label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(clean.size());
}

double target_rate(const EnsembleModel& model, std::span<const Graph> graphs, int target) {
  require(!graphs.empty(), ErrorKind::kContract, "watermark accuracy over an empty set");
  const auto votes = ensemble_votes(model, graphs);
  std::size_t hits = 0;
  for (const auto& v : votes) hits += v.predicted == target ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(graphs.size());
}

std::map<int, double> per_client_wa(const EnsembleModel& model, std::span<const WatermarkedGraph> watermarked,
                                    int target) {
  require(!watermarked.empty(), ErrorKind::kContract, "watermark accuracy over an empty set");
  std::vector<Graph> graphs;
  graphs.reserve(watermarked.size());
  for (const auto& w : watermarked) graphs.push_back(w.graph);
  const auto votes = ensemble_votes(model, graphs);
  std::map<int, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t i = 0; i < watermarked.size(); ++i) {
    auto& [hit, total] = tally[watermarked[i].client];
    hit += votes[i].predicted == target ? 1 : 0;
    ++total;
  }
  std::map<int, double> out;
  for (const auto& [client, ht] : tally) out[client] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
  return out;
}

double compute_wa(const EnsembleModel& model, std::span<const WatermarkedGraph> watermarked, int target) {
  const auto per = per_client_wa(model, watermarked, target);
  double s = 0;
  for (const auto& [client, wa] : per) s += wa;
  return s / static_cast<double>(per.size());
}

Metrics evaluate_metrics(const EnsembleModel& model, std::span<const Graph> clean,
                         std::span<const WatermarkedGraph> watermarked, int target, std::span<const int> radii) {
  require(!watermarked.empty(), ErrorKind::kContract, "watermark accuracy over an empty set");
  Metrics m;
  m.ma = compute_ma(model, clean);
  std::vector<Graph> graphs;
  graphs.reserve(watermarked.size());
  for (const auto& w : watermarked) graphs.push_back(w.graph);
  const auto votes = ensemble_votes(model, graphs);
  std::map<int, std::vector<VoteCount>> groups;
  for (std::size_t i = 0; i < watermarked.size(); ++i) groups[watermarked[i].client].push_back(votes[i]);
  for (const auto& [client, vs] : groups) {
    std::size_t hits = 0;
    for (const auto& v : vs) hits += v.predicted == target ? 1 : 0;
    m.per_client_wa[client] = static_cast<double>(hits) / static_cast<double>(vs.size());
    m.wa += m.per_client_wa[client];
    for (int r : radii) m.cwa[r] += cwa_from_votes(vs, target, r);
  }
  const auto n = static_cast<double>(groups.size());
  m.wa /= n;
  for (auto& [r, v] : m.cwa) v /= n;
  return m;
}

double default_verification_threshold(std::size_t num_classes) {
  require(num_classes >= 2, ErrorKind::kContract, "verification needs at least two classes");
  return std::max(0.5, 0.5 * (1.0 + 1.0 / static_cast<double>(num_classes)));
}

VerificationVerdict verdict_from_wa(const std::string& claimant,
                                    std::span<const std::pair<std::size_t, std::optional<double>>> wa,
                                    double threshold) {
  VerificationVerdict v;
  v.claimant = claimant;
  v.threshold = threshold;
  for (const auto& [client, value] : wa) {
    if (!value) {
      v.offline.push_back(client);
      continue;
    }
    v.per_client_wa.emplace_back(client, *value);
    v.passing += *value >= threshold ? 1 : 0;
  }
  std::sort(v.per_client_wa.begin(), v.per_client_wa.end());
  std::sort(v.offline.begin(), v.offline.end());
  v.participating = v.per_client_wa.size();
  require(v.participating > 0, ErrorKind::kVerification,
          "claimant '" + claimant + "' has no participating clients");
  v.decision = 2 * v.passing > v.participating;
  return v;
}

VerificationVerdict ownership_verification(const EnsembleModel& model, const Claimant& claimant, int target,
                                           double threshold) {
  std::vector<std::pair<std::size_t, std::optional<double>>> wa;
  for (const auto& c : claimant.clients) {
    if (!c.watermark_set) {
      wa.emplace_back(c.client, std::nullopt);
    } else if (c.watermark_set->empty()) {
      wa.emplace_back(c.client, 0.0);
    } else {
      wa.emplace_back(c.client, target_rate(model, *c.watermark_set, target));
    }
  }
  auto verdict = verdict_from_wa(claimant.id, wa, threshold);
  if (!claimant.clean.empty()) verdict.clean_accuracy = compute_ma(model, claimant.clean);
  return verdict;
}

}  // namespace certmark
