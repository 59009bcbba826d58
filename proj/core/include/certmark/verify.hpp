#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "certmark/gnn.hpp"
#include "certmark/watermark.hpp"

namespace certmark {

double compute_ma(const EnsembleModel& model, std::span<const Graph> clean);

// Fraction of watermarked graphs predicted `target`, averaged per owning
// client (client -1, the global watermark, is its own group).
double compute_wa(const EnsembleModel& model, std::span<const WatermarkedGraph> watermarked, int target);
std::map<int, double> per_client_wa(const EnsembleModel& model, std::span<const WatermarkedGraph> watermarked,
                                    int target);

// Fraction of `graphs` predicted target.
double target_rate(const EnsembleModel& model, std::span<const Graph> graphs, int target);

struct Metrics {
  double ma = 0;
  double wa = 0;
  std::map<int, double> cwa;  // r -> CWA@r
  std::map<int, double> per_client_wa;
};

// MA on `clean`; WA and CWA@r for each r in `radii`, all averaged per owning
// client like compute_wa so that CWA@0 == WA.
Metrics evaluate_metrics(const EnsembleModel& model, std::span<const Graph> clean,
                         std::span<const WatermarkedGraph> watermarked, int target, std::span<const int> radii);

// Judge threshold: halfway between chance (1/C) and certainty, at least 0.5.
double default_verification_threshold(std::size_t num_classes);

struct ClientSubmission {
  std::size_t client = 0;
  std::optional<std::vector<Graph>> watermark_set;  // nullopt: client offline
};

struct Claimant {
  std::string id;
  std::vector<Graph> clean;
  std::vector<ClientSubmission> clients;
};

struct VerificationVerdict {
  std::string claimant;
  std::vector<std::pair<std::size_t, double>> per_client_wa;  // participating clients, ascending id
  std::vector<std::size_t> offline;
  std::size_t participating = 0;
  std::size_t passing = 0;
  double threshold = 0;
  double clean_accuracy = 0;
  bool decision = false;
};

// Majority rule over participating clients: positive iff strictly more than
// half reach WA >= threshold. No participating client is a verification error.
VerificationVerdict verdict_from_wa(const std::string& claimant, std::span<const std::pair<std::size_t, std::optional<double>>> wa,
                                    double threshold);

VerificationVerdict ownership_verification(const EnsembleModel& model, const Claimant& claimant, int target,
                                           double threshold);

}  // namespace certmark
