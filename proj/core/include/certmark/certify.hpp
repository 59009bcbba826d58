#pragma once

#include <span>
#include <vector>

#include "certmark/gnn.hpp"

namespace certmark {

struct Certificate {
  VoteCount votes;
  int label_a = 0;
  int label_b = 0;
  int n_a = 0;
  int n_b = 0;
  // floor((N_A - N_B + I[A < B] - 1) / 2); negative means no certificate.
  int r_star = 0;
  // N_A == N_B, so the prediction rests on the index tie-break alone.
  bool tie = false;

  int usable_radius() const { return r_star < 0 ? 0 : r_star; }
};

Certificate certified_radius(const VoteCount& votes);

// True iff no reassignment of the votes of up to r submodels to arbitrary
// labels changes the tie-broken majority label.
bool brute_force_certificate_check(const VoteCount& votes, int r);

// Fraction of entries predicted `target` with r <= r_star.
double cwa_from_votes(std::span<const VoteCount> votes, int target, int r);
double cwa_at_r(const EnsembleModel& model, std::span<const Graph> watermarked, int target, int r);

}  // namespace certmark
