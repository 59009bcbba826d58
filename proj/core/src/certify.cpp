#include "certmark/certify.hpp"

#include <functional>

namespace certmark {

Certificate certified_radius(const VoteCount& votes) {
  const std::size_t c = votes.counts.size();
  require(c >= 2, ErrorKind::kContract, "certification needs at least two classes");
  int total = 0;
  for (int v : votes.counts) {
    require(v >= 0, ErrorKind::kContract, "negative vote count");
    total += v;
  }
  require(total >= 1, ErrorKind::kContract, "empty vote vector");
  Certificate cert;
  cert.votes = votes;
  cert.label_a = 0;
  for (std::size_t y = 1; y < c; ++y)
    if (votes.counts[y] > votes.counts[static_cast<std::size_t>(cert.label_a)]) cert.label_a = static_cast<int>(y);
  cert.label_b = cert.label_a == 0 ? 1 : 0;
  for (std::size_t y = 0; y < c; ++y) {
    if (static_cast<int>(y) == cert.label_a) continue;
    if (votes.counts[y] > votes.counts[static_cast<std::size_t>(cert.label_b)]) cert.label_b = static_cast<int>(y);
  }
  cert.n_a = votes.counts[static_cast<std::size_t>(cert.label_a)];
  cert.n_b = votes.counts[static_cast<std::size_t>(cert.label_b)];
  cert.tie = cert.n_a == cert.n_b;
  const int numerator = cert.n_a - cert.n_b + (cert.label_a < cert.label_b ? 1 : 0) - 1;
  // Floor division; numerator >= -1.
  cert.r_star = numerator >= 0 ? numerator / 2 : -1;
  return cert;
}

bool brute_force_certificate_check(const VoteCount& votes, int r) {
  const std::size_t c = votes.counts.size();
  require(c >= 2 && r >= 0, ErrorKind::kContract, "invalid certificate check arguments");
  int total = 0;
  for (int v : votes.counts) total += v;
  require(r <= total, ErrorKind::kContract, "r exceeds the number of submodels");
  auto winner = [c](const std::vector<int>& counts) {
    int best = 0;
    for (std::size_t y = 1; y < c; ++y)
      if (counts[y] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(y);
    return best;
  };
  const int base = winner(votes.counts);
  std::vector<int> counts = votes.counts;
  // Take exactly r votes away (any labels) and hand exactly r votes out (any
  // labels). Handing a vote back to its own label covers "up to r".
  std::function<bool(std::size_t, int)> add = [&](std::size_t y, int left) -> bool {
    if (y + 1 == c) {
      counts[y] += left;
      const bool stable = winner(counts) == base;
      counts[y] -= left;
      return stable;
    }
    for (int k = 0; k <= left; ++k) {
      counts[y] += k;
      const bool stable = add(y + 1, left - k);
      counts[y] -= k;
      if (!stable) return false;
    }
    return true;
  };
  std::function<bool(std::size_t, int)> remove = [&](std::size_t y, int left) -> bool {
    if (y == c) return left == 0 ? add(0, r) : true;
    const int cap = std::min(left, votes.counts[y]);
    for (int k = 0; k <= cap; ++k) {
      counts[y] -= k;
      const bool stable = remove(y + 1, left - k);
      counts[y] += k;
      if (!stable) return false;
    }
    return true;
  };
  return remove(0, r);
}

double cwa_from_votes(std::span<const VoteCount> votes, int target, int r) {
  require(!votes.empty(), ErrorKind::kContract, "certified accuracy over an empty set");
  require(r >= 0, ErrorKind::kContract, "radius must be non-negative");
  std::size_t hits = 0;
  for (const auto& v : votes) {
    if (v.predicted != target) continue;
    if (r <= certified_radius(v).r_star) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(votes.size());
}

double cwa_at_r(const EnsembleModel& model, std::span<const Graph> watermarked, int target, int r) {
  require(!watermarked.empty(), ErrorKind::kContract, "certified accuracy over an empty set");
  const auto votes = ensemble_votes(model, watermarked);
  return cwa_from_votes(votes, target, r);
}

}  // namespace certmark
