#pragma once

#include <cstdint>
#include <vector>

#include "common/errors.hpp"

namespace jointpred::joint {

// One joint mode: a marginal mode index per agent and the product score.
struct JointMode {
  std::vector<int64_t> mode_per_agent;
  double log_score = 0.0;  // sum of log marginal scores, accumulated in agent order
  double raw_score = 0.0;  // product of marginal scores
  double score = 0.0;      // raw_score renormalized over the returned set
};

// Rows are per-agent mode scores; rows that do not sum to 1 are renormalized
// (each row divided by its sum) before combination.
std::vector<std::vector<double>> normalize_rows(const std::vector<std::vector<double>>& scores);

// Exact enumeration of all K^{N_a} combinations, sorted by descending score
// with lexicographic tie-break on the index tuple. top_k < 0 returns all.
// Throws when the combination count exceeds cap.
std::vector<JointMode> recombine_bruteforce(const std::vector<std::vector<double>>& scores,
                                            int64_t top_k = -1, int64_t cap = 1000000);

// Beam search over agents, keeping the beam_width best partial products
// (beam_width = max(beam_width, top_k); 0 means top_k). Because every
// extension multiplies by at most the row maximum, a beam of width top_k is
// exact for this product objective; the test suite pins that equivalence
// against the exhaustive oracle. Scores accumulate in the log domain.
std::vector<JointMode> recombine_beam(const std::vector<std::vector<double>>& scores,
                                      int64_t top_k, int64_t beam_width = 0);

}  // namespace jointpred::joint
