#include "joint/recombination.hpp"

#include <algorithm>
#include <cmath>

namespace jointpred::joint {

namespace {

bool mode_less(const JointMode& a, const JointMode& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  return a.mode_per_agent < b.mode_per_agent;
}

void finalize_scores(std::vector<JointMode>& modes) {
  double total = 0.0;
  for (JointMode& m : modes) {
    m.raw_score = std::exp(m.log_score);
    total += m.raw_score;
  }
  for (JointMode& m : modes) m.score = total > 0.0 ? m.raw_score / total : 0.0;
}

void check_rows(const std::vector<std::vector<double>>& scores) {
  if (scores.empty()) throw ValidationError("recombine: no agents");
  for (const auto& row : scores) {
    if (row.empty()) throw ValidationError("recombine: agent with zero modes");
    if (row.size() != scores[0].size()) throw ValidationError("recombine: ragged score rows");
    for (double v : row) {
      if (!std::isfinite(v) || v < 0.0) throw ValidationError("recombine: scores must be finite and >= 0");
    }
  }
}

}  // namespace

std::vector<std::vector<double>> normalize_rows(const std::vector<std::vector<double>>& scores) {
  check_rows(scores);
  std::vector<std::vector<double>> out = scores;
  for (auto& row : out) {
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum <= 0.0) throw ValidationError("recombine: a score row sums to zero");
    if (sum != 1.0) {
      for (double& v : row) v /= sum;
    }
  }
  return out;
}

std::vector<JointMode> recombine_bruteforce(const std::vector<std::vector<double>>& scores_in,
                                            int64_t top_k, int64_t cap) {
  const auto scores = normalize_rows(scores_in);
  const int64_t na = static_cast<int64_t>(scores.size());
  const int64_t k = static_cast<int64_t>(scores[0].size());

  double total_f = 1.0;
  for (int64_t i = 0; i < na; ++i) {
    total_f *= static_cast<double>(k);
    if (total_f > static_cast<double>(cap)) {
      throw ValidationError("recombine_bruteforce: " + std::to_string(k) + "^" + std::to_string(na) +
                            " combinations exceed the cap of " + std::to_string(cap) +
                            "; use beam search");
    }
  }
  const int64_t total = static_cast<int64_t>(total_f);

  std::vector<JointMode> modes;
  modes.reserve(static_cast<size_t>(total));
  std::vector<int64_t> tuple(static_cast<size_t>(na), 0);
  for (int64_t c = 0; c < total; ++c) {
    JointMode m;
    m.mode_per_agent = tuple;
    double ls = 0.0;
    for (int64_t i = 0; i < na; ++i) {
      ls += std::log(scores[static_cast<size_t>(i)][static_cast<size_t>(tuple[static_cast<size_t>(i)])]);
    }
    m.log_score = ls;
    modes.push_back(std::move(m));
    // odometer, least significant digit last: keeps lexicographic order
    for (int64_t i = na - 1; i >= 0; --i) {
      if (++tuple[static_cast<size_t>(i)] < k) break;
      tuple[static_cast<size_t>(i)] = 0;
    }
  }
  std::stable_sort(modes.begin(), modes.end(), mode_less);
  if (top_k >= 0 && static_cast<int64_t>(modes.size()) > top_k) {
    modes.resize(static_cast<size_t>(top_k));
  }
  finalize_scores(modes);
  return modes;
}

std::vector<JointMode> recombine_beam(const std::vector<std::vector<double>>& scores_in,
                                      int64_t top_k, int64_t beam_width) {
  if (top_k <= 0) throw ValidationError("recombine_beam: top_k must be positive");
  const auto scores = normalize_rows(scores_in);
  const int64_t na = static_cast<int64_t>(scores.size());
  const int64_t k = static_cast<int64_t>(scores[0].size());
  const int64_t width = std::max(beam_width, top_k);

  std::vector<JointMode> beam(1);
  beam[0].log_score = 0.0;
  for (int64_t i = 0; i < na; ++i) {
    std::vector<JointMode> next;
    next.reserve(beam.size() * static_cast<size_t>(k));
    for (const JointMode& partial : beam) {
      for (int64_t mode = 0; mode < k; ++mode) {
        JointMode ext;
        ext.mode_per_agent = partial.mode_per_agent;
        ext.mode_per_agent.push_back(mode);
        ext.log_score =
            partial.log_score + std::log(scores[static_cast<size_t>(i)][static_cast<size_t>(mode)]);
        next.push_back(std::move(ext));
      }
    }
    std::stable_sort(next.begin(), next.end(), mode_less);
    if (static_cast<int64_t>(next.size()) > width) next.resize(static_cast<size_t>(width));
    beam = std::move(next);
  }
  if (static_cast<int64_t>(beam.size()) > top_k) beam.resize(static_cast<size_t>(top_k));
  finalize_scores(beam);
  return beam;
}

}  // namespace jointpred::joint
