#pragma once

#include <string>
#include <vector>

#include "scene/scene.hpp"

namespace jointpred::eval {

using scene::Vec2;

// K joint modes over plain buffers, decoupled from the autodiff graph.
struct ScenePrediction {
  std::vector<double> scores;                      // K, sum to 1
  std::vector<std::vector<std::vector<Vec2>>> traj;  // [K][N_a][T]

  int64_t k() const { return static_cast<int64_t>(traj.size()); }
  int64_t n_agents() const { return traj.empty() ? 0 : static_cast<int64_t>(traj[0].size()); }
};

using GroundTruth = std::vector<std::vector<Vec2>>;  // [N_a][T]

struct MinMetrics {
  double min_sade = 0.0;
  double min_sfde = 0.0;
  int64_t best_sade_mode = 0;  // the minima may come from different modes
  int64_t best_sfde_mode = 0;
};

// Per mode: ADE = mean over agents and steps of the Euclidean error,
// FDE = mean over agents of the final-step error; minima over modes.
MinMetrics min_scene_metrics(const ScenePrediction& pred, const GroundTruth& gt);

// Fraction of agents whose final-step error exceeds the threshold within the
// minSADE-selected mode.
double actor_miss_rate(const ScenePrediction& pred, const GroundTruth& gt, double threshold = 2.0);

// Fraction of agents involved in at least one pairwise circle overlap within
// the given mode (center distance below the sum of type radii at any step).
double actor_collision_rate(const ScenePrediction& pred, const std::vector<scene::AgentType>& types,
                            int64_t mode_index);

struct SceneMetrics {
  std::string scene_id;
  int64_t n_agents = 0;
  double min_sade = 0.0;
  double min_sfde = 0.0;
  double actor_mr = 0.0;
  double actor_cr = 0.0;
  int64_t best_mode = 0;
};

SceneMetrics evaluate_scene(const std::string& scene_id, const ScenePrediction& pred,
                            const GroundTruth& gt, const std::vector<scene::AgentType>& types,
                            double miss_threshold = 2.0);

// collision check on raw tracks; used to certify generated ground truth
double ground_truth_collision_rate(const scene::Scene& sc);

}  // namespace jointpred::eval
