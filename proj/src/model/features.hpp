#pragma once

#include <vector>

#include "autodiff/tensor.hpp"
#include "scene/scene.hpp"

namespace jointpred::model {

using ad::Tensor;

// Feature scaling keeps encoder inputs O(1) without touching loss targets,
// which stay in meters.
inline constexpr double kPosScale = 0.1;
inline constexpr double kSpeedScale = 0.1;
inline constexpr int64_t kActorFeatureDim = 6;  // x, y, cos h, sin h, speed, valid
inline constexpr int64_t kMapFeatureDim = 7;    // x, y, dx, dy, lane-type one-hot(3)
inline constexpr int64_t kGtFeatureDim = 4;     // x, y, dx, dy
inline constexpr int64_t kRelPoseFeatureDim = 5;  // sin/cos alpha, sin/cos beta, d/d_scale

// Constant (never taped) tensors describing one scene in instance frames.
struct SceneFeatures {
  int64_t n_agents = 0;
  int64_t n_map = 0;
  Tensor actor_past;  // [N_a, T_p, kActorFeatureDim]
  Tensor map_points;  // [N_m, P, kMapFeatureDim]
  Tensor rel_pose;    // [N*N, kRelPoseFeatureDim]
  Tensor gt_future;   // [N_a, T, kGtFeatureDim]; undefined when futures absent
  Tensor gt_local;    // [N_a, T, 2] loss target in agent frames; undefined when absent
  std::vector<scene::LocalFrame> agent_frames;
  std::vector<scene::AgentType> agent_types;
  std::vector<int64_t> agent_ids;

  bool has_future() const { return gt_local.defined(); }
  int64_t n() const { return n_agents + n_map; }
};

SceneFeatures featurize(const scene::Scene& sc, const scene::InstanceFrameSet& frames, double d_scale);
SceneFeatures featurize(const scene::Scene& sc, double d_scale);

}  // namespace jointpred::model
