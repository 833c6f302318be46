#include "model/features.hpp"

#include <cmath>

namespace jointpred::model {

using scene::InstanceFrameSet;
using scene::Scene;
using scene::Vec2;

namespace {

int lane_type_slot(const std::string& t) {
  if (t == "lane") return 0;
  if (t == "boundary") return 1;
  return 2;
}

}  // namespace

SceneFeatures featurize(const Scene& sc, const InstanceFrameSet& frames, double d_scale) {
  SceneFeatures out;
  out.n_agents = frames.n_agents;
  out.n_map = frames.n_map;

  const int64_t t_p = static_cast<int64_t>(frames.agent_past_local.empty() ? 0 : frames.agent_past_local[0].size());
  std::vector<double> actor(static_cast<size_t>(out.n_agents * t_p * kActorFeatureDim), 0.0);
  for (int64_t i = 0; i < out.n_agents; ++i) {
    const auto& past = frames.agent_past_local[static_cast<size_t>(i)];
    for (int64_t k = 0; k < t_p; ++k) {
      const scene::PastStep& s = past[static_cast<size_t>(k)];
      double* row = actor.data() + (i * t_p + k) * kActorFeatureDim;
      if (!s.valid) continue;  // zero-filled mask
      row[0] = s.x * kPosScale;
      row[1] = s.y * kPosScale;
      row[2] = std::cos(s.heading);
      row[3] = std::sin(s.heading);
      row[4] = s.speed * kSpeedScale;
      row[5] = 1.0;
    }
  }
  out.actor_past = Tensor::from({out.n_agents, t_p, kActorFeatureDim}, std::move(actor));

  const int64_t pts = scene::kMapResamplePoints;
  std::vector<double> mapf(static_cast<size_t>(out.n_map * pts * kMapFeatureDim), 0.0);
  for (int64_t m = 0; m < out.n_map; ++m) {
    const auto& local = frames.map_points_local[static_cast<size_t>(m)];
    const int slot = lane_type_slot(sc.map[static_cast<size_t>(m)].lane_type);
    for (int64_t k = 0; k < pts; ++k) {
      double* row = mapf.data() + (m * pts + k) * kMapFeatureDim;
      const Vec2& p = local[static_cast<size_t>(k)];
      row[0] = p[0] * kPosScale;
      row[1] = p[1] * kPosScale;
      if (k + 1 < pts) {
        row[2] = (local[static_cast<size_t>(k + 1)][0] - p[0]) * kPosScale;
        row[3] = (local[static_cast<size_t>(k + 1)][1] - p[1]) * kPosScale;
      }
      row[4 + slot] = 1.0;
    }
  }
  out.map_points = Tensor::from({out.n_map, pts, kMapFeatureDim}, std::move(mapf));

  const int64_t n = frames.n();
  std::vector<double> rel(static_cast<size_t>(n * n * kRelPoseFeatureDim));
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      const scene::RelPose& rp = frames.rel_at(i, j);
      double* row = rel.data() + (i * n + j) * kRelPoseFeatureDim;
      row[0] = std::sin(rp.alpha);
      row[1] = std::cos(rp.alpha);
      row[2] = std::sin(rp.beta);
      row[3] = std::cos(rp.beta);
      row[4] = rp.dist / d_scale;
    }
  }
  out.rel_pose = Tensor::from({n * n, kRelPoseFeatureDim}, std::move(rel));

  const bool fut = !frames.agent_future_local.empty() && !frames.agent_future_local[0].empty();
  if (fut) {
    const int64_t t = static_cast<int64_t>(frames.agent_future_local[0].size());
    std::vector<double> gtf(static_cast<size_t>(out.n_agents * t * kGtFeatureDim), 0.0);
    std::vector<double> gtl(static_cast<size_t>(out.n_agents * t * 2), 0.0);
    for (int64_t i = 0; i < out.n_agents; ++i) {
      const auto& future = frames.agent_future_local[static_cast<size_t>(i)];
      for (int64_t k = 0; k < t; ++k) {
        const Vec2& p = future[static_cast<size_t>(k)];
        double* row = gtf.data() + (i * t + k) * kGtFeatureDim;
        row[0] = p[0] * kPosScale;
        row[1] = p[1] * kPosScale;
        if (k + 1 < t) {
          row[2] = (future[static_cast<size_t>(k + 1)][0] - p[0]) * kPosScale;
          row[3] = (future[static_cast<size_t>(k + 1)][1] - p[1]) * kPosScale;
        }
        double* lrow = gtl.data() + (i * t + k) * 2;
        lrow[0] = p[0];
        lrow[1] = p[1];
      }
    }
    out.gt_future = Tensor::from({out.n_agents, t, kGtFeatureDim}, std::move(gtf));
    out.gt_local = Tensor::from({out.n_agents, t, 2}, std::move(gtl));
  }

  out.agent_frames.assign(frames.frames.begin(), frames.frames.begin() + out.n_agents);
  for (const scene::AgentTrack& a : sc.agents) {
    out.agent_types.push_back(a.type);
    out.agent_ids.push_back(a.id);
  }
  return out;
}

SceneFeatures featurize(const Scene& sc, double d_scale) {
  return featurize(sc, scene::build_frames(sc), d_scale);
}

}  // namespace jointpred::model
