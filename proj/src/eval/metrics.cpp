#include "eval/metrics.hpp"

#include <cmath>

namespace jointpred::eval {

namespace {

// sqrt(dx^2 + dy^2); spelled out so independent recomputations can reproduce
// the metric bit for bit
double euclid(const Vec2& a, const Vec2& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

void check_pred(const ScenePrediction& pred, const GroundTruth& gt) {
  if (pred.traj.empty()) throw ValidationError("metrics: prediction has no modes");
  const size_t na = gt.size();
  for (const auto& mode : pred.traj) {
    if (mode.size() != na) throw ValidationError("metrics: agent count mismatch between modes and GT");
    for (size_t i = 0; i < na; ++i) {
      if (mode[i].size() != gt[i].size()) {
        throw ValidationError("metrics: step count mismatch between prediction and GT");
      }
    }
  }
}

}  // namespace

MinMetrics min_scene_metrics(const ScenePrediction& pred, const GroundTruth& gt) {
  check_pred(pred, gt);
  MinMetrics out;
  const int64_t k = pred.k();
  const int64_t na = static_cast<int64_t>(gt.size());
  double best_ade = 0.0, best_fde = 0.0;
  for (int64_t mode = 0; mode < k; ++mode) {
    double ade = 0.0, fde = 0.0;
    int64_t count = 0;
    for (int64_t i = 0; i < na; ++i) {
      const auto& p = pred.traj[static_cast<size_t>(mode)][static_cast<size_t>(i)];
      const auto& g = gt[static_cast<size_t>(i)];
      for (size_t s = 0; s < g.size(); ++s) {
        ade += euclid(p[s], g[s]);
        ++count;
      }
      fde += euclid(p.back(), g.back());
    }
    ade /= static_cast<double>(count);
    fde /= static_cast<double>(na);
    if (mode == 0 || ade < best_ade) {
      best_ade = ade;
      out.best_sade_mode = mode;
    }
    if (mode == 0 || fde < best_fde) {
      best_fde = fde;
      out.best_sfde_mode = mode;
    }
  }
  out.min_sade = best_ade;
  out.min_sfde = best_fde;
  return out;
}

double actor_miss_rate(const ScenePrediction& pred, const GroundTruth& gt, double threshold) {
  if (threshold <= 0.0) throw ValidationError("actor_miss_rate: threshold must be positive");
  check_pred(pred, gt);
  const int64_t mode = min_scene_metrics(pred, gt).best_sade_mode;
  const auto& m = pred.traj[static_cast<size_t>(mode)];
  int64_t missed = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const double fde = euclid(m[i].back(), gt[i].back());
    if (fde > threshold) ++missed;
  }
  return static_cast<double>(missed) / static_cast<double>(gt.size());
}

double actor_collision_rate(const ScenePrediction& pred, const std::vector<scene::AgentType>& types,
                            int64_t mode_index) {
  if (mode_index < 0 || mode_index >= pred.k()) {
    throw ValidationError("actor_collision_rate: mode index out of range");
  }
  const auto& mode = pred.traj[static_cast<size_t>(mode_index)];
  const size_t na = mode.size();
  if (types.size() != na) throw ValidationError("actor_collision_rate: agent type count mismatch");
  if (na == 0) throw ValidationError("actor_collision_rate: no agents");
  std::vector<bool> hit(na, false);
  for (size_t i = 0; i < na; ++i) {
    for (size_t j = i + 1; j < na; ++j) {
      const double rsum = scene::agent_radius(types[i]) + scene::agent_radius(types[j]);
      const size_t steps = std::min(mode[i].size(), mode[j].size());
      for (size_t s = 0; s < steps; ++s) {
        const double d = euclid(mode[i][s], mode[j][s]);
        if (d < rsum) {
          hit[i] = true;
          hit[j] = true;
          break;
        }
      }
    }
  }
  int64_t involved = 0;
  for (bool h : hit) involved += h ? 1 : 0;
  return static_cast<double>(involved) / static_cast<double>(na);
}

SceneMetrics evaluate_scene(const std::string& scene_id, const ScenePrediction& pred,
                            const GroundTruth& gt, const std::vector<scene::AgentType>& types,
                            double miss_threshold) {
  SceneMetrics out;
  out.scene_id = scene_id;
  out.n_agents = static_cast<int64_t>(gt.size());
  MinMetrics mm = min_scene_metrics(pred, gt);
  out.min_sade = mm.min_sade;
  out.min_sfde = mm.min_sfde;
  out.best_mode = mm.best_sade_mode;
  out.actor_mr = actor_miss_rate(pred, gt, miss_threshold);
  out.actor_cr = actor_collision_rate(pred, types, mm.best_sade_mode);
  return out;
}

double ground_truth_collision_rate(const scene::Scene& sc) {
  if (!sc.has_futures()) throw ValidationError("ground_truth_collision_rate: scene has no futures");
  ScenePrediction as_pred;
  as_pred.scores = {1.0};
  as_pred.traj.resize(1);
  std::vector<scene::AgentType> types;
  for (const scene::AgentTrack& a : sc.agents) {
    as_pred.traj[0].push_back(a.future);
    types.push_back(a.type);
  }
  return actor_collision_rate(as_pred, types, 0);
}

}  // namespace jointpred::eval
