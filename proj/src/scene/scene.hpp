#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "common/errors.hpp"

namespace jointpred::scene {

using Vec2 = std::array<double, 2>;

enum class AgentType { vehicle, pedestrian, cyclist };

const char* agent_type_name(AgentType t);
AgentType agent_type_from_name(const std::string& name);

// collision circle radius per agent type, meters
double agent_radius(AgentType t);
// documented speed cap per agent type, meters/second
double agent_speed_cap(AgentType t);

// normalize angle to (-pi, pi]
double wrap_angle(double a);

struct PastStep {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, (-pi, pi]
  double speed = 0.0;    // m/s
  bool valid = true;
};

struct AgentTrack {
  int64_t id = 0;
  AgentType type = AgentType::vehicle;
  std::vector<PastStep> past;   // exactly t_p entries
  std::vector<Vec2> future;     // exactly t entries when present, else empty
};

struct MapPolyline {
  int64_t id = 0;
  std::string lane_type = "lane";
  std::vector<Vec2> points;  // >= 2
};

struct Scene {
  std::string id;
  double dt = 0.1;
  std::vector<AgentTrack> agents;
  std::vector<MapPolyline> map;

  int64_t n_agents() const { return static_cast<int64_t>(agents.size()); }
  int64_t n_map() const { return static_cast<int64_t>(map.size()); }
  bool has_futures() const;

  // Throws ValidationError on violated invariants. The last past step of each
  // agent must be observed (valid): it anchors the instance frame.
  void validate(int64_t t_p, int64_t t_future) const;
};

struct LocalFrame {
  double x = 0.0;
  double y = 0.0;
  double rot = 0.0;  // (-pi, pi]

  Vec2 to_local(const Vec2& global) const;
  Vec2 to_global(const Vec2& local) const;
};

struct RelPose {
  double alpha = 0.0;  // heading difference, (-pi, pi]
  double beta = 0.0;   // azimuth of j seen from i's frame, (-pi, pi]
  double dist = 0.0;   // meters, >= 0
};

// alpha = wrap(rot_j - rot_i); d = |origin_j - origin_i|;
// beta = wrap(atan2(dy, dx) - rot_i), and 0 when d == 0.
RelPose relative_pose(const LocalFrame& frame_i, const LocalFrame& frame_j);

struct InstanceFrameSet {
  int64_t n_agents = 0;
  int64_t n_map = 0;
  std::vector<LocalFrame> frames;  // agents first, then polylines
  std::vector<RelPose> rel;        // row-major n() x n()

  // instance features re-expressed in their own frames
  std::vector<std::vector<PastStep>> agent_past_local;  // [N_a][t_p]
  std::vector<std::vector<Vec2>> agent_future_local;    // [N_a][t], empty when absent
  std::vector<std::vector<Vec2>> map_points_local;      // [N_m][map_points]

  int64_t n() const { return n_agents + n_map; }
  const RelPose& rel_at(int64_t i, int64_t j) const { return rel[static_cast<size_t>(i * n() + j)]; }
};

// Number of points every polyline is resampled to before encoding.
inline constexpr int64_t kMapResamplePoints = 10;

// One frame per agent (last observed pose, heading on +x) and per polyline
// (centroid origin, rotation from the endpoint displacement; 0 when the
// endpoints coincide), plus the full pairwise relative-pose grid.
InstanceFrameSet build_frames(const Scene& scene);

// arclength resample to exactly n points, endpoints preserved
std::vector<Vec2> resample_polyline(const std::vector<Vec2>& points, int64_t n);

}  // namespace jointpred::scene
