#include "scene/scene.hpp"

#include <cmath>
#include <unordered_set>

namespace jointpred::scene {

const char* agent_type_name(AgentType t) {
  switch (t) {
    case AgentType::vehicle: return "vehicle";
    case AgentType::pedestrian: return "pedestrian";
    case AgentType::cyclist: return "cyclist";
  }
  return "vehicle";
}

AgentType agent_type_from_name(const std::string& name) {
  if (name == "vehicle") return AgentType::vehicle;
  if (name == "pedestrian") return AgentType::pedestrian;
  if (name == "cyclist") return AgentType::cyclist;
  throw ValidationError("unknown agent type: " + name);
}

double agent_radius(AgentType t) {
  switch (t) {
    case AgentType::vehicle: return 2.0;
    case AgentType::cyclist: return 1.0;
    case AgentType::pedestrian: return 0.5;
  }
  return 2.0;
}

double agent_speed_cap(AgentType t) {
  switch (t) {
    case AgentType::vehicle: return 15.0;
    case AgentType::cyclist: return 6.0;
    case AgentType::pedestrian: return 2.0;
  }
  return 15.0;
}

double wrap_angle(double a) {
  double y = std::remainder(a, 2.0 * M_PI);
  if (y <= -M_PI) y += 2.0 * M_PI;
  return y;
}

bool Scene::has_futures() const {
  for (const AgentTrack& a : agents) {
    if (a.future.empty()) return false;
  }
  return !agents.empty();
}

void Scene::validate(int64_t t_p, int64_t t_future) const {
  if (agents.empty()) throw ValidationError("scene " + id + ": needs at least one agent");
  if (!(dt > 0.0)) throw ValidationError("scene " + id + ": dt must be positive");
  std::unordered_set<int64_t> ids;
  for (const AgentTrack& a : agents) {
    if (!ids.insert(a.id).second) {
      throw ValidationError("scene " + id + ": duplicate agent id " + std::to_string(a.id));
    }
    if (static_cast<int64_t>(a.past.size()) != t_p) {
      throw ValidationError("scene " + id + ": agent " + std::to_string(a.id) + " has " +
                            std::to_string(a.past.size()) + " past steps, expected " + std::to_string(t_p));
    }
    if (!a.future.empty() && static_cast<int64_t>(a.future.size()) != t_future) {
      throw ValidationError("scene " + id + ": agent " + std::to_string(a.id) + " has " +
                            std::to_string(a.future.size()) + " future steps, expected " +
                            std::to_string(t_future));
    }
    if (!a.past.back().valid) {
      throw ValidationError("scene " + id + ": agent " + std::to_string(a.id) +
                            " has no observation at the current step");
    }
    bool any_valid = false;
    for (const PastStep& s : a.past) {
      any_valid = any_valid || s.valid;
      if (s.valid) {
        if (!(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.heading) && std::isfinite(s.speed))) {
          throw ValidationError("scene " + id + ": non-finite past state for agent " + std::to_string(a.id));
        }
        if (s.heading <= -M_PI - 1e-12 || s.heading > M_PI + 1e-12) {
          throw ValidationError("scene " + id + ": heading out of (-pi, pi] for agent " + std::to_string(a.id));
        }
      }
    }
    if (!any_valid) {
      throw ValidationError("scene " + id + ": agent " + std::to_string(a.id) + " has no valid past step");
    }
    for (const Vec2& p : a.future) {
      if (!(std::isfinite(p[0]) && std::isfinite(p[1]))) {
        throw ValidationError("scene " + id + ": non-finite future point for agent " + std::to_string(a.id));
      }
    }
  }
  std::unordered_set<int64_t> mids;
  for (const MapPolyline& p : map) {
    if (!mids.insert(p.id).second) {
      throw ValidationError("scene " + id + ": duplicate polyline id " + std::to_string(p.id));
    }
    if (p.points.size() < 2) {
      throw ValidationError("scene " + id + ": polyline " + std::to_string(p.id) + " has fewer than 2 points");
    }
    for (const Vec2& q : p.points) {
      if (!(std::isfinite(q[0]) && std::isfinite(q[1]))) {
        throw ValidationError("scene " + id + ": non-finite map point in polyline " + std::to_string(p.id));
      }
    }
  }
}

Vec2 LocalFrame::to_local(const Vec2& global) const {
  const double dx = global[0] - x;
  const double dy = global[1] - y;
  const double c = std::cos(rot), s = std::sin(rot);
  return {c * dx + s * dy, -s * dx + c * dy};
}

Vec2 LocalFrame::to_global(const Vec2& local) const {
  const double c = std::cos(rot), s = std::sin(rot);
  return {x + c * local[0] - s * local[1], y + s * local[0] + c * local[1]};
}

RelPose relative_pose(const LocalFrame& frame_i, const LocalFrame& frame_j) {
  RelPose out;
  out.alpha = wrap_angle(frame_j.rot - frame_i.rot);
  const double dx = frame_j.x - frame_i.x;
  const double dy = frame_j.y - frame_i.y;
  out.dist = std::hypot(dx, dy);
  // The azimuth is undefined at zero distance. Snap within 1e-9 m: offsets at
  // that scale are rounding residue whose direction carries no information,
  // and an exact-zero test would make the pose jump under rigid transforms.
  out.beta = out.dist < 1e-9 ? 0.0 : wrap_angle(std::atan2(dy, dx) - frame_i.rot);
  return out;
}

std::vector<Vec2> resample_polyline(const std::vector<Vec2>& points, int64_t n) {
  if (points.size() < 2) throw ValidationError("resample_polyline: needs at least 2 points");
  if (n < 2) throw ValidationError("resample_polyline: target count must be >= 2");
  std::vector<double> cum(points.size(), 0.0);
  for (size_t i = 1; i < points.size(); ++i) {
    cum[i] = cum[i - 1] + std::hypot(points[i][0] - points[i - 1][0], points[i][1] - points[i - 1][1]);
  }
  const double total = cum.back();
  std::vector<Vec2> out(static_cast<size_t>(n));
  if (total == 0.0) {  // degenerate: all points coincide
    for (auto& p : out) p = points.front();
    return out;
  }
  size_t seg = 0;
  for (int64_t k = 0; k < n; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(n - 1);
    while (seg + 2 < points.size() && cum[seg + 1] < target) ++seg;
    const double span = cum[seg + 1] - cum[seg];
    const double t = span == 0.0 ? 0.0 : (target - cum[seg]) / span;
    out[static_cast<size_t>(k)] = {points[seg][0] + t * (points[seg + 1][0] - points[seg][0]),
                                   points[seg][1] + t * (points[seg + 1][1] - points[seg][1])};
  }
  return out;
}

InstanceFrameSet build_frames(const Scene& scene) {
  InstanceFrameSet out;
  out.n_agents = scene.n_agents();
  out.n_map = scene.n_map();
  out.frames.reserve(static_cast<size_t>(out.n()));

  for (const AgentTrack& a : scene.agents) {
    const PastStep& last = a.past.back();
    out.frames.push_back({last.x, last.y, wrap_angle(last.heading)});
  }
  for (const MapPolyline& p : scene.map) {
    std::vector<Vec2> pts = resample_polyline(p.points, kMapResamplePoints);
    double cx = 0.0, cy = 0.0;
    for (const Vec2& q : pts) {
      cx += q[0];
      cy += q[1];
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    const double ex = pts.back()[0] - pts.front()[0];
    const double ey = pts.back()[1] - pts.front()[1];
    const double rot = (ex == 0.0 && ey == 0.0) ? 0.0 : std::atan2(ey, ex);
    out.frames.push_back({cx, cy, wrap_angle(rot)});
    out.map_points_local.push_back(std::move(pts));  // transformed below
  }

  // features in their own frames
  out.agent_past_local.resize(scene.agents.size());
  out.agent_future_local.resize(scene.agents.size());
  for (size_t i = 0; i < scene.agents.size(); ++i) {
    const AgentTrack& a = scene.agents[i];
    const LocalFrame& f = out.frames[i];
    auto& past = out.agent_past_local[i];
    past.resize(a.past.size());
    for (size_t k = 0; k < a.past.size(); ++k) {
      const PastStep& s = a.past[k];
      if (!s.valid) {
        past[k] = PastStep{0.0, 0.0, 0.0, 0.0, false};  // zero-filled, masked downstream
        continue;
      }
      const Vec2 local = f.to_local({s.x, s.y});
      past[k] = PastStep{local[0], local[1], wrap_angle(s.heading - f.rot), s.speed, true};
    }
    auto& fut = out.agent_future_local[i];
    fut.resize(a.future.size());
    for (size_t k = 0; k < a.future.size(); ++k) fut[k] = f.to_local(a.future[k]);
  }
  for (size_t m = 0; m < out.map_points_local.size(); ++m) {
    const LocalFrame& f = out.frames[static_cast<size_t>(out.n_agents) + m];
    for (Vec2& q : out.map_points_local[m]) q = f.to_local(q);
  }

  const int64_t n = out.n();
  out.rel.resize(static_cast<size_t>(n * n));
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      out.rel[static_cast<size_t>(i * n + j)] =
          relative_pose(out.frames[static_cast<size_t>(i)], out.frames[static_cast<size_t>(j)]);
    }
  }
  return out;
}

}  // namespace jointpred::scene
