#include "scene/generator.hpp"

#include <algorithm>
#include <cmath>

namespace jointpred::scene {

namespace {

// dense polyline with arclength lookup
struct ArcPath {
  std::vector<Vec2> pts;
  std::vector<double> cum;

  explicit ArcPath(std::vector<Vec2> p) : pts(std::move(p)) {
    cum.resize(pts.size(), 0.0);
    for (size_t i = 1; i < pts.size(); ++i) {
      cum[i] = cum[i - 1] + std::hypot(pts[i][0] - pts[i - 1][0], pts[i][1] - pts[i - 1][1]);
    }
  }

  double length() const { return cum.back(); }

  size_t segment_at(double s) const {
    size_t lo = 0, hi = pts.size() - 2;
    while (lo < hi) {
      size_t mid = (lo + hi + 1) / 2;
      if (cum[mid] <= s) lo = mid; else hi = mid - 1;
    }
    return lo;
  }

  Vec2 pos(double s) const {
    s = std::clamp(s, 0.0, length());
    const size_t i = segment_at(s);
    const double span = cum[i + 1] - cum[i];
    const double t = span == 0.0 ? 0.0 : (s - cum[i]) / span;
    return {pts[i][0] + t * (pts[i + 1][0] - pts[i][0]), pts[i][1] + t * (pts[i + 1][1] - pts[i][1])};
  }

  double heading(double s) const {
    s = std::clamp(s, 0.0, length());
    size_t i = segment_at(s);
    // skip zero-length segments
    while (i + 2 < pts.size() && cum[i + 1] - cum[i] == 0.0) ++i;
    return wrap_angle(std::atan2(pts[i + 1][1] - pts[i][1], pts[i + 1][0] - pts[i][0]));
  }
};

ArcPath line_path(Vec2 from, double theta, double len, double step = 2.0) {
  std::vector<Vec2> pts;
  const int64_t n = std::max<int64_t>(2, static_cast<int64_t>(std::ceil(len / step)) + 1);
  for (int64_t i = 0; i < n; ++i) {
    const double s = len * static_cast<double>(i) / static_cast<double>(n - 1);
    pts.push_back({from[0] + s * std::cos(theta), from[1] + s * std::sin(theta)});
  }
  return ArcPath(std::move(pts));
}

// northbound approach on x=0 entering the junction, then straight / 90-degree
// arc left or right, then a straight exit. turn: -1 right, 0 straight, +1 left
ArcPath junction_path(double approach_len, double radius, int turn, double exit_len) {
  std::vector<Vec2> pts;
  const Vec2 entry{0.0, -radius};
  const double step = 1.0;
  const int64_t na = std::max<int64_t>(2, static_cast<int64_t>(approach_len / step));
  for (int64_t i = 0; i < na; ++i) {
    const double y = -radius - approach_len + approach_len * static_cast<double>(i) / static_cast<double>(na);
    pts.push_back({0.0, y});
  }
  if (turn == 0) {
    const int64_t ne = static_cast<int64_t>((2.0 * radius + exit_len) / step) + 1;
    for (int64_t i = 0; i <= ne; ++i) {
      const double y = entry[1] + (2.0 * radius + exit_len) * static_cast<double>(i) / static_cast<double>(ne);
      pts.push_back({0.0, y});
    }
  } else {
    const Vec2 center{turn > 0 ? -radius : radius, -radius};
    const double a0 = turn > 0 ? 0.0 : M_PI;  // angle of entry point seen from center
    const int64_t narc = 24;
    for (int64_t i = 0; i <= narc; ++i) {
      const double a = a0 + (turn > 0 ? 1.0 : -1.0) * 0.5 * M_PI * static_cast<double>(i) / narc;
      pts.push_back({center[0] + radius * std::cos(a), center[1] + radius * std::sin(a)});
    }
    // exit heading west (+1) or east (-1)
    const double theta = turn > 0 ? M_PI : 0.0;
    const Vec2 exit_start = pts.back();
    const int64_t ne = static_cast<int64_t>(exit_len / step);
    for (int64_t i = 1; i <= ne; ++i) {
      const double s = exit_len * static_cast<double>(i) / static_cast<double>(ne);
      pts.push_back({exit_start[0] + s * std::cos(theta), exit_start[1] + s * std::sin(theta)});
    }
  }
  return ArcPath(std::move(pts));
}

// ramp from (x0, y_off) easing into the main lane y=0 at x=0, then straight on
ArcPath ramp_path(double x0, double y_off, double run_out) {
  std::vector<Vec2> pts;
  const double step = 1.0;
  for (double x = x0; x < 0.0; x += step) {
    const double t = x / x0;  // 1 at start, 0 at merge
    pts.push_back({x, y_off * t * t});
  }
  for (double x = 0.0; x <= run_out; x += step) pts.push_back({x, 0.0});
  return ArcPath(std::move(pts));
}

AgentTrack make_track(int64_t id, AgentType type, const ArcPath& path, double start_arc,
                      const std::vector<double>& speeds, const GeneratorParams& gp,
                      int64_t invalid_prefix = 0) {
  const int64_t total = gp.t_p + gp.t;
  if (static_cast<int64_t>(speeds.size()) != total) {
    throw ValidationError("make_track: speed profile length mismatch");
  }
  AgentTrack track;
  track.id = id;
  track.type = type;
  const double cap = agent_speed_cap(type);
  double s = start_arc;
  for (int64_t k = 0; k < total; ++k) {
    const double v = std::clamp(speeds[static_cast<size_t>(k)], 0.0, cap);
    const Vec2 p = path.pos(s);
    if (k < gp.t_p) {
      PastStep st;
      st.x = p[0];
      st.y = p[1];
      st.heading = path.heading(s);
      st.speed = v;
      st.valid = k >= invalid_prefix;
      track.past.push_back(st);
    } else {
      track.future.push_back(p);
    }
    s += v * gp.dt;
  }
  return track;
}

std::vector<double> const_profile(int64_t steps, double v, double accel, double dt, double cap) {
  std::vector<double> out(static_cast<size_t>(steps));
  for (int64_t k = 0; k < steps; ++k) {
    out[static_cast<size_t>(k)] = std::clamp(v + accel * dt * static_cast<double>(k), 0.0, cap);
  }
  return out;
}

// brake to a standstill short of stop_arc, hold until release_step, then
// accelerate back toward v_out
std::vector<double> yield_profile(int64_t steps, double dt, double v0, double start_arc,
                                  double stop_arc, int64_t release_step, double v_out, double a_max) {
  std::vector<double> out(static_cast<size_t>(steps));
  double s = start_arc, v = v0;
  for (int64_t k = 0; k < steps; ++k) {
    if (k >= release_step) {
      v = std::min(v_out, v + a_max * dt);
    } else {
      const double remaining = stop_arc - s;
      const double brake_dist = v * v / (2.0 * a_max) + 0.5;
      if (remaining <= brake_dist) v = std::max(0.0, v - a_max * dt);
    }
    out[static_cast<size_t>(k)] = v;
    s += v * dt;
  }
  return out;
}

int64_t maybe_invalid_prefix(Rng& rng) {
  // occasional late detection: a few zero-filled leading past steps
  return rng.uniform() < 0.3 ? rng.uniform_int(1, 5) : 0;
}

void add_lane(Scene& scene, int64_t id, Vec2 from, double theta, double len, const char* type,
              double point_step = 10.0) {
  MapPolyline pl;
  pl.id = id;
  pl.lane_type = type;
  const int64_t n = std::max<int64_t>(2, static_cast<int64_t>(len / point_step) + 1);
  for (int64_t i = 0; i < n; ++i) {
    const double s = len * static_cast<double>(i) / static_cast<double>(n - 1);
    pl.points.push_back({from[0] + s * std::cos(theta), from[1] + s * std::sin(theta)});
  }
  scene.map.push_back(std::move(pl));
}

Scene build_straight(Rng& rng, const GeneratorParams& gp) {
  Scene scene;
  const int64_t n = gp.n_agents_override > 0 ? gp.n_agents_override : rng.uniform_int(1, 4);
  // one agent per lane, lanes 5 m apart: lateral gap always exceeds the
  // largest radius sum (4 m)
  for (int64_t i = 0; i < n; ++i) {
    AgentType type = AgentType::vehicle;
    const double roll = rng.uniform();
    if (i > 0 && roll < 0.15) type = AgentType::pedestrian;
    else if (i > 0 && roll < 0.3) type = AgentType::cyclist;
    const double y = 5.0 * static_cast<double>(i);
    const double x0 = rng.uniform(-30.0, -5.0);
    double v0 = 0.0, accel = 0.0;
    switch (type) {
      case AgentType::vehicle: v0 = rng.uniform(6.0, 12.0); accel = rng.uniform(-0.4, 0.4); break;
      case AgentType::cyclist: v0 = rng.uniform(2.0, 5.0); accel = rng.uniform(-0.2, 0.2); break;
      case AgentType::pedestrian: v0 = rng.uniform(0.8, 1.5); accel = 0.0; break;
    }
    ArcPath path = line_path({x0, y}, 0.0, 140.0);
    auto speeds = const_profile(gp.t_p + gp.t, v0, accel, gp.dt, agent_speed_cap(type));
    scene.agents.push_back(make_track(i, type, path, 0.0, speeds, gp, maybe_invalid_prefix(rng)));
  }
  const int64_t extra = rng.uniform_int(1, 4);
  int64_t mid = 0;
  for (int64_t i = 0; i < n; ++i) {
    add_lane(scene, mid++, {-40.0, 5.0 * static_cast<double>(i)}, 0.0, 120.0, "lane");
  }
  for (int64_t e = 0; e < extra; ++e) {
    const double y = 5.0 * static_cast<double>(n) + 5.0 * static_cast<double>(e) + rng.uniform(0.0, 2.0);
    add_lane(scene, mid++, {-40.0, y}, 0.0, 120.0, e == extra - 1 ? "boundary" : "lane");
  }
  return scene;
}

Scene build_intersection_yield(Rng& rng, const GeneratorParams& gp) {
  Scene scene;
  const int64_t steps = gp.t_p + gp.t;
  // agent 0: eastbound through traffic on y=0, constant speed
  const double v_a = rng.uniform(7.0, 10.0);
  // place so it crosses the origin shortly after the history window
  const double cross_time = gp.dt * static_cast<double>(gp.t_p + rng.uniform_int(6, 12));
  const double d_a = v_a * cross_time;
  ArcPath path_a = line_path({-d_a, 0.0}, 0.0, d_a + 80.0);
  scene.agents.push_back(make_track(0, AgentType::vehicle, path_a, 0.0,
                                    const_profile(steps, v_a, 0.0, gp.dt, 15.0), gp));

  // agent 1: northbound on x=0, yields until agent 0 has cleared. Start far
  // enough back that the 3 m/s^2 braking envelope always reaches a full stop
  // at the hold line.
  const double v_b = rng.uniform(6.0, 8.5);
  const double d_b = v_b * v_b / 6.0 + 10.0 + rng.uniform(0.0, 4.0);
  ArcPath path_b = line_path({0.0, -d_b}, 0.5 * M_PI, d_b + 60.0);
  const double stop_arc = d_b - 8.0;  // hold 8 m short of the conflict point
  // release once agent 0 is 10 m past the origin
  const double clear_time = (d_a + 10.0) / v_a;
  const int64_t release_step = static_cast<int64_t>(std::ceil(clear_time / gp.dt)) + rng.uniform_int(1, 6);
  auto speeds_b = yield_profile(steps, gp.dt, v_b, 0.0, stop_arc, release_step, v_b, 3.0);
  scene.agents.push_back(make_track(1, AgentType::vehicle, path_b, 0.0, speeds_b, gp,
                                    maybe_invalid_prefix(rng)));

  // optional pedestrian well clear of both corridors
  if (rng.uniform() < 0.5) {
    const double x_p = rng.uniform(10.0, 18.0);
    ArcPath path_p = line_path({x_p, 8.0}, 0.5 * M_PI, 30.0);
    scene.agents.push_back(make_track(2, AgentType::pedestrian, path_p, 0.0,
                                      const_profile(steps, rng.uniform(0.8, 1.4), 0.0, gp.dt, 2.0), gp,
                                      maybe_invalid_prefix(rng)));
  }

  int64_t mid = 0;
  add_lane(scene, mid++, {-60.0, 0.0}, 0.0, 120.0, "lane");
  add_lane(scene, mid++, {0.0, -60.0}, 0.5 * M_PI, 120.0, "lane");
  const int64_t extra = rng.uniform_int(0, 3);
  for (int64_t e = 0; e < extra; ++e) {
    add_lane(scene, mid++, {-60.0, -5.0 - 5.0 * static_cast<double>(e)}, 0.0, 120.0,
             e == 0 ? "lane" : "boundary");
  }
  return scene;
}

Scene build_merge(Rng& rng, const GeneratorParams& gp) {
  Scene scene;
  const int64_t steps = gp.t_p + gp.t;
  const double v_a = rng.uniform(7.0, 10.0);
  // main-lane vehicle passes the merge point inside the episode
  const double t_merge_a = gp.dt * static_cast<double>(gp.t_p - rng.uniform_int(2, 8));
  const double x_a0 = -v_a * t_merge_a;
  ArcPath path_a = line_path({x_a0, 0.0}, 0.0, std::abs(x_a0) + 90.0);
  scene.agents.push_back(make_track(0, AgentType::vehicle, path_a, 0.0,
                                    const_profile(steps, v_a, 0.0, gp.dt, 15.0), gp));

  // ramp vehicle arrives at the merge point >= 2.2 s later, slightly slower
  const double v_b = v_a - rng.uniform(0.5, 1.5);
  ArcPath path_b = ramp_path(-35.0, -10.0, 90.0);
  const double merge_arc = path_b.length() - 90.0;  // arc position of (0,0)
  const double t_merge_b = t_merge_a + 2.2 + rng.uniform(0.0, 0.8);
  const double start_arc = std::max(0.0, merge_arc - v_b * t_merge_b);
  scene.agents.push_back(make_track(1, AgentType::vehicle, path_b, start_arc,
                                    const_profile(steps, v_b, 0.0, gp.dt, 15.0), gp,
                                    maybe_invalid_prefix(rng)));

  int64_t mid = 0;
  add_lane(scene, mid++, {-50.0, 0.0}, 0.0, 130.0, "lane");
  MapPolyline ramp;
  ramp.id = mid++;
  ramp.lane_type = "lane";
  for (double x = -35.0; x <= 10.0; x += 5.0) {
    const double t = x < 0.0 ? x / -35.0 : 0.0;
    ramp.points.push_back({x, -10.0 * t * t});
  }
  scene.map.push_back(std::move(ramp));
  const int64_t extra = rng.uniform_int(0, 3);
  for (int64_t e = 0; e < extra; ++e) {
    add_lane(scene, mid++, {-50.0, 5.0 + 5.0 * static_cast<double>(e)}, 0.0, 130.0,
             e == extra - 1 ? "boundary" : "lane");
  }
  return scene;
}

Scene build_turn_multi_modal(Rng& rng, const GeneratorParams& gp) {
  Scene scene;
  const int64_t steps = gp.t_p + gp.t;
  const int turn = static_cast<int>(rng.uniform_int(-1, 1));  // -1 right, 0 straight, +1 left
  const double radius = 8.0;
  const double v0 = rng.uniform(5.0, 8.0);
  ArcPath path = junction_path(60.0, radius, turn, 50.0);
  // history ends a few meters before the junction entry; the turn itself is
  // entirely in the future, so identical-looking pasts fan out across seeds
  const double entry_arc = 60.0;  // approach length
  const double gap = rng.uniform(2.0, 8.0);
  const double hist = v0 * gp.dt * static_cast<double>(gp.t_p - 1);
  const double start_arc = std::max(0.0, entry_arc - gap - hist);
  auto speeds = const_profile(steps, v0, 0.0, gp.dt, 15.0);
  scene.agents.push_back(make_track(0, AgentType::vehicle, path, start_arc, speeds, gp));

  if (rng.uniform() < 0.5) {
    // leader on the same route, same speed: constant 25 m arc gap
    scene.agents.push_back(make_track(1, AgentType::vehicle, path, start_arc + 25.0, speeds, gp,
                                      maybe_invalid_prefix(rng)));
  }

  int64_t mid = 0;
  add_lane(scene, mid++, {0.0, -70.0}, 0.5 * M_PI, 62.0, "lane");                 // approach
  add_lane(scene, mid++, {0.0, -8.0}, 0.5 * M_PI, 70.0, "lane");                  // northern exit
  add_lane(scene, mid++, {-8.0, 0.0}, M_PI, 60.0, "lane");                        // western exit
  add_lane(scene, mid++, {8.0, 0.0}, 0.0, 60.0, "lane");                          // eastern exit
  const int64_t extra = rng.uniform_int(0, 2);
  for (int64_t e = 0; e < extra; ++e) {
    add_lane(scene, mid++, {4.0 + 4.0 * static_cast<double>(e), -70.0}, 0.5 * M_PI, 62.0, "boundary");
  }
  return scene;
}

}  // namespace

const char* scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::straight: return "straight";
    case ScenarioKind::intersection_yield: return "intersection_yield";
    case ScenarioKind::merge: return "merge";
    case ScenarioKind::turn_multi_modal: return "turn_multi_modal";
  }
  return "straight";
}

ScenarioKind scenario_kind_from_name(const std::string& name) {
  if (name == "straight") return ScenarioKind::straight;
  if (name == "intersection_yield") return ScenarioKind::intersection_yield;
  if (name == "merge") return ScenarioKind::merge;
  if (name == "turn_multi_modal") return ScenarioKind::turn_multi_modal;
  throw ValidationError("unknown scenario kind: " + name);
}

Scene generate_scene(ScenarioKind kind, uint64_t seed, const GeneratorParams& params) {
  Rng rng(seed ^ (static_cast<uint64_t>(kind) << 56));
  Scene scene;
  switch (kind) {
    case ScenarioKind::straight: scene = build_straight(rng, params); break;
    case ScenarioKind::intersection_yield: scene = build_intersection_yield(rng, params); break;
    case ScenarioKind::merge: scene = build_merge(rng, params); break;
    case ScenarioKind::turn_multi_modal: scene = build_turn_multi_modal(rng, params); break;
  }
  scene.id = std::string(scenario_kind_name(kind)) + "-" + std::to_string(seed);
  scene.dt = params.dt;
  scene.validate(params.t_p, params.t);
  return scene;
}

}  // namespace jointpred::scene
