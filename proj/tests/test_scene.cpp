#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "eval/metrics.hpp"
#include "scene/generator.hpp"
#include "scene/scene.hpp"
#include "scene/scene_io.hpp"

using namespace jointpred;
using namespace jointpred::scene;

namespace {

Scene rigid_transform(const Scene& in, double theta, double tx, double ty) {
  Scene out = in;
  const double c = std::cos(theta), s = std::sin(theta);
  auto xform = [&](double x, double y) -> Vec2 {
    return {c * x - s * y + tx, s * x + c * y + ty};
  };
  for (AgentTrack& a : out.agents) {
    for (PastStep& st : a.past) {
      if (!st.valid) continue;
      Vec2 p = xform(st.x, st.y);
      st.x = p[0];
      st.y = p[1];
      st.heading = wrap_angle(st.heading + theta);
    }
    for (Vec2& p : a.future) p = xform(p[0], p[1]);
  }
  for (MapPolyline& pl : out.map) {
    for (Vec2& p : pl.points) p = xform(p[0], p[1]);
  }
  return out;
}

const ScenarioKind kAllKinds[] = {ScenarioKind::straight, ScenarioKind::intersection_yield,
                                  ScenarioKind::merge, ScenarioKind::turn_multi_modal};

}  // namespace

TEST_CASE("relative_pose identity") {
  LocalFrame f{3.0, -2.0, 1.1};
  RelPose rp = relative_pose(f, f);
  CHECK(rp.alpha == doctest::Approx(0.0));
  CHECK(rp.beta == doctest::Approx(0.0));
  CHECK(rp.dist == doctest::Approx(0.0));
}

TEST_CASE("relative_pose axis-aligned neighbor") {
  LocalFrame fi{0.0, 0.0, 0.0};
  LocalFrame fj{1.0, 0.0, 0.0};
  RelPose rp = relative_pose(fi, fj);
  CHECK(rp.alpha == doctest::Approx(0.0));
  CHECK(rp.beta == doctest::Approx(0.0));
  CHECK(rp.dist == doctest::Approx(1.0));
}

TEST_CASE("relative_pose rotated observer") {
  // j straight ahead of a north-facing observer
  LocalFrame fi{0.0, 0.0, M_PI / 2.0};
  LocalFrame fj{0.0, 2.0, M_PI / 2.0};
  RelPose rp = relative_pose(fi, fj);
  CHECK(rp.beta == doctest::Approx(0.0));
  CHECK(rp.dist == doctest::Approx(2.0));
  CHECK(rp.alpha == doctest::Approx(0.0));
}

TEST_CASE("relative_pose antisymmetry of alpha, symmetry of distance") {
  Rng rng(51);
  for (int i = 0; i < 200; ++i) {
    LocalFrame a{rng.uniform(-50, 50), rng.uniform(-50, 50), wrap_angle(rng.uniform(-4, 4))};
    LocalFrame b{rng.uniform(-50, 50), rng.uniform(-50, 50), wrap_angle(rng.uniform(-4, 4))};
    RelPose ab = relative_pose(a, b);
    RelPose ba = relative_pose(b, a);
    CHECK(wrap_angle(ab.alpha + ba.alpha) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ab.dist == doctest::Approx(ba.dist));
  }
}

TEST_CASE("build_frames puts the last observed pose at the local origin") {
  GeneratorParams gp;
  Scene sc = generate_scene(ScenarioKind::straight, 7, gp);
  InstanceFrameSet frames = build_frames(sc);
  for (int64_t i = 0; i < sc.n_agents(); ++i) {
    const PastStep& last = frames.agent_past_local[static_cast<size_t>(i)].back();
    CHECK(last.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(last.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(last.heading == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("two-point polyline frame: centroid origin, axis rotation") {
  Scene sc;
  sc.id = "poly";
  AgentTrack a;
  a.id = 0;
  a.past.assign(3, PastStep{0, 0, 0, 1, true});
  sc.agents.push_back(a);
  MapPolyline pl;
  pl.id = 0;
  pl.points = {{0.0, 0.0}, {2.0, 0.0}};
  sc.map.push_back(pl);
  InstanceFrameSet frames = build_frames(sc);
  const LocalFrame& f = frames.frames[1];
  CHECK(f.x == doctest::Approx(1.0));
  CHECK(f.y == doctest::Approx(0.0));
  CHECK(f.rot == doctest::Approx(0.0));
}

TEST_CASE("coincident polyline endpoints fall back to rotation 0") {
  Scene sc;
  sc.id = "degenerate";
  AgentTrack a;
  a.id = 0;
  a.past.assign(3, PastStep{0, 0, 0, 1, true});
  sc.agents.push_back(a);
  MapPolyline pl;
  pl.id = 0;
  pl.points = {{1.0, 1.0}, {1.0, 1.0}};
  sc.map.push_back(pl);
  InstanceFrameSet frames = build_frames(sc);
  CHECK(frames.frames[1].rot == doctest::Approx(0.0));
}

TEST_CASE("build_frames is invariant under global rigid transforms") {
  for (ScenarioKind kind : kAllKinds) {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
      Scene sc = generate_scene(kind, seed);
      Scene moved = rigid_transform(sc, 0.83, 120.0, -45.0);
      InstanceFrameSet f0 = build_frames(sc);
      InstanceFrameSet f1 = build_frames(moved);
      REQUIRE(f0.n() == f1.n());
      for (size_t i = 0; i < f0.agent_past_local.size(); ++i) {
        for (size_t k = 0; k < f0.agent_past_local[i].size(); ++k) {
          const PastStep& a = f0.agent_past_local[i][k];
          const PastStep& b = f1.agent_past_local[i][k];
          CHECK(std::abs(a.x - b.x) < 1e-9);
          CHECK(std::abs(a.y - b.y) < 1e-9);
          CHECK(std::abs(wrap_angle(a.heading - b.heading)) < 1e-9);
        }
      }
      for (size_t m = 0; m < f0.map_points_local.size(); ++m) {
        for (size_t k = 0; k < f0.map_points_local[m].size(); ++k) {
          CHECK(std::abs(f0.map_points_local[m][k][0] - f1.map_points_local[m][k][0]) < 1e-9);
          CHECK(std::abs(f0.map_points_local[m][k][1] - f1.map_points_local[m][k][1]) < 1e-9);
        }
      }
      for (int64_t i = 0; i < f0.n(); ++i) {
        for (int64_t j = 0; j < f0.n(); ++j) {
          // compare as angles: the +/- pi boundary is the same pose
          CHECK(std::abs(wrap_angle(f0.rel_at(i, j).alpha - f1.rel_at(i, j).alpha)) < 1e-9);
          CHECK(std::abs(wrap_angle(f0.rel_at(i, j).beta - f1.rel_at(i, j).beta)) < 1e-9);
          CHECK(std::abs(f0.rel_at(i, j).dist - f1.rel_at(i, j).dist) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("generator is deterministic for a fixed kind and seed") {
  for (ScenarioKind kind : kAllKinds) {
    Scene a = generate_scene(kind, 1234);
    Scene b = generate_scene(kind, 1234);
    REQUIRE(a.n_agents() == b.n_agents());
    CHECK(scene_to_json(a).dump() == scene_to_json(b).dump());
  }
}

TEST_CASE("straight scene advances along heading at constant speed") {
  GeneratorParams gp;
  gp.n_agents_override = 1;
  Scene sc = generate_scene(ScenarioKind::straight, 11, gp);
  const AgentTrack& a = sc.agents[0];
  // displacement between consecutive future steps matches speed * dt within
  // the profile's acceleration envelope
  for (size_t k = 1; k < a.future.size(); ++k) {
    const double step = std::hypot(a.future[k][0] - a.future[k - 1][0], a.future[k][1] - a.future[k - 1][1]);
    CHECK(step <= agent_speed_cap(a.type) * sc.dt + 1e-9);
  }
}

TEST_CASE("generated futures are kinematically bounded for every kind") {
  for (ScenarioKind kind : kAllKinds) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Scene sc = generate_scene(kind, seed);
      for (const AgentTrack& a : sc.agents) {
        const double cap = agent_speed_cap(a.type) * sc.dt + 1e-9;
        for (size_t k = 1; k < a.future.size(); ++k) {
          const double step =
              std::hypot(a.future[k][0] - a.future[k - 1][0], a.future[k][1] - a.future[k - 1][1]);
          CHECK(step <= cap);
        }
      }
    }
  }
}

TEST_CASE("ground-truth futures are collision-free across kinds and seeds") {
  for (ScenarioKind kind : kAllKinds) {
    for (uint64_t seed = 0; seed < 50; ++seed) {
      Scene sc = generate_scene(kind, seed);
      INFO(sc.id);
      CHECK(eval::ground_truth_collision_rate(sc) == 0.0);
    }
  }
}

TEST_CASE("intersection_yield produces a yielding pair") {
  int yields = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Scene sc = generate_scene(ScenarioKind::intersection_yield, seed);
    REQUIRE(sc.n_agents() >= 2);
    // the yielding agent's speed dips near zero somewhere in the episode
    const AgentTrack& b = sc.agents[1];
    double vmin = 1e9;
    for (const PastStep& s : b.past) {
      if (s.valid) vmin = std::min(vmin, s.speed);
    }
    for (size_t k = 1; k < b.future.size(); ++k) {
      const double step = std::hypot(b.future[k][0] - b.future[k - 1][0], b.future[k][1] - b.future[k - 1][1]);
      vmin = std::min(vmin, step / sc.dt);
    }
    if (vmin < 0.5) ++yields;
  }
  CHECK(yields == 10);
}

TEST_CASE("turn_multi_modal covers distinct maneuvers across seeds") {
  // classify by final heading of the lead agent's future
  int seen[3] = {0, 0, 0};
  for (uint64_t seed = 0; seed < 30; ++seed) {
    Scene sc = generate_scene(ScenarioKind::turn_multi_modal, seed);
    const auto& fut = sc.agents[0].future;
    const double dx = fut.back()[0] - fut[fut.size() - 2][0];
    const double dy = fut.back()[1] - fut[fut.size() - 2][1];
    const double h = std::atan2(dy, dx);
    if (std::abs(h) < 0.3) seen[0]++;                           // east = right turn
    else if (std::abs(wrap_angle(h - M_PI)) < 0.3) seen[1]++;   // west = left turn
    else if (std::abs(h - M_PI / 2) < 0.3) seen[2]++;           // north = straight
  }
  CHECK(seen[0] > 0);
  CHECK(seen[1] > 0);
  CHECK(seen[2] > 0);
}

TEST_CASE("unknown scenario kind raises") {
  CHECK_THROWS_AS(scenario_kind_from_name("roundabout"), ValidationError);
}

TEST_CASE("scene json round-trip preserves every field") {
  Scene sc = generate_scene(ScenarioKind::intersection_yield, 99);
  nlohmann::json j = scene_to_json(sc);
  Scene back = scene_from_json(j);
  CHECK(scene_to_json(back).dump() == j.dump());
}

TEST_CASE("dataset index round-trip and split loading") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "jp_scene_io_test";
  fs::create_directories(dir);
  GeneratorParams gp;
  DatasetIndex index;
  index.t_p = gp.t_p;
  index.t = gp.t;
  index.dt = gp.dt;
  for (uint64_t seed = 0; seed < 4; ++seed) {
    Scene sc = generate_scene(ScenarioKind::straight, seed, gp);
    std::string name = "scene_" + std::to_string(seed) + ".json";
    write_scene(dir / name, sc);
    if (seed < 3) index.train.push_back(name);
    else index.val.push_back(name);
  }
  write_index(dir, index);
  auto train = load_split(dir, "train");
  auto val = load_split(dir, "val");
  CHECK(train.size() == 3);
  CHECK(val.size() == 1);
  CHECK_THROWS_AS(load_split(dir, "test"), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("validation rejects malformed scenes") {
  GeneratorParams gp;
  Scene sc = generate_scene(ScenarioKind::straight, 3, gp);
  Scene dup = sc;
  dup.agents.push_back(dup.agents[0]);  // duplicate id
  CHECK_THROWS_AS(dup.validate(gp.t_p, gp.t), ValidationError);

  Scene short_past = sc;
  short_past.agents[0].past.pop_back();
  CHECK_THROWS_AS(short_past.validate(gp.t_p, gp.t), ValidationError);

  Scene no_current = sc;
  no_current.agents[0].past.back().valid = false;
  CHECK_THROWS_AS(no_current.validate(gp.t_p, gp.t), ValidationError);
}

TEST_CASE("resample_polyline keeps endpoints and spacing") {
  std::vector<Vec2> pts = {{0, 0}, {10, 0}, {10, 5}};
  auto rs = resample_polyline(pts, 10);
  REQUIRE(rs.size() == 10);
  CHECK(rs.front()[0] == doctest::Approx(0.0));
  CHECK(rs.back()[0] == doctest::Approx(10.0));
  CHECK(rs.back()[1] == doctest::Approx(5.0));
  // consecutive arc gaps are equal
  double expected = 15.0 / 9.0;
  for (size_t i = 1; i < rs.size(); ++i) {
    const double d = std::hypot(rs[i][0] - rs[i - 1][0], rs[i][1] - rs[i - 1][1]);
    CHECK(d == doctest::Approx(expected).epsilon(0.05));
  }
}
