#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "common/rng.hpp"
#include "eval/metrics.hpp"
#include "eval/timing.hpp"

using namespace jointpred;
using namespace jointpred::eval;
using scene::AgentType;
using scene::Vec2;

namespace {

ScenePrediction random_prediction(Rng& rng, int64_t k, int64_t na, int64_t t, double spread) {
  ScenePrediction p;
  p.scores.assign(static_cast<size_t>(k), 1.0 / static_cast<double>(k));
  p.traj.resize(static_cast<size_t>(k));
  for (auto& mode : p.traj) {
    mode.resize(static_cast<size_t>(na));
    for (auto& agent : mode) {
      agent.resize(static_cast<size_t>(t));
      for (auto& pt : agent) pt = {rng.normal(0.0, spread), rng.normal(0.0, spread)};
    }
  }
  return p;
}

GroundTruth random_gt(Rng& rng, int64_t na, int64_t t, double spread) {
  GroundTruth gt(static_cast<size_t>(na), std::vector<Vec2>(static_cast<size_t>(t)));
  for (auto& agent : gt) {
    for (auto& pt : agent) pt = {rng.normal(0.0, spread), rng.normal(0.0, spread)};
  }
  return gt;
}

// independent recomputation used as the oracle
struct BruteMetrics {
  double min_sade, min_sfde, actor_mr, actor_cr;
  int64_t best_mode;
};

BruteMetrics brute_force_metrics(const ScenePrediction& pred, const GroundTruth& gt,
                                 const std::vector<AgentType>& types, double threshold) {
  const int64_t k = pred.k();
  const int64_t na = static_cast<int64_t>(gt.size());
  const int64_t t = static_cast<int64_t>(gt[0].size());
  BruteMetrics out{1e300, 1e300, 0, 0, 0};
  for (int64_t m = 0; m < k; ++m) {
    double ade = 0.0, fde = 0.0;
    for (int64_t i = 0; i < na; ++i) {
      for (int64_t s = 0; s < t; ++s) {
        const double dx = pred.traj[m][i][s][0] - gt[i][s][0];
        const double dy = pred.traj[m][i][s][1] - gt[i][s][1];
        ade += std::sqrt(dx * dx + dy * dy);
      }
      const double fx = pred.traj[m][i][t - 1][0] - gt[i][t - 1][0];
      const double fy = pred.traj[m][i][t - 1][1] - gt[i][t - 1][1];
      fde += std::sqrt(fx * fx + fy * fy);
    }
    ade /= static_cast<double>(na * t);
    fde /= static_cast<double>(na);
    if (ade < out.min_sade) {
      out.min_sade = ade;
      out.best_mode = m;
    }
    out.min_sfde = std::min(out.min_sfde, fde);
  }
  int64_t missed = 0;
  for (int64_t i = 0; i < na; ++i) {
    const double fx = pred.traj[out.best_mode][i][t - 1][0] - gt[i][t - 1][0];
    const double fy = pred.traj[out.best_mode][i][t - 1][1] - gt[i][t - 1][1];
    if (std::sqrt(fx * fx + fy * fy) > threshold) ++missed;
  }
  out.actor_mr = static_cast<double>(missed) / static_cast<double>(na);
  std::vector<bool> hit(static_cast<size_t>(na), false);
  for (int64_t i = 0; i < na; ++i) {
    for (int64_t j = 0; j < na; ++j) {
      if (i == j) continue;
      for (int64_t s = 0; s < t; ++s) {
        const double dx = pred.traj[out.best_mode][i][s][0] - pred.traj[out.best_mode][j][s][0];
        const double dy = pred.traj[out.best_mode][i][s][1] - pred.traj[out.best_mode][j][s][1];
        if (std::sqrt(dx * dx + dy * dy) <
            scene::agent_radius(types[static_cast<size_t>(i)]) + scene::agent_radius(types[static_cast<size_t>(j)])) {
          hit[static_cast<size_t>(i)] = true;
        }
      }
    }
  }
  int64_t inv = 0;
  for (bool h : hit) inv += h ? 1 : 0;
  out.actor_cr = static_cast<double>(inv) / static_cast<double>(na);
  return out;
}

}  // namespace

TEST_CASE("exact mode match gives zero metrics and that mode index") {
  Rng rng(1);
  GroundTruth gt = random_gt(rng, 3, 8, 5.0);
  ScenePrediction pred = random_prediction(rng, 4, 3, 8, 5.0);
  pred.traj[2] = gt;
  MinMetrics mm = min_scene_metrics(pred, gt);
  CHECK(mm.min_sade == 0.0);
  CHECK(mm.min_sfde == 0.0);
  CHECK(mm.best_sade_mode == 2);
  CHECK(actor_miss_rate(pred, gt) == 0.0);
}

TEST_CASE("K=1 with constant (3,4) final offset gives minSFDE 5") {
  GroundTruth gt(2, std::vector<Vec2>(6, Vec2{0.0, 0.0}));
  ScenePrediction pred;
  pred.scores = {1.0};
  pred.traj = {{std::vector<Vec2>(6, Vec2{3.0, 4.0}), std::vector<Vec2>(6, Vec2{3.0, 4.0})}};
  MinMetrics mm = min_scene_metrics(pred, gt);
  CHECK(mm.min_sfde == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(mm.min_sade == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("metrics are invariant under a global rigid transform of pred and gt") {
  Rng rng(2);
  GroundTruth gt = random_gt(rng, 3, 10, 8.0);
  ScenePrediction pred = random_prediction(rng, 3, 3, 10, 8.0);
  MinMetrics base = min_scene_metrics(pred, gt);
  const double c = std::cos(0.9), s = std::sin(0.9);
  auto xf = [&](Vec2 p) -> Vec2 { return {c * p[0] - s * p[1] + 40.0, s * p[0] + c * p[1] - 9.0}; };
  ScenePrediction pred2 = pred;
  GroundTruth gt2 = gt;
  for (auto& mode : pred2.traj) {
    for (auto& agent : mode) {
      for (auto& pt : agent) pt = xf(pt);
    }
  }
  for (auto& agent : gt2) {
    for (auto& pt : agent) pt = xf(pt);
  }
  MinMetrics moved = min_scene_metrics(pred2, gt2);
  CHECK(moved.min_sade == doctest::Approx(base.min_sade).epsilon(1e-9));
  CHECK(moved.min_sfde == doctest::Approx(base.min_sfde).epsilon(1e-9));
}

TEST_CASE("miss rate counts agents beyond the threshold in the minSADE mode") {
  GroundTruth gt(2, std::vector<Vec2>(4, Vec2{0.0, 0.0}));
  ScenePrediction pred;
  pred.scores = {1.0};
  pred.traj.resize(1);
  pred.traj[0] = {std::vector<Vec2>(4, Vec2{0.0, 0.0}), std::vector<Vec2>(4, Vec2{5.0, 0.0})};
  CHECK(actor_miss_rate(pred, gt, 2.0) == doctest::Approx(0.5));
  // all agents off by 10 m
  pred.traj[0] = {std::vector<Vec2>(4, Vec2{10.0, 0.0}), std::vector<Vec2>(4, Vec2{0.0, 10.0})};
  CHECK(actor_miss_rate(pred, gt, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("collision rate: stationary overlap, clear separation, two of three") {
  std::vector<AgentType> two{AgentType::vehicle, AgentType::vehicle};
  ScenePrediction pred;
  pred.scores = {1.0};
  pred.traj.resize(1);
  pred.traj[0] = {std::vector<Vec2>(5, Vec2{0.0, 0.0}), std::vector<Vec2>(5, Vec2{0.0, 0.0})};
  CHECK(actor_collision_rate(pred, two, 0) == doctest::Approx(1.0));

  pred.traj[0][1].assign(5, Vec2{20.0, 0.0});
  CHECK(actor_collision_rate(pred, two, 0) == doctest::Approx(0.0));

  std::vector<AgentType> three{AgentType::vehicle, AgentType::vehicle, AgentType::pedestrian};
  pred.traj[0] = {std::vector<Vec2>(5, Vec2{0.0, 0.0}), std::vector<Vec2>(5, Vec2{1.0, 0.0}),
                  std::vector<Vec2>(5, Vec2{50.0, 50.0})};
  CHECK(actor_collision_rate(pred, three, 0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics match the brute-force oracle on 100 random prediction sets") {
  Rng rng(20250810);
  for (int trial = 0; trial < 100; ++trial) {
    const int64_t k = rng.uniform_int(1, 6);
    const int64_t na = rng.uniform_int(1, 5);
    const int64_t t = rng.uniform_int(2, 12);
    ScenePrediction pred = random_prediction(rng, k, na, t, 4.0);
    GroundTruth gt = random_gt(rng, na, t, 4.0);
    std::vector<AgentType> types;
    for (int64_t i = 0; i < na; ++i) {
      types.push_back(static_cast<AgentType>(rng.uniform_int(0, 2)));
    }
    BruteMetrics oracle = brute_force_metrics(pred, gt, types, 2.0);
    SceneMetrics got = evaluate_scene("t", pred, gt, types, 2.0);
    CHECK(got.min_sade == oracle.min_sade);
    CHECK(got.min_sfde == oracle.min_sfde);
    CHECK(got.actor_mr == oracle.actor_mr);
    CHECK(got.actor_cr == oracle.actor_cr);
    CHECK(got.best_mode == oracle.best_mode);
  }
}

TEST_CASE("min metrics are non-increasing when modes are appended") {
  Rng rng(3);
  GroundTruth gt = random_gt(rng, 3, 8, 5.0);
  ScenePrediction pred = random_prediction(rng, 1, 3, 8, 5.0);
  MinMetrics prev = min_scene_metrics(pred, gt);
  for (int extra = 0; extra < 6; ++extra) {
    ScenePrediction wider = random_prediction(rng, 1, 3, 8, 5.0);
    pred.traj.push_back(wider.traj[0]);
    pred.scores.assign(pred.traj.size(), 1.0 / static_cast<double>(pred.traj.size()));
    MinMetrics cur = min_scene_metrics(pred, gt);
    CHECK(cur.min_sade <= prev.min_sade);
    CHECK(cur.min_sfde <= prev.min_sfde);
    prev = cur;
  }
}

TEST_CASE("metrics are invariant under agent relabeling") {
  Rng rng(4);
  GroundTruth gt = random_gt(rng, 4, 6, 5.0);
  ScenePrediction pred = random_prediction(rng, 3, 4, 6, 5.0);
  std::vector<AgentType> types{AgentType::vehicle, AgentType::cyclist, AgentType::pedestrian,
                               AgentType::vehicle};
  SceneMetrics base = evaluate_scene("x", pred, gt, types, 2.0);
  const std::vector<size_t> perm{3, 1, 0, 2};
  ScenePrediction pp = pred;
  GroundTruth gp = gt;
  std::vector<AgentType> tp(4);
  for (size_t i = 0; i < 4; ++i) {
    for (int64_t m = 0; m < pred.k(); ++m) pp.traj[m][i] = pred.traj[m][perm[i]];
    gp[i] = gt[perm[i]];
    tp[i] = types[perm[i]];
  }
  SceneMetrics moved = evaluate_scene("x", pp, gp, tp, 2.0);
  CHECK(moved.min_sade == doctest::Approx(base.min_sade).epsilon(1e-12));
  CHECK(moved.min_sfde == doctest::Approx(base.min_sfde).epsilon(1e-12));
  CHECK(moved.actor_mr == doctest::Approx(base.actor_mr));
  CHECK(moved.actor_cr == doctest::Approx(base.actor_cr));
}

// ---- timing model ----

TEST_CASE("ols recovers planted coefficients exactly on noiseless data") {
  std::vector<TimingSample> samples;
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const int64_t na = rng.uniform_int(1, 40);
    const int64_t nl = rng.uniform_int(1, 60);
    samples.push_back({na, nl, 5.0 + 0.5 * static_cast<double>(na) + 0.02 * static_cast<double>(nl)});
  }
  TimingModel m = fit_timing_model(samples);
  CHECK(std::abs(m.gamma0 - 5.0) < 1e-9);
  CHECK(std::abs(m.gamma_agent - 0.5) < 1e-9);
  CHECK(std::abs(m.gamma_lane - 0.02) < 1e-9);
  CHECK(m.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant timings report zero slopes and R^2 = 0 by convention") {
  std::vector<TimingSample> samples;
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    samples.push_back({rng.uniform_int(1, 30), rng.uniform_int(1, 30), 7.25});
  }
  TimingModel m = fit_timing_model(samples);
  CHECK(std::abs(m.gamma_agent) < 1e-12);
  CHECK(std::abs(m.gamma_lane) < 1e-12);
  CHECK(m.r_squared == 0.0);
}

TEST_CASE("rank-deficient designs are rejected") {
  std::vector<TimingSample> collinear;
  for (int i = 1; i <= 10; ++i) collinear.push_back({i, 2 * i, 1.0 * i});  // nl = 2*na
  CHECK_THROWS_AS(fit_timing_model(collinear), ValidationError);
  CHECK_THROWS_AS(fit_timing_model({{1, 1, 1.0}, {2, 2, 2.0}}), ValidationError);
}

TEST_CASE("reference fixture formats like the reporting path expects") {
  // fixture for report formatting: a plausible fitted model with its R^2
  TimingModel ref{11.19, 6.84e-1, 3.75e-2, 0.8665};
  CHECK(ref.predict(10, 100) == doctest::Approx(11.19 + 6.84 + 3.75).epsilon(1e-12));
  CHECK(ref.r_squared > 0.0);
  CHECK(ref.r_squared <= 1.0);
}
