#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "autodiff/grad_check.hpp"
#include "model/backbone.hpp"
#include "model/decoders.hpp"
#include "model/features.hpp"
#include "model/generative.hpp"
#include "scene/generator.hpp"

using namespace jointpred;
using namespace jointpred::ad;
using namespace jointpred::model;

namespace {

scene::Scene permute_agents(const scene::Scene& in, const std::vector<size_t>& perm) {
  scene::Scene out = in;
  for (size_t i = 0; i < perm.size(); ++i) out.agents[i] = in.agents[perm[i]];
  return out;
}

scene::Scene rigid_transform(const scene::Scene& in, double theta, double tx, double ty) {
  scene::Scene out = in;
  const double c = std::cos(theta), s = std::sin(theta);
  auto xf = [&](double x, double y) -> scene::Vec2 { return {c * x - s * y + tx, s * x + c * y + ty}; };
  for (auto& a : out.agents) {
    for (auto& st : a.past) {
      if (!st.valid) continue;
      auto p = xf(st.x, st.y);
      st.x = p[0];
      st.y = p[1];
      st.heading = scene::wrap_angle(st.heading + theta);
    }
    for (auto& p : a.future) p = xf(p[0], p[1]);
  }
  for (auto& pl : out.map) {
    for (auto& p : pl.points) p = xf(p[0], p[1]);
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.at(i) - b.at(i)));
  return m;
}

BackboneConfig tiny_backbone_cfg() {
  BackboneConfig cfg;
  cfg.d = 16;
  cfg.heads = 2;
  cfg.sft_layers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("backbone output shapes") {
  Rng rng(1);
  BackboneConfig cfg;  // desk scale
  Backbone bb(cfg, rng);
  scene::Scene sc = scene::generate_scene(scene::ScenarioKind::intersection_yield, 5);
  SceneFeatures f = featurize(sc, cfg.d_scale);
  NoGradGuard ng;
  BackboneOut out = bb.forward(f);
  CHECK(out.z_actor.shape() == Shape{f.n_agents, cfg.d});
  CHECK(out.z_map.shape() == Shape{f.n_map, cfg.d});
  CHECK(out.m_rpe.shape() == Shape{f.n(), f.n(), cfg.d});
}

TEST_CASE("identical local features produce identical actor tokens") {
  Rng rng(2);
  BackboneConfig cfg = tiny_backbone_cfg();
  EncoderSet enc(cfg.d, rng);
  // two agents with identical local histories at different global poses
  scene::Scene sc;
  sc.id = "twins";
  for (int i = 0; i < 2; ++i) {
    scene::AgentTrack a;
    a.id = i;
    const double x0 = i == 0 ? 0.0 : 40.0;
    const double heading = i == 0 ? 0.0 : M_PI / 2.0;
    for (int k = 0; k < 20; ++k) {
      const double s = 5.0 * 0.1 * static_cast<double>(k);
      scene::PastStep st;
      st.x = x0 + s * std::cos(heading);
      st.y = s * std::sin(heading);
      st.heading = heading;
      st.speed = 5.0;
      a.past.push_back(st);
    }
    sc.agents.push_back(a);
  }
  SceneFeatures f = featurize(sc, cfg.d_scale);
  NoGradGuard ng;
  Tensor z = enc.actor_enc.forward(f.actor_past);
  for (int64_t c = 0; c < z.dim(1); ++c) {
    CHECK(z.at(c) == doctest::Approx(z.at(z.dim(1) + c)).epsilon(1e-12));
  }
}

TEST_CASE("map encoder is invariant to point duplication and order") {
  Rng rng(3);
  MapEncoder enc(kMapFeatureDim, 16, rng);
  NoGradGuard ng;
  Rng frng(4);
  Tensor pts = Tensor::rand_uniform({1, 6, kMapFeatureDim}, frng, -1.0, 1.0);
  // duplicate a point
  Tensor dup = concat({pts, slice(pts, 1, 2, 1)}, 1);
  Tensor a = enc.forward(pts);
  Tensor b = enc.forward(dup);
  CHECK(max_abs_diff(a, b) < 1e-12);
  // permute points
  Tensor perm = concat({slice(pts, 1, 3, 3), slice(pts, 1, 0, 3)}, 1);
  Tensor c = enc.forward(perm);
  CHECK(max_abs_diff(a, c) < 1e-12);
}

TEST_CASE("fusion layer handles a single-token scene and keeps attention weight 1") {
  Rng rng(5);
  FusionLayer layer(16, 2, rng);
  Rng frng(6);
  Tensor z = Tensor::randn({1, 16}, frng);
  Tensor m = Tensor::randn({1, 1, 16}, frng);
  NoGradGuard ng;
  auto [z2, m2] = layer.forward(z, m);
  CHECK(z2.shape() == Shape{1, 16});
  CHECK(m2.shape() == Shape{1, 1, 16});
  for (int64_t i = 0; i < z2.size(); ++i) CHECK(std::isfinite(z2.at(i)));
}

TEST_CASE("backbone is permutation-equivariant over agents") {
  Rng rng(7);
  BackboneConfig cfg;
  Backbone bb(cfg, rng);
  scene::Scene sc = scene::generate_scene(scene::ScenarioKind::straight, 21,
                                          {20, 30, 0.1, 4});
  std::vector<size_t> perm = {2, 0, 3, 1};
  scene::Scene sp = permute_agents(sc, perm);
  NoGradGuard ng;
  BackboneOut a = bb.forward(featurize(sc, cfg.d_scale));
  BackboneOut b = bb.forward(featurize(sp, cfg.d_scale));
  for (size_t i = 0; i < perm.size(); ++i) {
    Tensor row_a = slice(a.z_actor, 0, static_cast<int64_t>(perm[i]), 1);
    Tensor row_b = slice(b.z_actor, 0, static_cast<int64_t>(i), 1);
    CHECK(max_abs_diff(row_a, row_b) < 1e-9);
  }
}

TEST_CASE("backbone is invariant under global rigid transforms") {
  Rng rng(8);
  BackboneConfig cfg;
  Backbone bb(cfg, rng);
  for (uint64_t seed : {11ull, 12ull}) {
    scene::Scene sc = scene::generate_scene(scene::ScenarioKind::merge, seed);
    scene::Scene moved = rigid_transform(sc, 1.2, -300.0, 77.0);
    NoGradGuard ng;
    BackboneOut a = bb.forward(featurize(sc, cfg.d_scale));
    BackboneOut b = bb.forward(featurize(moved, cfg.d_scale));
    CHECK(max_abs_diff(a.z_actor, b.z_actor) < 1e-6);
    CHECK(max_abs_diff(a.z_map, b.z_map) < 1e-6);
  }
}

TEST_CASE("stacking fusion layers equals threading state through them") {
  Rng rng(9);
  BackboneConfig cfg = tiny_backbone_cfg();
  FusionStack stack(2, cfg.d, cfg.heads, rng);
  Rng frng(10);
  Tensor z = Tensor::randn({3, cfg.d}, frng);
  Tensor m = Tensor::randn({3, 3, cfg.d}, frng);
  NoGradGuard ng;
  auto [zs, ms] = stack.forward(z, m);
  auto [z1, m1] = stack.layers[0].forward(z, m);
  auto [z2, m2] = stack.layers[1].forward(z1, m1);
  CHECK(max_abs_diff(zs, z2) == 0.0);
  CHECK(max_abs_diff(ms, m2) == 0.0);
}

TEST_CASE("gradients flow through two stacked fusion layers") {
  Rng rng(11);
  const int64_t d = 8, n = 3;
  FusionStack stack(2, d, 2, rng);
  Rng frng(12);
  Tensor z = Tensor::randn({n, d}, frng, 1.0, true);
  Tensor m = Tensor::randn({n, n, d}, frng, 1.0);
  Tensor c = Tensor::rand_uniform({n, d}, frng, -1.0, 1.0);
  double err = grad_check(
      [&](const Tensor& t) {
        auto [z2, m2] = stack.forward(t, m);
        (void)m2;
        return reduce_sum(mul(z2, c));
      },
      z, 1e-5);
  CHECK(err <= 1e-4);

  // and through the pose matrix input
  Tensor m_leaf = Tensor::randn({n, n, d}, frng, 1.0, true);
  double err_m = grad_check(
      [&](const Tensor& t) {
        auto [z2, m2] = stack.forward(z.detach(), t);
        (void)m2;
        return reduce_sum(mul(z2, c));
      },
      m_leaf, 1e-5);
  CHECK(err_m <= 1e-4);
}

// ---- decoders ----

TEST_CASE("bezier trajectory with all control points at origin stays at origin") {
  BezierTrajectory traj;
  traj.control.assign(6, {0.0, 0.0});
  for (auto& p : traj.sample(30)) {
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.0);
  }
}

TEST_CASE("linear bezier midpoint") {
  BezierTrajectory traj;
  traj.control = {{0.0, 0.0}, {1.0, 0.0}};
  auto pts = traj.sample(30);  // u = 1/30 .. 1
  CHECK(pts[14][0] == doctest::Approx(0.5).epsilon(1e-12));  // u = 15/30
  CHECK(pts[14][1] == doctest::Approx(0.0));
}

TEST_CASE("bezier endpoint interpolation is exact") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    BezierTrajectory traj;
    for (int i = 0; i < 6; ++i) traj.control.push_back({rng.uniform(-50, 50), rng.uniform(-50, 50)});
    auto pts = traj.sample(30);
    CHECK(pts.back()[0] == traj.control.back()[0]);
    CHECK(pts.back()[1] == traj.control.back()[1]);
  }
}

namespace {

// convex hull (monotone chain) + point-in-hull with tolerance; oracle for the
// Bezier containment property
bool inside_hull(const std::vector<scene::Vec2>& poly, const scene::Vec2& q, double tol) {
  std::vector<scene::Vec2> pts = poly;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() == 1) return std::abs(q[0] - pts[0][0]) <= tol && std::abs(q[1] - pts[0][1]) <= tol;
  auto cross = [](const scene::Vec2& o, const scene::Vec2& a, const scene::Vec2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<scene::Vec2> hull;
  for (int pass = 0; pass < 2; ++pass) {
    const size_t base = hull.size();
    for (const auto& p : pts) {
      while (hull.size() >= base + 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0) hull.pop_back();
      hull.push_back(p);
    }
    hull.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  for (size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    if (cross(a, b, q) < -tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("bezier samples stay inside the control-point convex hull") {
  Rng rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    BezierTrajectory traj;
    for (int i = 0; i < 6; ++i) traj.control.push_back({rng.uniform(-40, 40), rng.uniform(-40, 40)});
    for (const auto& p : traj.sample(30)) {
      REQUIRE(inside_hull(traj.control, p, 1e-9));
    }
  }
}

TEST_CASE("marginal decoder shape and normalization contracts") {
  Rng rng(15);
  DecoderConfig cfg;
  cfg.d = 16;
  MarginalDecoder dec(cfg, rng);
  Rng frng(16);
  Tensor z = Tensor::randn({3, 16}, frng);
  NoGradGuard ng;
  ModeSet out = dec.forward(z);
  CHECK(out.traj.shape() == Shape{3, cfg.k, cfg.t, 2});
  CHECK(out.logits.shape() == Shape{3, cfg.k});
  CHECK_FALSE(out.scene_level);
  Tensor probs = softmax(out.logits);
  for (int64_t i = 0; i < 3; ++i) {
    double sum = 0.0;
    for (int64_t k = 0; k < cfg.k; ++k) sum += probs.at(i * cfg.k + k);
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  // deterministic
  ModeSet again = dec.forward(z);
  CHECK(max_abs_diff(out.traj, again.traj) == 0.0);
}

TEST_CASE("joint split decoder emits scene-level logits") {
  Rng rng(17);
  DecoderConfig cfg;
  cfg.d = 16;
  JointSplitDecoder dec(cfg, rng);
  Rng frng(18);
  NoGradGuard ng;
  ModeSet out = dec.forward(Tensor::randn({4, 16}, frng));
  CHECK(out.traj.shape() == Shape{4, cfg.k, cfg.t, 2});
  CHECK(out.logits.shape() == Shape{cfg.k});
  CHECK(out.scene_level);
  Tensor probs = softmax(out.logits);
  double sum = 0.0;
  for (int64_t k = 0; k < cfg.k; ++k) sum += probs.at(k);
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("zeroing one multi-mlp head silences exactly that mode") {
  Rng rng(19);
  DecoderConfig cfg;
  cfg.d = 16;
  cfg.k = 3;
  MultiMlpDecoder dec(cfg, rng);
  // zero the final layer of head 1
  nn::Linear& last = dec.heads[1].trunk.layers.back();
  std::fill(last.w.mutable_values().begin(), last.w.mutable_values().end(), 0.0);
  std::fill(last.b.mutable_values().begin(), last.b.mutable_values().end(), 0.0);
  Rng frng(20);
  NoGradGuard ng;
  ModeSet out = dec.forward(Tensor::randn({2, 16}, frng));
  bool mode0_nonzero = false;
  for (int64_t i = 0; i < 2; ++i) {
    for (int64_t t = 0; t < cfg.t; ++t) {
      for (int64_t c = 0; c < 2; ++c) {
        const double v1 = out.traj.at(((i * cfg.k + 1) * cfg.t + t) * 2 + c);
        CHECK(v1 == 0.0);
        mode0_nonzero = mode0_nonzero || out.traj.at(((i * cfg.k + 0) * cfg.t + t) * 2 + c) != 0.0;
      }
    }
  }
  CHECK(mode0_nonzero);
}

TEST_CASE("mode-k loss gradients touch only head k parameters") {
  Rng rng(21);
  DecoderConfig cfg;
  cfg.d = 12;
  cfg.k = 3;
  MultiMlpDecoder dec(cfg, rng);
  Rng frng(22);
  Tensor tokens = Tensor::randn({2, 12}, frng);
  ModeSet out = dec.forward(tokens);
  const int64_t target = 1;
  Tensor mode_traj = slice(out.traj, 1, target, 1);
  backward(reduce_mean(mul(mode_traj, mode_traj)));
  for (int64_t k = 0; k < cfg.k; ++k) {
    nn::ParamMap pm;
    dec.heads[static_cast<size_t>(k)].collect("h", pm);
    double gnorm = 0.0;
    for (auto& [name, p] : pm.items) {
      if (!p.has_grad()) continue;
      for (double g : p.grad()) gnorm += std::abs(g);
    }
    if (k == target) CHECK(gnorm > 0.0);
    else CHECK(gnorm == 0.0);
  }
}

TEST_CASE("anchor decoder with zero layers reduces to multi-mlp on broadcast anchors") {
  Rng rng(23);
  DecoderConfig cfg;
  cfg.d = 16;
  cfg.k = 4;
  cfg.anchor_layers = 0;
  AnchorTransformerDecoder dec(cfg, rng);
  Rng frng(24);
  Tensor z = Tensor::randn({3, 16}, frng);
  NoGradGuard ng;
  ModeSet a = dec.forward(z);
  ModeSet b = dec.mlp.forward(nn::expand_front(dec.anchors, 3));
  CHECK(max_abs_diff(a.traj, b.traj) == 0.0);
  CHECK(max_abs_diff(a.logits, b.logits) == 0.0);
}

TEST_CASE("anchor decoder: K=1 degenerates cleanly and shapes hold") {
  Rng rng(25);
  DecoderConfig cfg;
  cfg.d = 16;
  cfg.k = 1;
  AnchorTransformerDecoder dec(cfg, rng);
  Rng frng(26);
  NoGradGuard ng;
  Tensor refined = dec.refine(Tensor::randn({2, 16}, frng));
  CHECK(refined.shape() == Shape{2, 1, 16});
  for (int64_t i = 0; i < refined.size(); ++i) CHECK(std::isfinite(refined.at(i)));
}

TEST_CASE("anchor decoder is permutation-equivariant over agents, modes fixed") {
  Rng rng(27);
  DecoderConfig cfg;
  cfg.d = 16;
  AnchorTransformerDecoder dec(cfg, rng);
  Rng frng(28);
  Tensor z = Tensor::randn({4, 16}, frng);
  // permutation [2,0,3,1]
  Tensor zp = concat({slice(z, 0, 2, 1), slice(z, 0, 0, 1), slice(z, 0, 3, 1), slice(z, 0, 1, 1)}, 0);
  NoGradGuard ng;
  Tensor a = dec.refine(z);
  Tensor b = dec.refine(zp);
  const std::vector<int64_t> perm = {2, 0, 3, 1};
  for (int64_t i = 0; i < 4; ++i) {
    Tensor ra = slice(a, 0, perm[static_cast<size_t>(i)], 1);
    Tensor rb = slice(b, 0, i, 1);
    CHECK(max_abs_diff(ra, rb) < 1e-9);
  }
}

// ---- generative ----

namespace {

struct CvaeParts {
  EncoderSet enc;
  TrackEncoder gt_enc;
  PosteriorNet post;
  PriorNet prior;
  CvaeDecoder dec;
  CvaeConfig cfg;

  CvaeParts(const CvaeConfig& c, Rng& rng)
      : enc(c.d, rng), gt_enc(kGtFeatureDim, c.d, rng), post(c, rng), prior(c, rng), dec(c, rng), cfg(c) {}
};

CvaeConfig tiny_cvae_cfg() {
  CvaeConfig cfg;
  cfg.d = 16;
  cfg.d_b = 8;
  cfg.heads = 2;
  cfg.sft_layers = 2;
  cfg.decoder.d = 16;
  cfg.decoder.t = 30;
  return cfg;
}

}  // namespace

TEST_CASE("posterior and prior emit [N_a x D_B] gaussians; posterior needs futures") {
  Rng rng(29);
  CvaeConfig cfg = tiny_cvae_cfg();
  CvaeParts parts(cfg, rng);
  scene::Scene sc = scene::generate_scene(scene::ScenarioKind::intersection_yield, 31);
  SceneFeatures f = featurize(sc, cfg.d_scale);
  NoGradGuard ng;
  EncoderOut e = parts.enc.forward(f);
  Tensor z_gt = parts.gt_enc.forward(f.gt_future);
  GaussianSet q = parts.post.forward(z_gt, e.z_actor, e.z_map, e.m_rpe);
  GaussianSet p = parts.prior.forward(e.z_actor, e.z_map, e.m_rpe);
  CHECK(q.mu.shape() == Shape{f.n_agents, cfg.d_b});
  CHECK(q.log_var.shape() == Shape{f.n_agents, cfg.d_b});
  CHECK(p.mu.shape() == Shape{f.n_agents, cfg.d_b});
  CHECK(p.log_var.shape() == Shape{f.n_agents, cfg.d_b});
  CHECK_THROWS_AS(parts.post.forward(Tensor(), e.z_actor, e.z_map, e.m_rpe), ValidationError);
}

TEST_CASE("prior network is permutation-equivariant over agents") {
  Rng rng(33);
  CvaeConfig cfg = tiny_cvae_cfg();
  CvaeParts parts(cfg, rng);
  scene::Scene sc = scene::generate_scene(scene::ScenarioKind::straight, 35, {20, 30, 0.1, 3});
  std::vector<size_t> perm = {1, 2, 0};
  scene::Scene sp = permute_agents(sc, perm);
  NoGradGuard ng;
  SceneFeatures f0 = featurize(sc, cfg.d_scale);
  SceneFeatures f1 = featurize(sp, cfg.d_scale);
  EncoderOut e0 = parts.enc.forward(f0);
  EncoderOut e1 = parts.enc.forward(f1);
  GaussianSet p0 = parts.prior.forward(e0.z_actor, e0.z_map, e0.m_rpe);
  GaussianSet p1 = parts.prior.forward(e1.z_actor, e1.z_map, e1.m_rpe);
  for (size_t i = 0; i < perm.size(); ++i) {
    CHECK(max_abs_diff(slice(p0.mu, 0, static_cast<int64_t>(perm[i]), 1), slice(p1.mu, 0, static_cast<int64_t>(i), 1)) < 1e-9);
  }
}

TEST_CASE("sample_latent: vanishing variance collapses to the mean; mean mode is seed-free") {
  GaussianSet g;
  g.mu = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  g.log_var = Tensor::full({2, 3}, -80.0);
  Rng r1(1), r2(2);
  LatentScene s1 = sample_latent(g, LatentMode::prior_sample, r1);
  CHECK(max_abs_diff(s1.b, g.mu) < 1e-12);
  LatentScene m1 = sample_latent(g, LatentMode::prior_mean, r1);
  LatentScene m2 = sample_latent(g, LatentMode::prior_mean, r2);
  CHECK(max_abs_diff(m1.b, m2.b) == 0.0);
  CHECK(max_abs_diff(m1.b, g.mu) == 0.0);
}

TEST_CASE("sample mean over many draws approaches mu") {
  GaussianSet g;
  g.mu = Tensor::from({1, 2}, {0.7, -1.3});
  g.log_var = Tensor::from({1, 2}, {std::log(0.25), std::log(4.0)});
  Rng rng(2024);
  const int64_t n = 100000;
  double acc[2] = {0.0, 0.0};
  for (int64_t i = 0; i < n; ++i) {
    LatentScene s = sample_latent(g, LatentMode::prior_sample, rng);
    acc[0] += s.b.at(0);
    acc[1] += s.b.at(1);
  }
  const double sigma[2] = {0.5, 2.0};
  for (int c = 0; c < 2; ++c) {
    const double mean = acc[c] / static_cast<double>(n);
    CHECK(std::abs(mean - g.mu.at(c)) <= 3.0 * sigma[c] / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("reparameterized sampling passes gradient to mu as identity") {
  GaussianSet g;
  g.mu = Tensor::param({2, 2}, {0.1, 0.2, 0.3, 0.4});
  g.log_var = Tensor::param({2, 2}, {0.0, 0.0, 0.0, 0.0});
  Rng rng(7);
  LatentScene s = sample_latent(g, LatentMode::posterior_sample, rng);
  backward(reduce_sum(s.b));
  for (double gv : g.mu.grad()) CHECK(gv == doctest::Approx(1.0));
}

TEST_CASE("kl divergence: zero at identity, closed-form unit shift, non-negative") {
  GaussianSet a;
  a.mu = Tensor::from({3, 4}, std::vector<double>(12, 0.25));
  a.log_var = Tensor::from({3, 4}, std::vector<double>(12, -0.5));
  CHECK(kl_divergence(a, a).item() == 0.0);

  GaussianSet q, p;
  q.mu = Tensor::from({1, 1}, {1.0});
  q.log_var = Tensor::from({1, 1}, {0.0});
  p.mu = Tensor::from({1, 1}, {0.0});
  p.log_var = Tensor::from({1, 1}, {0.0});
  CHECK(kl_divergence(q, p).item() == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    GaussianSet x, y;
    x.mu = Tensor::randn({2, 3}, rng, 2.0);
    x.log_var = Tensor::randn({2, 3}, rng, 1.0);
    y.mu = Tensor::randn({2, 3}, rng, 2.0);
    y.log_var = Tensor::randn({2, 3}, rng, 1.0);
    CHECK(kl_divergence(x, y).item() >= 0.0);
  }
}

TEST_CASE("cvae decode is deterministic and checks the latent width") {
  Rng rng(43);
  CvaeConfig cfg = tiny_cvae_cfg();
  CvaeParts parts(cfg, rng);
  scene::Scene sc = scene::generate_scene(scene::ScenarioKind::merge, 47);
  SceneFeatures f = featurize(sc, cfg.d_scale);
  NoGradGuard ng;
  EncoderOut e = parts.enc.forward(f);
  GaussianSet p = parts.prior.forward(e.z_actor, e.z_map, e.m_rpe);
  Rng s1(9), s2(9);
  LatentScene l1 = sample_latent(p, LatentMode::prior_sample, s1);
  LatentScene l2 = sample_latent(p, LatentMode::prior_sample, s2);
  Tensor y1 = parts.dec.forward(e.z_actor, e.z_map, e.m_rpe, l1);
  Tensor y2 = parts.dec.forward(e.z_actor, e.z_map, e.m_rpe, l2);
  CHECK(y1.shape() == Shape{f.n_agents, cfg.decoder.t, 2});
  CHECK(max_abs_diff(y1, y2) == 0.0);

  LatentScene bad;
  bad.b = Tensor::zeros({f.n_agents, cfg.d_b + 1});
  CHECK_THROWS_AS(parts.dec.forward(e.z_actor, e.z_map, e.m_rpe, bad), ShapeError);
}

TEST_CASE("posterior gradients pass a finite-difference check") {
  Rng rng(51);
  CvaeConfig cfg = tiny_cvae_cfg();
  cfg.d = 8;
  cfg.d_b = 4;
  cfg.sft_layers = 1;
  cfg.decoder.d = 8;
  CvaeParts parts(cfg, rng);
  scene::Scene sc = scene::generate_scene(scene::ScenarioKind::straight, 53, {20, 30, 0.1, 2});
  SceneFeatures f = featurize(sc, cfg.d_scale);
  Rng crng(54);
  Tensor cmu = Tensor::rand_uniform({f.n_agents, cfg.d_b}, crng, -1.0, 1.0);

  nn::ParamMap pm;
  parts.post.collect("post", pm);
  std::string worst;
  double err = grad_check_multi(
      [&]() {
        EncoderOut e = parts.enc.forward(f);
        Tensor z_gt = parts.gt_enc.forward(f.gt_future);
        GaussianSet q = parts.post.forward(z_gt, e.z_actor, e.z_map, e.m_rpe);
        return reduce_sum(add(mul(q.mu, cmu), mul(q.log_var, cmu)));
      },
      pm.items, 1e-5, 6, &worst);
  INFO(worst);
  CHECK(err <= 1e-4);
}
