#pragma once

#include "model/backbone.hpp"
#include "nn/layers.hpp"
#include "scene/scene.hpp"

namespace jointpred::model {

using ad::Tensor;

struct BezierTrajectory {
  std::vector<scene::Vec2> control;  // P+1 points, agent-local meters

  int64_t degree() const { return static_cast<int64_t>(control.size()) - 1; }
  scene::Vec2 eval(double u) const;
  std::vector<scene::Vec2> sample(int64_t t) const;  // u = 1/t ... 1
};

// Bernstein basis matrix [t, degree+1] evaluated at u = 1/t, ..., 1.
Tensor bernstein_matrix(int64_t t, int64_t degree);

struct DecoderConfig {
  int64_t d = 32;
  int64_t k = 6;           // modes
  int64_t t = 30;          // future steps
  int64_t degree = 5;      // Bezier degree
  int64_t heads = 4;       // anchor decoder attention heads
  int64_t anchor_layers = 2;
  double output_scale = 10.0;  // head outputs are scaled into meters
};

// K scene- or agent-level trajectory hypotheses, agent-local coordinates.
struct ModeSet {
  Tensor traj;    // [N_a, K, T, 2]
  Tensor logits;  // scene level: [K]; marginal: [N_a, K]
  bool scene_level = false;

  int64_t n_agents() const { return traj.dim(0); }
  int64_t k() const { return traj.dim(1); }
  int64_t t() const { return traj.dim(2); }
};

// token [B, d] -> control points [B, degree+1, 2] (+ optional per-token logit)
struct BezierHead {
  int64_t degree = 5;
  int64_t t = 30;
  double output_scale = 10.0;
  bool with_logit = false;
  nn::Mlp trunk;
  Tensor basis;  // constant [t, degree+1]

  BezierHead() = default;
  BezierHead(const DecoderConfig& cfg, bool with_logit, Rng& rng);

  struct Out {
    Tensor control;  // [B, degree+1, 2]
    Tensor traj;     // [B, t, 2]
    Tensor logit;    // [B] when with_logit
  };
  Out forward(const Tensor& tokens) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// Baseline head: one token projected to K mode embeddings, a shared Bezier
// head per embedding, per-agent mode scores.
struct MarginalDecoder {
  int64_t k = 6;
  nn::Linear split;  // d -> K*d
  BezierHead head;

  MarginalDecoder() = default;
  MarginalDecoder(const DecoderConfig& cfg, Rng& rng);
  ModeSet forward(const Tensor& z_actor) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// Same trunk as MarginalDecoder but scene-level scoring: mode embeddings are
// mean-pooled over agents and scored by a shared 2-layer MLP.
struct JointSplitDecoder {
  int64_t k = 6;
  nn::Linear split;
  BezierHead head;
  nn::Mlp score;  // d -> d -> 1

  JointSplitDecoder() = default;
  JointSplitDecoder(const DecoderConfig& cfg, Rng& rng);
  ModeSet forward(const Tensor& z_actor) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// One independent decoder MLP (and scoring head) per scene mode.
struct MultiMlpDecoder {
  int64_t k = 6;
  std::vector<BezierHead> heads;
  std::vector<nn::Mlp> scores;  // per-mode d -> d -> 1 on mean-pooled tokens

  MultiMlpDecoder() = default;
  MultiMlpDecoder(const DecoderConfig& cfg, Rng& rng);
  // tokens: [N_a, K, d] mode-specific, or [N_a, d] broadcast to every mode
  ModeSet forward(const Tensor& tokens) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// Learnable anchors refined per agent by decoder layers: self-attention
// across modes, cross-attention over the refined actor tokens, FFN; the
// refined anchors feed the Multi-MLP decoder.
struct AnchorTransformerDecoder {
  int64_t k = 6;
  int64_t heads = 4;
  Tensor anchors;  // [K, d]
  struct Layer {
    nn::Linear sq, sk, sv, so;  // mode self-attention
    nn::Linear cq, ck, cv, co;  // cross-attention to actor tokens
    nn::Mlp ffn;
    nn::LayerNorm ln1, ln2, ln3;
  };
  std::vector<Layer> layers;
  MultiMlpDecoder mlp;

  AnchorTransformerDecoder() = default;
  AnchorTransformerDecoder(const DecoderConfig& cfg, Rng& rng);
  Tensor refine(const Tensor& z_actor) const;  // [N_a, K, d]
  ModeSet forward(const Tensor& z_actor) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

}  // namespace jointpred::model
