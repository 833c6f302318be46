#pragma once

#include "model/features.hpp"
#include "nn/layers.hpp"

namespace jointpred::model {

using ad::Tensor;
using nn::ParamMap;

struct BackboneConfig {
  int64_t d = 32;
  int64_t heads = 4;
  int64_t sft_layers = 4;
  double d_scale = 50.0;
};

// temporal conv, kernel 3, zero padding; stride 2 keeps even time indices
struct Conv1d {
  Tensor w;  // [3*in, out]
  Tensor b;  // [out]

  Conv1d() = default;
  Conv1d(int64_t in, int64_t out, Rng& rng);
  Tensor forward(const Tensor& x, int64_t stride = 1) const;  // x: [B, T, C]
  void collect(const std::string& prefix, ParamMap& out) const;
};

// downsampling conv stack with a final max-over-time pool
struct TrackEncoder {
  Conv1d c1, c2, c3;

  TrackEncoder() = default;
  TrackEncoder(int64_t in, int64_t d, Rng& rng);
  Tensor forward(const Tensor& x) const;  // [B, T, in] -> [B, d]
  void collect(const std::string& prefix, ParamMap& out) const;
};

// per-point shared MLP with max-pool over points
struct MapEncoder {
  nn::Linear l1, l2;

  MapEncoder() = default;
  MapEncoder(int64_t in, int64_t d, Rng& rng);
  Tensor forward(const Tensor& x) const;  // [B, P, in] -> [B, d]
  void collect(const std::string& prefix, ParamMap& out) const;
};

struct RelPoseEmbed {
  nn::Mlp mlp;

  RelPoseEmbed() = default;
  RelPoseEmbed(int64_t d, Rng& rng);
  Tensor forward(const Tensor& rel, int64_t n) const;  // [N*N, 5] -> [N, N, d]
  void collect(const std::string& prefix, ParamMap& out) const;
};

// One fusion layer: queries are the tokens, keys/values are per-pair context
// tokens built from both endpoint tokens and their relative-pose embedding;
// the pose matrix is refined through a residual re-encoding of the context.
struct FusionLayer {
  int64_t d = 0;
  int64_t heads = 0;
  nn::Mlp ctx;         // [3d -> d -> d]
  nn::Linear q, k, v, o;
  nn::Mlp ffn;         // [d -> 2d -> d]
  nn::Mlp pose_update; // [d -> d -> d]
  nn::LayerNorm ln1, ln2;

  FusionLayer() = default;
  FusionLayer(int64_t d, int64_t heads, Rng& rng);
  // z: [N, d], m: [N, N, d] -> updated pair
  std::pair<Tensor, Tensor> forward(const Tensor& z, const Tensor& m) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

struct FusionStack {
  std::vector<FusionLayer> layers;

  FusionStack() = default;
  FusionStack(int64_t n_layers, int64_t d, int64_t heads, Rng& rng);
  std::pair<Tensor, Tensor> forward(Tensor z, Tensor m) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

struct EncoderOut {
  Tensor z_actor;  // [N_a, d]
  Tensor z_map;    // [N_m, d]
  Tensor m_rpe;    // [N, N, d]
};

struct EncoderSet {
  TrackEncoder actor_enc;
  MapEncoder map_enc;
  RelPoseEmbed rel_embed;

  EncoderSet() = default;
  EncoderSet(int64_t d, Rng& rng);
  EncoderOut forward(const SceneFeatures& f) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

struct BackboneOut {
  Tensor z_actor;  // refined [N_a, d]
  Tensor z_map;    // refined [N_m, d]
  Tensor m_rpe;    // refined [N, N, d]
};

// Shared encoder plus fusion stack used by the deterministic model variants.
struct Backbone {
  BackboneConfig cfg;
  EncoderSet enc;
  FusionStack stack;

  Backbone() = default;
  Backbone(const BackboneConfig& cfg, Rng& rng);
  BackboneOut forward(const SceneFeatures& f) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// multi-head attention where per-slot queries attend over a shared key/value
// token set; q: [B, S, d], kv: [M, d] -> [B, S, d]
Tensor cross_attention(const Tensor& q_in, const Tensor& kv, const nn::Linear& wq,
                       const nn::Linear& wk, const nn::Linear& wv, const nn::Linear& wo,
                       int64_t heads);

// self-attention within each batch row; x: [B, S, d] -> [B, S, d]
Tensor self_attention(const Tensor& x, const nn::Linear& wq, const nn::Linear& wk,
                      const nn::Linear& wv, const nn::Linear& wo, int64_t heads);

}  // namespace jointpred::model
