#include "model/backbone.hpp"

#include <cmath>

namespace jointpred::model {

using namespace ad;

Conv1d::Conv1d(int64_t in, int64_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(3 * in + out));
  std::vector<double> wd(static_cast<size_t>(3 * in * out));
  for (double& v : wd) v = rng.uniform(-bound, bound);
  w = Tensor::param({3 * in, out}, std::move(wd));
  // nonzero bias: zero-filled masked steps otherwise land exactly on the
  // relu kink, which breaks finite-difference gradient checks
  std::vector<double> bd(static_cast<size_t>(out));
  for (double& v : bd) v = rng.uniform(-0.05, 0.05);
  b = Tensor::param({out}, std::move(bd));
}

Tensor Conv1d::forward(const Tensor& x, int64_t stride) const {
  const int64_t bsz = x.dim(0), t = x.dim(1), c = x.dim(2);
  Tensor zero_row = Tensor::zeros({bsz, 1, c});
  Tensor prev = concat({zero_row, slice(x, 1, 0, t - 1)}, 1);
  Tensor next = concat({slice(x, 1, 1, t - 1), zero_row}, 1);
  Tensor windows = concat({prev, x, next}, 2);  // [B, T, 3C]
  Tensor y = add(matmul(windows, w), b);
  if (stride == 1) return y;
  if (stride != 2) throw ValidationError("Conv1d: only strides 1 and 2 are supported");
  int64_t t2 = y.dim(1);
  if (t2 % 2 != 0) {  // zero-pad to even so the even-index pick below works
    y = concat({y, Tensor::zeros({bsz, 1, y.dim(2)})}, 1);
    t2 += 1;
  }
  Tensor grouped = reshape(y, {bsz, t2 / 2, 2, y.dim(2)});
  return reshape(slice(grouped, 2, 0, 1), {bsz, t2 / 2, y.dim(2)});
}

void Conv1d::collect(const std::string& prefix, ParamMap& out) const {
  out.add(prefix + ".w", w);
  out.add(prefix + ".b", b);
}

TrackEncoder::TrackEncoder(int64_t in, int64_t d, Rng& rng)
    : c1(in, d, rng), c2(d, d, rng), c3(d, d, rng) {}

Tensor TrackEncoder::forward(const Tensor& x) const {
  Tensor h = relu(c1.forward(x, 1));
  h = relu(c2.forward(h, 2));
  h = relu(c3.forward(h, 2));
  return reduce_max(h, 1);
}

void TrackEncoder::collect(const std::string& prefix, ParamMap& out) const {
  c1.collect(prefix + ".c1", out);
  c2.collect(prefix + ".c2", out);
  c3.collect(prefix + ".c3", out);
}

MapEncoder::MapEncoder(int64_t in, int64_t d, Rng& rng) : l1(in, d, rng), l2(d, d, rng) {}

Tensor MapEncoder::forward(const Tensor& x) const {
  Tensor h = l2.forward(relu(l1.forward(x)));
  return reduce_max(h, 1);
}

void MapEncoder::collect(const std::string& prefix, ParamMap& out) const {
  l1.collect(prefix + ".l1", out);
  l2.collect(prefix + ".l2", out);
}

RelPoseEmbed::RelPoseEmbed(int64_t d, Rng& rng) : mlp({kRelPoseFeatureDim, d, d}, rng) {}

Tensor RelPoseEmbed::forward(const Tensor& rel, int64_t n) const {
  Tensor e = mlp.forward(rel);  // [N*N, d]
  return reshape(e, {n, n, e.dim(1)});
}

void RelPoseEmbed::collect(const std::string& prefix, ParamMap& out) const {
  mlp.collect(prefix + ".mlp", out);
}

FusionLayer::FusionLayer(int64_t d_, int64_t heads_, Rng& rng)
    : d(d_),
      heads(heads_),
      ctx({3 * d_, d_, d_}, rng),
      q(d_, d_, rng),
      k(d_, d_, rng),
      v(d_, d_, rng),
      o(d_, d_, rng),
      ffn({d_, 2 * d_, d_}, rng),
      pose_update({d_, d_, d_}, rng),
      ln1(d_),
      ln2(d_) {
  if (d_ % heads_ != 0) throw ValidationError("FusionLayer: d must be divisible by heads");
}

std::pair<Tensor, Tensor> FusionLayer::forward(const Tensor& z, const Tensor& m) const {
  const int64_t n = z.dim(0);
  if (z.dim(1) != d || m.dim(2) != d) {
    throw ShapeError("FusionLayer: width mismatch, z " + shape_str(z.shape()) + " m " + shape_str(m.shape()));
  }
  // pairwise context tokens c[i,j] = MLP(z_i ++ z_j ++ m[i,j])
  Tensor zi = reshape(nn::expand_front(z, 1), {n, 1, d});
  std::vector<Tensor> zi_cols(static_cast<size_t>(n), zi);
  Tensor zi_grid = reshape(concat(zi_cols, 1), {n * n, d});
  Tensor zj_grid = reshape(nn::expand_front(z, n), {n * n, d});
  Tensor ctx_in = concat({zi_grid, zj_grid, reshape(m, {n * n, d})}, 1);
  Tensor c = ctx.forward(ctx_in);  // [N*N, d]

  const int64_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor qf = q.forward(z);   // [N, d]
  Tensor kf = k.forward(c);   // [N*N, d]
  Tensor vf = v.forward(c);
  std::vector<Tensor> head_outs;
  for (int64_t h = 0; h < heads; ++h) {
    Tensor qh = reshape(slice(qf, 1, h * dh, dh), {n, 1, dh});
    Tensor kh = transpose(reshape(slice(kf, 1, h * dh, dh), {n, n, dh}));  // [N, dh, N]
    Tensor vh = reshape(slice(vf, 1, h * dh, dh), {n, n, dh});
    Tensor attn = softmax(mul(matmul(qh, kh), Tensor::scalar(scale)));  // [N, 1, N]
    head_outs.push_back(reshape(matmul(attn, vh), {n, dh}));
  }
  Tensor attn_out = o.forward(concat(head_outs, 1));
  Tensor z1 = ln1.forward(add(z, attn_out));
  Tensor z2 = ln2.forward(add(z1, ffn.forward(z1)));
  Tensor m_out = add(m, reshape(pose_update.forward(c), {n, n, d}));
  return {z2, m_out};
}

void FusionLayer::collect(const std::string& prefix, ParamMap& out) const {
  ctx.collect(prefix + ".ctx", out);
  q.collect(prefix + ".q", out);
  k.collect(prefix + ".k", out);
  v.collect(prefix + ".v", out);
  o.collect(prefix + ".o", out);
  ffn.collect(prefix + ".ffn", out);
  pose_update.collect(prefix + ".pose_update", out);
  ln1.collect(prefix + ".ln1", out);
  ln2.collect(prefix + ".ln2", out);
}

FusionStack::FusionStack(int64_t n_layers, int64_t d, int64_t heads, Rng& rng) {
  for (int64_t i = 0; i < n_layers; ++i) layers.emplace_back(d, heads, rng);
}

std::pair<Tensor, Tensor> FusionStack::forward(Tensor z, Tensor m) const {
  for (const FusionLayer& layer : layers) {
    auto [z2, m2] = layer.forward(z, m);
    z = z2;
    m = m2;
  }
  return {z, m};
}

void FusionStack::collect(const std::string& prefix, ParamMap& out) const {
  for (size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(prefix + "." + std::to_string(i), out);
  }
}

EncoderSet::EncoderSet(int64_t d, Rng& rng)
    : actor_enc(kActorFeatureDim, d, rng), map_enc(kMapFeatureDim, d, rng), rel_embed(d, rng) {}

EncoderOut EncoderSet::forward(const SceneFeatures& f) const {
  EncoderOut out;
  out.z_actor = actor_enc.forward(f.actor_past);
  out.z_map = map_enc.forward(f.map_points);
  out.m_rpe = rel_embed.forward(f.rel_pose, f.n());
  return out;
}

void EncoderSet::collect(const std::string& prefix, ParamMap& out) const {
  actor_enc.collect(prefix + ".actor_enc", out);
  map_enc.collect(prefix + ".map_enc", out);
  rel_embed.collect(prefix + ".rel_embed", out);
}

Backbone::Backbone(const BackboneConfig& cfg_, Rng& rng)
    : cfg(cfg_), enc(cfg_.d, rng), stack(cfg_.sft_layers, cfg_.d, cfg_.heads, rng) {}

BackboneOut Backbone::forward(const SceneFeatures& f) const {
  EncoderOut e = enc.forward(f);
  Tensor z = concat({e.z_actor, e.z_map}, 0);
  auto [z2, m2] = stack.forward(z, e.m_rpe);
  BackboneOut out;
  out.z_actor = slice(z2, 0, 0, f.n_agents);
  out.z_map = slice(z2, 0, f.n_agents, f.n_map);
  out.m_rpe = m2;
  return out;
}

void Backbone::collect(const std::string& prefix, ParamMap& out) const {
  enc.collect(prefix + ".enc", out);
  stack.collect(prefix + ".sft", out);
}

Tensor cross_attention(const Tensor& q_in, const Tensor& kv, const nn::Linear& wq,
                       const nn::Linear& wk, const nn::Linear& wv, const nn::Linear& wo,
                       int64_t heads) {
  const int64_t bsz = q_in.dim(0), s = q_in.dim(1), d = q_in.dim(2);
  if (d % heads != 0) throw ValidationError("cross_attention: d must be divisible by heads");
  const int64_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor qf = wq.forward(q_in);  // [B, S, d]
  Tensor kf = wk.forward(kv);    // [M, d]
  Tensor vf = wv.forward(kv);
  std::vector<Tensor> head_outs;
  for (int64_t h = 0; h < heads; ++h) {
    Tensor qh = slice(qf, 2, h * dh, dh);              // [B, S, dh]
    Tensor kh = transpose(slice(kf, 1, h * dh, dh));   // [dh, M]
    Tensor vh = slice(vf, 1, h * dh, dh);              // [M, dh]
    Tensor attn = softmax(mul(matmul(qh, kh), Tensor::scalar(scale)));  // [B, S, M]
    head_outs.push_back(matmul(attn, vh));             // [B, S, dh]
  }
  (void)bsz;
  (void)s;
  return wo.forward(concat(head_outs, 2));
}

Tensor self_attention(const Tensor& x, const nn::Linear& wq, const nn::Linear& wk,
                      const nn::Linear& wv, const nn::Linear& wo, int64_t heads) {
  const int64_t d = x.dim(2);
  if (d % heads != 0) throw ValidationError("self_attention: d must be divisible by heads");
  const int64_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor qf = wq.forward(x);
  Tensor kf = wk.forward(x);
  Tensor vf = wv.forward(x);
  std::vector<Tensor> head_outs;
  for (int64_t h = 0; h < heads; ++h) {
    Tensor qh = slice(qf, 2, h * dh, dh);             // [B, S, dh]
    Tensor kh = transpose(slice(kf, 2, h * dh, dh));  // [B, dh, S]
    Tensor vh = slice(vf, 2, h * dh, dh);             // [B, S, dh]
    Tensor attn = softmax(mul(matmul(qh, kh), Tensor::scalar(scale)));  // [B, S, S]
    head_outs.push_back(matmul(attn, vh));
  }
  return wo.forward(concat(head_outs, 2));
}

}  // namespace jointpred::model
