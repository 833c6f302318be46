#include "model/decoders.hpp"

#include <cmath>

namespace jointpred::model {

using namespace ad;

namespace {

double binomial(int64_t n, int64_t k) {
  double r = 1.0;
  for (int64_t i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

double bernstein(int64_t degree, int64_t i, double u) {
  return binomial(degree, i) * std::pow(u, static_cast<double>(i)) *
         std::pow(1.0 - u, static_cast<double>(degree - i));
}

}  // namespace

scene::Vec2 BezierTrajectory::eval(double u) const {
  const int64_t p = degree();
  scene::Vec2 out{0.0, 0.0};
  for (int64_t i = 0; i <= p; ++i) {
    const double b = bernstein(p, i, u);
    out[0] += b * control[static_cast<size_t>(i)][0];
    out[1] += b * control[static_cast<size_t>(i)][1];
  }
  return out;
}

std::vector<scene::Vec2> BezierTrajectory::sample(int64_t t) const {
  std::vector<scene::Vec2> out(static_cast<size_t>(t));
  for (int64_t j = 1; j <= t; ++j) {
    out[static_cast<size_t>(j - 1)] = eval(static_cast<double>(j) / static_cast<double>(t));
  }
  return out;
}

Tensor bernstein_matrix(int64_t t, int64_t degree) {
  std::vector<double> data(static_cast<size_t>(t * (degree + 1)));
  for (int64_t j = 1; j <= t; ++j) {
    const double u = static_cast<double>(j) / static_cast<double>(t);
    for (int64_t i = 0; i <= degree; ++i) {
      data[static_cast<size_t>((j - 1) * (degree + 1) + i)] = bernstein(degree, i, u);
    }
  }
  return Tensor::from({t, degree + 1}, std::move(data));
}

BezierHead::BezierHead(const DecoderConfig& cfg, bool with_logit_, Rng& rng)
    : degree(cfg.degree),
      t(cfg.t),
      output_scale(cfg.output_scale),
      with_logit(with_logit_),
      trunk({cfg.d, 2 * cfg.d, (cfg.degree + 1) * 2 + (with_logit_ ? 1 : 0)}, rng),
      basis(bernstein_matrix(cfg.t, cfg.degree)) {}

BezierHead::Out BezierHead::forward(const Tensor& tokens) const {
  const int64_t bsz = tokens.dim(0);
  Tensor raw = trunk.forward(tokens);  // [B, (P+1)*2 (+1)]
  Out out;
  Tensor ctrl = mul(slice(raw, 1, 0, (degree + 1) * 2), Tensor::scalar(output_scale));
  out.control = reshape(ctrl, {bsz, degree + 1, 2});
  // sample the curve: [B,2,P+1] x [P+1,T] -> [B,2,T] -> [B,T,2]
  Tensor sampled = matmul(transpose(out.control), transpose(basis));
  out.traj = transpose(sampled);
  if (with_logit) {
    out.logit = reshape(slice(raw, 1, (degree + 1) * 2, 1), {bsz});
  }
  return out;
}

void BezierHead::collect(const std::string& prefix, ParamMap& out) const {
  trunk.collect(prefix + ".trunk", out);
}

MarginalDecoder::MarginalDecoder(const DecoderConfig& cfg, Rng& rng)
    : k(cfg.k), split(cfg.d, cfg.k * cfg.d, rng), head(cfg, true, rng) {}

ModeSet MarginalDecoder::forward(const Tensor& z_actor) const {
  const int64_t na = z_actor.dim(0);
  const int64_t d = z_actor.dim(1);
  Tensor emb = reshape(split.forward(z_actor), {na * k, d});  // mode embeddings
  BezierHead::Out dec = head.forward(emb);
  ModeSet out;
  out.traj = reshape(dec.traj, {na, k, head.t, 2});
  out.logits = reshape(dec.logit, {na, k});
  out.scene_level = false;
  return out;
}

void MarginalDecoder::collect(const std::string& prefix, ParamMap& out) const {
  split.collect(prefix + ".split", out);
  head.collect(prefix + ".head", out);
}

JointSplitDecoder::JointSplitDecoder(const DecoderConfig& cfg, Rng& rng)
    : k(cfg.k), split(cfg.d, cfg.k * cfg.d, rng), head(cfg, false, rng), score({cfg.d, cfg.d, 1}, rng) {}

ModeSet JointSplitDecoder::forward(const Tensor& z_actor) const {
  const int64_t na = z_actor.dim(0);
  const int64_t d = z_actor.dim(1);
  Tensor emb3 = reshape(split.forward(z_actor), {na, k, d});
  BezierHead::Out dec = head.forward(reshape(emb3, {na * k, d}));
  ModeSet out;
  out.traj = reshape(dec.traj, {na, k, head.t, 2});
  Tensor pooled = reduce_mean(emb3, 0);  // [K, d]
  out.logits = reshape(score.forward(pooled), {k});
  out.scene_level = true;
  return out;
}

void JointSplitDecoder::collect(const std::string& prefix, ParamMap& out) const {
  split.collect(prefix + ".split", out);
  head.collect(prefix + ".head", out);
  score.collect(prefix + ".score", out);
}

MultiMlpDecoder::MultiMlpDecoder(const DecoderConfig& cfg, Rng& rng) : k(cfg.k) {
  for (int64_t i = 0; i < k; ++i) {
    heads.emplace_back(cfg, false, rng);
    scores.emplace_back(std::vector<int64_t>{cfg.d, cfg.d, 1}, rng);
  }
}

ModeSet MultiMlpDecoder::forward(const Tensor& tokens_in) const {
  Tensor tokens = tokens_in;
  if (tokens.rank() == 2) {  // broadcast shared tokens to every mode
    tokens = reshape(nn::expand_front(tokens, 1), {tokens.dim(0), 1, tokens.dim(1)});
    std::vector<Tensor> copies(static_cast<size_t>(k), tokens);
    tokens = concat(copies, 1);
  }
  const int64_t na = tokens.dim(0);
  const int64_t d = tokens.dim(2);
  if (tokens.dim(1) != k) {
    throw ShapeError("MultiMlpDecoder: expected " + std::to_string(k) + " mode tokens, got " +
                     shape_str(tokens.shape()));
  }
  std::vector<Tensor> mode_trajs;
  std::vector<Tensor> mode_logits;
  for (int64_t mode = 0; mode < k; ++mode) {
    Tensor tok = reshape(slice(tokens, 1, mode, 1), {na, d});
    BezierHead::Out dec = heads[static_cast<size_t>(mode)].forward(tok);
    mode_trajs.push_back(reshape(dec.traj, {na, 1, heads[0].t, 2}));
    Tensor pooled = reshape(reduce_mean(tok, 0), {1, d});
    mode_logits.push_back(reshape(scores[static_cast<size_t>(mode)].forward(pooled), {1}));
  }
  ModeSet out;
  out.traj = concat(mode_trajs, 1);
  out.logits = concat(mode_logits, 0);
  out.scene_level = true;
  return out;
}

void MultiMlpDecoder::collect(const std::string& prefix, ParamMap& out) const {
  for (int64_t i = 0; i < k; ++i) {
    heads[static_cast<size_t>(i)].collect(prefix + ".head" + std::to_string(i), out);
    scores[static_cast<size_t>(i)].collect(prefix + ".score" + std::to_string(i), out);
  }
}

AnchorTransformerDecoder::AnchorTransformerDecoder(const DecoderConfig& cfg, Rng& rng)
    : k(cfg.k), heads(cfg.heads), mlp(cfg, rng) {
  anchors = Tensor::randn({cfg.k, cfg.d}, rng, 0.5, true);
  for (int64_t l = 0; l < cfg.anchor_layers; ++l) {
    Layer layer{
        nn::Linear(cfg.d, cfg.d, rng), nn::Linear(cfg.d, cfg.d, rng),
        nn::Linear(cfg.d, cfg.d, rng), nn::Linear(cfg.d, cfg.d, rng),
        nn::Linear(cfg.d, cfg.d, rng), nn::Linear(cfg.d, cfg.d, rng),
        nn::Linear(cfg.d, cfg.d, rng), nn::Linear(cfg.d, cfg.d, rng),
        nn::Mlp({cfg.d, 2 * cfg.d, cfg.d}, rng),
        nn::LayerNorm(cfg.d), nn::LayerNorm(cfg.d), nn::LayerNorm(cfg.d)};
    layers.push_back(std::move(layer));
  }
}

Tensor AnchorTransformerDecoder::refine(const Tensor& z_actor) const {
  const int64_t na = z_actor.dim(0);
  Tensor a = nn::expand_front(anchors, na);  // [N_a, K, d]
  for (const Layer& layer : layers) {
    Tensor sa = self_attention(a, layer.sq, layer.sk, layer.sv, layer.so, heads);
    a = layer.ln1.forward(add(a, sa));
    Tensor ca = cross_attention(a, z_actor, layer.cq, layer.ck, layer.cv, layer.co, heads);
    a = layer.ln2.forward(add(a, ca));
    a = layer.ln3.forward(add(a, layer.ffn.forward(a)));
  }
  return a;
}

ModeSet AnchorTransformerDecoder::forward(const Tensor& z_actor) const {
  return mlp.forward(refine(z_actor));
}

void AnchorTransformerDecoder::collect(const std::string& prefix, ParamMap& out) const {
  out.add(prefix + ".anchors", anchors);
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string lp = prefix + ".layer" + std::to_string(l);
    layers[l].sq.collect(lp + ".sq", out);
    layers[l].sk.collect(lp + ".sk", out);
    layers[l].sv.collect(lp + ".sv", out);
    layers[l].so.collect(lp + ".so", out);
    layers[l].cq.collect(lp + ".cq", out);
    layers[l].ck.collect(lp + ".ck", out);
    layers[l].cv.collect(lp + ".cv", out);
    layers[l].co.collect(lp + ".co", out);
    layers[l].ffn.collect(lp + ".ffn", out);
    layers[l].ln1.collect(lp + ".ln1", out);
    layers[l].ln2.collect(lp + ".ln2", out);
    layers[l].ln3.collect(lp + ".ln3", out);
  }
  mlp.collect(prefix + ".mlp", out);
}

}  // namespace jointpred::model
