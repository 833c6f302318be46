#include "model/generative.hpp"

namespace jointpred::model {

using namespace ad;

GaussianTower::GaussianTower(const CvaeConfig& cfg, Rng& rng)
    : stack(cfg.sft_layers, cfg.d, cfg.heads, rng),
      trunk({cfg.d, cfg.d}, rng),
      mu_head(cfg.d, cfg.d_b, rng),
      log_var_head(cfg.d, cfg.d_b, rng) {}

GaussianSet GaussianTower::forward(const Tensor& z_tokens, const Tensor& m_rpe, int64_t n_agents) const {
  auto [z, m] = stack.forward(z_tokens, m_rpe);
  (void)m;
  Tensor actors = relu(trunk.forward(slice(z, 0, 0, n_agents)));
  GaussianSet out;
  out.mu = mu_head.forward(actors);
  out.log_var = log_var_head.forward(actors);
  return out;
}

void GaussianTower::collect(const std::string& prefix, ParamMap& out) const {
  stack.collect(prefix + ".sft", out);
  trunk.collect(prefix + ".trunk", out);
  mu_head.collect(prefix + ".mu", out);
  log_var_head.collect(prefix + ".log_var", out);
}

PosteriorNet::PosteriorNet(const CvaeConfig& cfg, Rng& rng)
    : fuse(2 * cfg.d, cfg.d, rng), tower(cfg, rng) {}

GaussianSet PosteriorNet::forward(const Tensor& z_gt, const Tensor& z_actor, const Tensor& z_map,
                                  const Tensor& m_rpe) const {
  if (!z_gt.defined()) {
    throw ValidationError("posterior requires encoded ground-truth futures (training-only path)");
  }
  Tensor fused = fuse.forward(concat({z_gt, z_actor}, 1));  // [N_a, d]
  Tensor tokens = concat({fused, z_map}, 0);
  return tower.forward(tokens, m_rpe, z_actor.dim(0));
}

void PosteriorNet::collect(const std::string& prefix, ParamMap& out) const {
  fuse.collect(prefix + ".fuse", out);
  tower.collect(prefix + ".tower", out);
}

PriorNet::PriorNet(const CvaeConfig& cfg, Rng& rng) : tower(cfg, rng) {}

GaussianSet PriorNet::forward(const Tensor& z_actor, const Tensor& z_map, const Tensor& m_rpe) const {
  Tensor tokens = concat({z_actor, z_map}, 0);
  return tower.forward(tokens, m_rpe, z_actor.dim(0));
}

void PriorNet::collect(const std::string& prefix, ParamMap& out) const {
  tower.collect(prefix + ".tower", out);
}

CvaeDecoder::CvaeDecoder(const CvaeConfig& cfg, Rng& rng)
    : fuse(cfg.d + cfg.d_b, cfg.d, rng),
      stack(cfg.sft_layers, cfg.d, cfg.heads, rng),
      head(cfg.decoder, false, rng) {}

Tensor CvaeDecoder::forward(const Tensor& z_actor, const Tensor& z_map, const Tensor& m_rpe,
                            const LatentScene& latent) const {
  const int64_t expected = fuse.w.dim(0) - z_actor.dim(1);
  if (latent.b.dim(1) != expected) {
    throw ShapeError("cvae decoder: latent width " + std::to_string(latent.b.dim(1)) +
                     " does not match configured D_B " + std::to_string(expected));
  }
  Tensor fused = fuse.forward(concat({z_actor, latent.b}, 1));
  Tensor tokens = concat({fused, z_map}, 0);
  auto [z, m] = stack.forward(tokens, m_rpe);
  (void)m;
  Tensor actors = slice(z, 0, 0, z_actor.dim(0));
  return head.forward(actors).traj;  // [N_a, T, 2]
}

void CvaeDecoder::collect(const std::string& prefix, ParamMap& out) const {
  fuse.collect(prefix + ".fuse", out);
  stack.collect(prefix + ".sft", out);
  head.collect(prefix + ".head", out);
}

LatentScene sample_latent(const GaussianSet& g, LatentMode mode, Rng& rng) {
  LatentScene out;
  out.provenance = mode;
  if (mode == LatentMode::prior_mean) {
    out.b = g.mu;
    return out;
  }
  Tensor eps = Tensor::randn(g.mu.shape(), rng, 1.0);
  Tensor sigma = exp(mul(g.log_var, Tensor::scalar(0.5)));
  out.b = add(g.mu, mul(sigma, eps));
  return out;
}

Tensor kl_divergence(const GaussianSet& q, const GaussianSet& p) {
  if (q.mu.shape() != p.mu.shape() || q.log_var.shape() != p.log_var.shape()) {
    throw ShapeError("kl_divergence: shape mismatch " + shape_str(q.mu.shape()) + " vs " +
                     shape_str(p.mu.shape()));
  }
  const int64_t n_agents = q.mu.dim(0);
  // 0.5 * sum_d [ exp(lq - lp) + (mu_p - mu_q)^2 exp(-lp) - 1 + lp - lq ]
  Tensor dl = sub(q.log_var, p.log_var);
  Tensor ratio = exp(dl);
  Tensor dm = sub(p.mu, q.mu);
  Tensor sq = mul(mul(dm, dm), exp(neg(p.log_var)));
  Tensor inner = sub(add(ratio, sq), add(Tensor::full(dl.shape(), 1.0), dl));
  Tensor per_agent = reduce_sum(inner, 1);  // [N_a]
  return mul(reduce_sum(per_agent), Tensor::scalar(0.5 / static_cast<double>(n_agents)));
}

}  // namespace jointpred::model
