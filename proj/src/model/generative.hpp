#pragma once

#include "model/backbone.hpp"
#include "model/decoders.hpp"

namespace jointpred::model {

using ad::Tensor;

// diagonal Gaussians over per-agent latent tokens
struct GaussianSet {
  Tensor mu;       // [N_a, D_B]
  Tensor log_var;  // [N_a, D_B]
};

enum class LatentMode { posterior_sample, prior_sample, prior_mean };

struct LatentScene {
  Tensor b;  // [N_a, D_B]
  LatentMode provenance = LatentMode::prior_sample;
};

struct CvaeConfig {
  int64_t d = 32;
  int64_t d_b = 32;  // latent width
  int64_t heads = 4;
  int64_t sft_layers = 2;  // per submodule
  double d_scale = 50.0;
  DecoderConfig decoder;  // k is ignored: the decoder emits a single mode
};

// fusion stack + per-agent Gaussian head shared by posterior and prior
struct GaussianTower {
  FusionStack stack;
  nn::Mlp trunk;       // d -> d
  nn::Linear mu_head;      // d -> d_b
  nn::Linear log_var_head;

  GaussianTower() = default;
  GaussianTower(const CvaeConfig& cfg, Rng& rng);
  GaussianSet forward(const Tensor& z_tokens, const Tensor& m_rpe, int64_t n_agents) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// Posterior network: consumes ground-truth-future tokens next to the observed
// ones; training only.
struct PosteriorNet {
  nn::Linear fuse;  // 2d -> d
  GaussianTower tower;

  PosteriorNet() = default;
  PosteriorNet(const CvaeConfig& cfg, Rng& rng);
  GaussianSet forward(const Tensor& z_gt, const Tensor& z_actor, const Tensor& z_map,
                      const Tensor& m_rpe) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

struct PriorNet {
  GaussianTower tower;

  PriorNet() = default;
  PriorNet(const CvaeConfig& cfg, Rng& rng);
  GaussianSet forward(const Tensor& z_actor, const Tensor& z_map, const Tensor& m_rpe) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// Deterministic decoder: latent-conditioned tokens through a fusion stack,
// then the single-mode Bezier head.
struct CvaeDecoder {
  nn::Linear fuse;  // d + d_b -> d
  FusionStack stack;
  BezierHead head;

  CvaeDecoder() = default;
  CvaeDecoder(const CvaeConfig& cfg, Rng& rng);
  // returns [N_a, T, 2] agent-local trajectory
  Tensor forward(const Tensor& z_actor, const Tensor& z_map, const Tensor& m_rpe,
                 const LatentScene& latent) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// mode == prior_mean/posterior mean pass-through or reparameterized sample
// b = mu + sigma * eps; gradients flow into mu and log_var.
LatentScene sample_latent(const GaussianSet& g, LatentMode mode, Rng& rng);

// KL(q || p) for diagonal Gaussians, summed over latent dims, averaged over
// agents.
Tensor kl_divergence(const GaussianSet& q, const GaussianSet& p);

}  // namespace jointpred::model
