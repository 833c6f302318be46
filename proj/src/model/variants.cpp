#include "model/variants.hpp"

#include <algorithm>
#include <cmath>

#include "joint/recombination.hpp"

namespace jointpred::model {

using namespace ad;

namespace {

BackboneConfig backbone_config(const ExperimentConfig& cfg) {
  BackboneConfig bb;
  bb.d = cfg.d;
  bb.heads = cfg.heads;
  bb.sft_layers = cfg.sft_layers;
  bb.d_scale = cfg.d_scale;
  return bb;
}

DecoderConfig decoder_config(const ExperimentConfig& cfg) {
  DecoderConfig dec;
  dec.d = cfg.d;
  dec.k = cfg.k;
  dec.t = cfg.t;
  dec.degree = cfg.bezier_degree;
  dec.heads = cfg.heads;
  dec.anchor_layers = cfg.l;
  dec.output_scale = cfg.output_scale;
  return dec;
}

CvaeConfig cvae_config(const ExperimentConfig& cfg) {
  CvaeConfig c;
  c.d = cfg.d;
  c.d_b = cfg.d_b;
  c.heads = cfg.heads;
  c.sft_layers = cfg.cvae_sft_layers;
  c.d_scale = cfg.d_scale;
  c.decoder = decoder_config(cfg);
  c.decoder.k = 1;
  return c;
}

// local agent-frame trajectory tensor [N_a, T, 2] -> global points
std::vector<std::vector<scene::Vec2>> to_global(const Tensor& local,
                                                const std::vector<scene::LocalFrame>& frames) {
  const int64_t na = local.dim(0), t = local.dim(1);
  std::vector<std::vector<scene::Vec2>> out(static_cast<size_t>(na),
                                            std::vector<scene::Vec2>(static_cast<size_t>(t)));
  for (int64_t i = 0; i < na; ++i) {
    for (int64_t s = 0; s < t; ++s) {
      const scene::Vec2 p{local.at((i * t + s) * 2), local.at((i * t + s) * 2 + 1)};
      out[static_cast<size_t>(i)][static_cast<size_t>(s)] = frames[static_cast<size_t>(i)].to_global(p);
    }
  }
  return out;
}

}  // namespace

PredictionModel::PredictionModel(const ExperimentConfig& cfg) : cfg_(cfg) {
  weights_.lambda_reg = cfg.lambda_reg;
  weights_.lambda_cls = cfg.lambda_cls;
  weights_.beta = cfg.beta;
  Rng rng(cfg.seed ^ 0x6a09e667f3bcc908ull);
  switch (cfg.variant) {
    case Variant::marginal_recombination:
      backbone_.emplace(backbone_config(cfg), rng);
      marginal_dec_.emplace(decoder_config(cfg), rng);
      break;
    case Variant::joint_loss:
      backbone_.emplace(backbone_config(cfg), rng);
      joint_dec_.emplace(decoder_config(cfg), rng);
      break;
    case Variant::multi_mlp:
      backbone_.emplace(backbone_config(cfg), rng);
      multi_dec_.emplace(decoder_config(cfg), rng);
      break;
    case Variant::anchor_transformer:
      backbone_.emplace(backbone_config(cfg), rng);
      anchor_dec_.emplace(decoder_config(cfg), rng);
      break;
    case Variant::cvae: {
      const CvaeConfig cc = cvae_config(cfg);
      enc_.emplace(cfg.d, rng);
      gt_enc_.emplace(kGtFeatureDim, cfg.d, rng);
      posterior_.emplace(cc, rng);
      prior_.emplace(cc, rng);
      cvae_dec_.emplace(cc, rng);
      break;
    }
  }
}

nn::ParamMap PredictionModel::params() const {
  nn::ParamMap pm;
  if (backbone_) backbone_->collect("backbone", pm);
  if (marginal_dec_) marginal_dec_->collect("decoder", pm);
  if (joint_dec_) joint_dec_->collect("decoder", pm);
  if (multi_dec_) multi_dec_->collect("decoder", pm);
  if (anchor_dec_) anchor_dec_->collect("decoder", pm);
  if (enc_) enc_->collect("encoder", pm);
  if (gt_enc_) gt_enc_->collect("gt_encoder", pm);
  if (posterior_) posterior_->collect("posterior", pm);
  if (prior_) prior_->collect("prior", pm);
  if (cvae_dec_) cvae_dec_->collect("cvae_decoder", pm);
  return pm;
}

ModeSet PredictionModel::forward_scene_modes(const SceneFeatures& f) const {
  BackboneOut bb = backbone_->forward(f);
  switch (cfg_.variant) {
    case Variant::marginal_recombination: return marginal_dec_->forward(bb.z_actor);
    case Variant::joint_loss: return joint_dec_->forward(bb.z_actor);
    case Variant::multi_mlp: return multi_dec_->forward(bb.z_actor);
    case Variant::anchor_transformer: return anchor_dec_->forward(bb.z_actor);
    case Variant::cvae: break;
  }
  throw ValidationError("forward_scene_modes: cvae has no fixed-K decoder");
}

LossBreakdown PredictionModel::training_loss(const SceneFeatures& f, Rng& rng) const {
  if (!f.has_future()) throw ValidationError("training_loss: scene features carry no futures");
  if (cfg_.variant == Variant::cvae) {
    EncoderOut e = enc_->forward(f);
    Tensor z_gt = gt_enc_->forward(f.gt_future);
    GaussianSet q = posterior_->forward(z_gt, e.z_actor, e.z_map, e.m_rpe);
    GaussianSet p = prior_->forward(e.z_actor, e.z_map, e.m_rpe);
    LatentScene latent = sample_latent(q, LatentMode::posterior_sample, rng);
    Tensor recon = cvae_dec_->forward(e.z_actor, e.z_map, e.m_rpe, latent);
    Tensor kl = kl_divergence(q, p);
    return elbo_loss(recon, f.gt_local, kl, weights_);
  }
  ModeSet modes = forward_scene_modes(f);
  if (cfg_.variant == Variant::marginal_recombination) {
    return actor_wta_loss(modes, f.gt_local, weights_);
  }
  return scene_wta_loss(modes, f.gt_local, weights_);
}

MarginalPrediction PredictionModel::predict_marginal(const SceneFeatures& f) const {
  if (cfg_.variant != Variant::marginal_recombination) {
    throw ValidationError("predict_marginal: only the marginal_recombination variant emits marginal modes");
  }
  NoGradGuard ng;
  ModeSet modes = forward_scene_modes(f);
  Tensor probs = softmax(modes.logits);  // [N_a, K]
  MarginalPrediction out;
  out.agent_ids = f.agent_ids;
  const int64_t na = modes.n_agents(), k = modes.k(), t = modes.t();
  out.scores.resize(static_cast<size_t>(na));
  out.traj.resize(static_cast<size_t>(na));
  for (int64_t i = 0; i < na; ++i) {
    auto& rows = out.scores[static_cast<size_t>(i)];
    rows.resize(static_cast<size_t>(k));
    for (int64_t m = 0; m < k; ++m) rows[static_cast<size_t>(m)] = probs.at(i * k + m);
    auto& tr = out.traj[static_cast<size_t>(i)];
    tr.resize(static_cast<size_t>(k), std::vector<scene::Vec2>(static_cast<size_t>(t)));
    for (int64_t m = 0; m < k; ++m) {
      for (int64_t s = 0; s < t; ++s) {
        const scene::Vec2 p{modes.traj.at(((i * k + m) * t + s) * 2),
                            modes.traj.at(((i * k + m) * t + s) * 2 + 1)};
        tr[static_cast<size_t>(m)][static_cast<size_t>(s)] =
            f.agent_frames[static_cast<size_t>(i)].to_global(p);
      }
    }
  }
  return out;
}

eval::ScenePrediction PredictionModel::predict(const SceneFeatures& f, int64_t k, Sampling sampling,
                                               Rng& rng) const {
  if (k <= 0) throw ValidationError("predict: k must be positive");
  if (sampling == Sampling::prior_mean_first && cfg_.variant != Variant::cvae) {
    throw ValidationError("predict: prior-mean-first sampling requires the cvae variant");
  }
  NoGradGuard ng;
  eval::ScenePrediction out;

  if (cfg_.variant == Variant::cvae) {
    EncoderOut e = enc_->forward(f);
    GaussianSet p = prior_->forward(e.z_actor, e.z_map, e.m_rpe);
    out.scores.assign(static_cast<size_t>(k), 1.0 / static_cast<double>(k));
    for (int64_t m = 0; m < k; ++m) {
      const LatentMode lm = (sampling == Sampling::prior_mean_first && m == 0)
                                ? LatentMode::prior_mean
                                : LatentMode::prior_sample;
      LatentScene latent = sample_latent(p, lm, rng);
      Tensor traj = cvae_dec_->forward(e.z_actor, e.z_map, e.m_rpe, latent);
      out.traj.push_back(to_global(traj, f.agent_frames));
    }
    return out;
  }

  if (cfg_.variant == Variant::marginal_recombination) {
    MarginalPrediction marginal = predict_marginal(f);
    auto joint = joint::recombine_beam(marginal.scores, k);
    for (const auto& jm : joint) {
      out.scores.push_back(jm.score);
      std::vector<std::vector<scene::Vec2>> mode;
      for (size_t i = 0; i < marginal.traj.size(); ++i) {
        mode.push_back(marginal.traj[i][static_cast<size_t>(jm.mode_per_agent[i])]);
      }
      out.traj.push_back(std::move(mode));
    }
    return out;
  }

  // scene-level decoders emit exactly cfg_.k modes
  if (k > cfg_.k) {
    throw ValidationError("predict: requested " + std::to_string(k) + " modes but the decoder emits " +
                          std::to_string(cfg_.k));
  }
  ModeSet modes = forward_scene_modes(f);
  Tensor probs = softmax(modes.logits);  // [K]
  std::vector<int64_t> order(static_cast<size_t>(cfg_.k));
  for (int64_t i = 0; i < cfg_.k; ++i) order[static_cast<size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t a, int64_t b) { return probs.at(a) > probs.at(b); });
  order.resize(static_cast<size_t>(k));
  double total = 0.0;
  for (int64_t m : order) total += probs.at(m);
  const int64_t na = modes.n_agents(), t = modes.t();
  for (int64_t m : order) {
    out.scores.push_back(probs.at(m) / total);
    std::vector<double> local(static_cast<size_t>(na * t * 2));
    for (int64_t i = 0; i < na; ++i) {
      for (int64_t s = 0; s < t; ++s) {
        local[static_cast<size_t>((i * t + s) * 2)] = modes.traj.at(((i * cfg_.k + m) * t + s) * 2);
        local[static_cast<size_t>((i * t + s) * 2 + 1)] = modes.traj.at(((i * cfg_.k + m) * t + s) * 2 + 1);
      }
    }
    out.traj.push_back(to_global(Tensor::from({na, t, 2}, std::move(local)), f.agent_frames));
  }
  return out;
}

Tensor PredictionModel::cvae_decode_latent(const SceneFeatures& f, LatentMode mode, Rng& rng) const {
  if (cfg_.variant != Variant::cvae) throw ValidationError("cvae_decode_latent: not a cvae model");
  NoGradGuard ng;
  EncoderOut e = enc_->forward(f);
  GaussianSet dist;
  if (mode == LatentMode::posterior_sample) {
    if (!f.has_future()) throw ValidationError("cvae_decode_latent: posterior path needs futures");
    Tensor z_gt = gt_enc_->forward(f.gt_future);
    dist = posterior_->forward(z_gt, e.z_actor, e.z_map, e.m_rpe);
  } else {
    dist = prior_->forward(e.z_actor, e.z_map, e.m_rpe);
  }
  LatentScene latent = sample_latent(dist, mode, rng);
  return cvae_dec_->forward(e.z_actor, e.z_map, e.m_rpe, latent);
}

double PredictionModel::mean_kl(const SceneFeatures& f) const {
  if (cfg_.variant != Variant::cvae) throw ValidationError("mean_kl: not a cvae model");
  if (!f.has_future()) throw ValidationError("mean_kl: needs futures for the posterior");
  NoGradGuard ng;
  EncoderOut e = enc_->forward(f);
  Tensor z_gt = gt_enc_->forward(f.gt_future);
  GaussianSet q = posterior_->forward(z_gt, e.z_actor, e.z_map, e.m_rpe);
  GaussianSet p = prior_->forward(e.z_actor, e.z_map, e.m_rpe);
  return kl_divergence(q, p).item();
}

}  // namespace jointpred::model
