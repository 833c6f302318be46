#pragma once

#include <optional>

#include "cli/config.hpp"
#include "eval/metrics.hpp"
#include "model/backbone.hpp"
#include "model/decoders.hpp"
#include "model/generative.hpp"
#include "model/objectives.hpp"

namespace jointpred::model {

using cli::ExperimentConfig;
using cli::Sampling;
using cli::Variant;

// Marginal per-agent modes in the global frame; input to the recombination
// interface and the marginal prediction file format.
struct MarginalPrediction {
  std::vector<int64_t> agent_ids;
  std::vector<std::vector<double>> scores;                  // [N_a][K], rows sum to 1
  std::vector<std::vector<std::vector<scene::Vec2>>> traj;  // [N_a][K][T]
};

// One of the five model variants behind a single train/predict surface.
class PredictionModel {
 public:
  explicit PredictionModel(const ExperimentConfig& cfg);

  const ExperimentConfig& config() const { return cfg_; }
  nn::ParamMap params() const;

  SceneFeatures featurize_scene(const scene::Scene& sc) const {
    return featurize(sc, cfg_.d_scale);
  }

  // taped loss for one scene; rng feeds the CVAE posterior sampling
  LossBreakdown training_loss(const SceneFeatures& f, Rng& rng) const;

  // K joint modes in global coordinates, scores renormalized over the set,
  // sorted by descending score (CVAE keeps sampling order; with
  // prior-mean-first the mean-conditioned mode is first).
  eval::ScenePrediction predict(const SceneFeatures& f, int64_t k, Sampling sampling, Rng& rng) const;

  // raw marginal modes; marginal_recombination only
  MarginalPrediction predict_marginal(const SceneFeatures& f) const;

  // ---- CVAE experiment hooks ----
  // decode conditioned on a latent drawn per `mode`; local-frame output
  Tensor cvae_decode_latent(const SceneFeatures& f, LatentMode mode, Rng& rng) const;
  double mean_kl(const SceneFeatures& f) const;

 private:
  ModeSet forward_scene_modes(const SceneFeatures& f) const;  // variants 1-4

  ExperimentConfig cfg_;
  LossWeights weights_;

  std::optional<Backbone> backbone_;
  std::optional<MarginalDecoder> marginal_dec_;
  std::optional<JointSplitDecoder> joint_dec_;
  std::optional<MultiMlpDecoder> multi_dec_;
  std::optional<AnchorTransformerDecoder> anchor_dec_;

  std::optional<EncoderSet> enc_;
  std::optional<TrackEncoder> gt_enc_;
  std::optional<PosteriorNet> posterior_;
  std::optional<PriorNet> prior_;
  std::optional<CvaeDecoder> cvae_dec_;
};

}  // namespace jointpred::model
