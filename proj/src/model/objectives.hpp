#pragma once

#include "model/decoders.hpp"

namespace jointpred::model {

using ad::Tensor;

struct LossWeights {
  double lambda_reg = 1.0;
  double lambda_cls = 0.1;
  double beta = 0.05;       // ELBO only
  double smooth_l1_beta = 1.0;
};

struct LossBreakdown {
  Tensor total;           // taped scalar
  Tensor regression;      // taped scalar
  Tensor classification;  // taped scalar; undefined for ELBO
  Tensor kl;              // taped scalar; ELBO only
  int64_t k_star = -1;    // scene losses; -1 for the per-agent variant
  std::vector<int64_t> k_star_per_agent;  // actor-level WTA
};

// Mean per-step smooth-L1 (summed over x and y) for every (agent, mode):
// shape [N_a, K]. Both WTA losses and their ordering property reduce this one
// matrix, so the min/mean exchange stays exact in floating point.
Tensor per_agent_mode_loss(const Tensor& pred_traj, const Tensor& gt_local, double smooth_l1_beta);

// Per agent, min over modes of the mean step loss, averaged over agents;
// cross-entropy of each agent's scores against its own best mode.
LossBreakdown actor_wta_loss(const ModeSet& pred, const Tensor& gt_local, const LossWeights& w);

// Scene-level winner takes all: agents averaged first, then min over modes;
// cross-entropy of the scene scores against the winning mode.
LossBreakdown scene_wta_loss(const ModeSet& pred, const Tensor& gt_local, const LossWeights& w);

// Reconstruction (single-mode scene regression) plus beta-weighted KL.
LossBreakdown elbo_loss(const Tensor& reconstruction, const Tensor& gt_local, const Tensor& kl,
                        const LossWeights& w);

}  // namespace jointpred::model
