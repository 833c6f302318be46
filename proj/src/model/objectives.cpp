#include "model/objectives.hpp"

#include "nn/layers.hpp"

namespace jointpred::model {

using namespace ad;

Tensor per_agent_mode_loss(const Tensor& pred_traj, const Tensor& gt_local, double smooth_l1_beta) {
  if (pred_traj.rank() != 4) {
    throw ShapeError("per_agent_mode_loss: predictions must be [N_a, K, T, 2], got " +
                     shape_str(pred_traj.shape()));
  }
  const int64_t na = pred_traj.dim(0), k = pred_traj.dim(1), t = pred_traj.dim(2);
  if (k == 0) throw ShapeError("per_agent_mode_loss: needs at least one mode");
  if (gt_local.shape() != Shape{na, t, 2}) {
    throw ShapeError("per_agent_mode_loss: ground truth " + shape_str(gt_local.shape()) +
                     " does not match predictions " + shape_str(pred_traj.shape()));
  }
  // tile ground truth over modes: [N_a, K, T, 2]
  Tensor gt_rows = reshape(gt_local, {na, 1, t, 2});
  Tensor gt_k = k == 1 ? gt_rows : concat(std::vector<Tensor>(static_cast<size_t>(k), gt_rows), 1);
  Tensor sl = smooth_l1(pred_traj, gt_k, smooth_l1_beta);
  Tensor per = reduce_sum(reshape(sl, {na * k, t * 2}), 1);
  return reshape(mul(per, Tensor::scalar(1.0 / static_cast<double>(t))), {na, k});
}

LossBreakdown actor_wta_loss(const ModeSet& pred, const Tensor& gt_local, const LossWeights& w) {
  if (pred.scene_level) throw ValidationError("actor_wta_loss: expected a marginal mode set");
  Tensor m = per_agent_mode_loss(pred.traj, gt_local, w.smooth_l1_beta);
  const int64_t na = m.dim(0);
  LossBreakdown out;
  out.k_star_per_agent = argmin_axis(m, 1);

  std::vector<Tensor> selected;
  std::vector<Tensor> ce_terms;
  for (int64_t i = 0; i < na; ++i) {
    const int64_t ki = out.k_star_per_agent[static_cast<size_t>(i)];
    Tensor row = reshape(slice(m, 0, i, 1), {m.dim(1)});
    selected.push_back(slice(row, 0, ki, 1));
    Tensor logit_row = reshape(slice(pred.logits, 0, i, 1), {pred.logits.dim(1)});
    ce_terms.push_back(reshape(nn::cross_entropy(logit_row, ki), {1}));
  }
  const double inv_na = 1.0 / static_cast<double>(na);
  out.regression = mul(reduce_sum(concat(selected, 0)), Tensor::scalar(inv_na));
  out.classification = mul(reduce_sum(concat(ce_terms, 0)), Tensor::scalar(inv_na));
  out.total = add(mul(out.regression, Tensor::scalar(w.lambda_reg)),
                  mul(out.classification, Tensor::scalar(w.lambda_cls)));
  return out;
}

LossBreakdown scene_wta_loss(const ModeSet& pred, const Tensor& gt_local, const LossWeights& w) {
  if (!pred.scene_level) throw ValidationError("scene_wta_loss: expected a scene-level mode set");
  Tensor m = per_agent_mode_loss(pred.traj, gt_local, w.smooth_l1_beta);
  const int64_t na = m.dim(0);
  // per-mode scene regression: same summation order and divisor as the
  // actor-level path so min/mean ordering is exact
  Tensor per_mode = mul(reduce_sum(m, 0), Tensor::scalar(1.0 / static_cast<double>(na)));  // [K]
  LossBreakdown out;
  out.k_star = argmin(per_mode);
  out.regression = reshape(slice(per_mode, 0, out.k_star, 1), {});
  out.classification = nn::cross_entropy(pred.logits, out.k_star);
  out.total = add(mul(out.regression, Tensor::scalar(w.lambda_reg)),
                  mul(out.classification, Tensor::scalar(w.lambda_cls)));
  return out;
}

LossBreakdown elbo_loss(const Tensor& reconstruction, const Tensor& gt_local, const Tensor& kl,
                        const LossWeights& w) {
  if (reconstruction.rank() != 3) {
    throw ShapeError("elbo_loss: reconstruction must be [N_a, T, 2], got " +
                     shape_str(reconstruction.shape()));
  }
  const int64_t na = reconstruction.dim(0), t = reconstruction.dim(1);
  Tensor as_modes = reshape(reconstruction, {na, 1, t, 2});
  Tensor m = per_agent_mode_loss(as_modes, gt_local, w.smooth_l1_beta);
  Tensor per_mode = mul(reduce_sum(m, 0), Tensor::scalar(1.0 / static_cast<double>(na)));
  LossBreakdown out;
  out.k_star = 0;
  out.regression = reshape(per_mode, {});
  out.kl = kl;
  out.total = add(out.regression, mul(kl, Tensor::scalar(w.beta)));
  return out;
}

}  // namespace jointpred::model
