#include "cli/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "eval/metrics.hpp"

namespace jointpred::cli {

using model::PredictionModel;
using model::SceneFeatures;

namespace {

double probe_min_sade(const PredictionModel& m, const std::vector<scene::Scene>& scenes,
                      const std::vector<SceneFeatures>& features, Rng& base, Sampling sampling) {
  double acc = 0.0;
  for (size_t i = 0; i < scenes.size(); ++i) {
    Rng rng = base.fork(i);
    eval::ScenePrediction pred = m.predict(features[i], m.config().k, sampling, rng);
    eval::GroundTruth gt;
    for (const auto& a : scenes[i].agents) gt.push_back(a.future);
    acc += eval::min_scene_metrics(pred, gt).min_sade;
  }
  return acc / static_cast<double>(scenes.size());
}

}  // namespace

TrainResult train_model(PredictionModel& m, const std::vector<scene::Scene>& scenes,
                        const TrainOptions& opts) {
  const ExperimentConfig& cfg = m.config();
  if (scenes.empty()) throw ValidationError("train: empty dataset");
  for (const scene::Scene& sc : scenes) {
    if (!sc.has_futures()) throw ValidationError("train: scene " + sc.id + " has no futures");
  }
  std::filesystem::create_directories(opts.out_dir);

  std::vector<SceneFeatures> features;
  features.reserve(scenes.size());
  for (const scene::Scene& sc : scenes) features.push_back(m.featurize_scene(sc));

  nn::ParamMap pm = m.params();
  for (auto& p : pm.items) p.tensor.zero_grad();
  ad::AdamState opt_state;

  Rng order_rng(cfg.seed ^ 0xbb67ae8584caa73bull);
  Rng latent_rng(cfg.seed ^ 0x3c6ef372fe94f82bull);
  Rng probe_rng(cfg.seed ^ 0xa54ff53a5f1d36f1ull);

  std::ofstream curve(opts.out_dir / "loss_curve.csv", std::ios::binary);
  if (!curve) throw ValidationError("train: cannot write loss curve in " + opts.out_dir.string());
  curve << "step,epoch,lr,total,regression,classification,kl\n";

  TrainResult result;
  result.checkpoint_path = opts.out_dir / "checkpoint.bin";

  auto write_ckpt = [&](int64_t epoch) {
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.epoch = epoch;
    ckpt.params = pm.items;
    ckpt.has_optimizer = opt_state.initialized();
    ckpt.optimizer = opt_state;
    save_checkpoint(result.checkpoint_path, ckpt);
  };

  if (cfg.epochs == 0) {  // checkpoint of the initial weights, empty curve
    write_ckpt(0);
    return result;
  }

  std::vector<size_t> order(scenes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int64_t step = 0;
  bool done = false;
  char row[256];
  for (int64_t epoch = 1; epoch <= cfg.epochs && !done; ++epoch) {
    // deterministic shuffle
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<size_t>(order_rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
    }
    const double lr = cfg.lr.at_epoch(epoch);
    for (size_t base = 0; base < order.size() && !done; base += static_cast<size_t>(cfg.batch_size)) {
      const size_t batch_end = std::min(order.size(), base + static_cast<size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(batch_end - base);
      double total = 0.0, reg = 0.0, cls = 0.0, kl = 0.0;
      for (size_t bi = base; bi < batch_end; ++bi) {
        const SceneFeatures& f = features[order[bi]];
        model::LossBreakdown lb = m.training_loss(f, latent_rng);
        const double lv = lb.total.item();
        if (!std::isfinite(lv)) {
          throw NumericError("train: non-finite loss at step " + std::to_string(step + 1));
        }
        total += lv * inv_batch;
        reg += lb.regression.item() * inv_batch;
        if (lb.classification.defined()) cls += lb.classification.item() * inv_batch;
        if (lb.kl.defined()) kl += lb.kl.item() * inv_batch;
        ad::backward(ad::mul(lb.total, ad::Tensor::scalar(inv_batch)));
      }
      ad::adam_step(pm.items, opt_state, lr);
      for (auto& p : pm.items) p.tensor.zero_grad();
      ++step;
      std::snprintf(row, sizeof(row), "%lld,%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    static_cast<long long>(step), static_cast<long long>(epoch), lr, total, reg, cls, kl);
      curve << row;
      result.final_loss = total;

      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
      if (!done && opts.stop_min_sade > 0.0 && opts.eval_every_steps > 0 &&
          step % opts.eval_every_steps == 0) {
        const double sade = probe_min_sade(m, scenes, features, probe_rng, opts.probe_sampling);
        result.final_min_sade = sade;
        if (sade < opts.stop_min_sade) done = true;
      }
    }
    result.epochs = epoch;
    write_ckpt(epoch);
  }
  result.steps = step;
  return result;
}

}  // namespace jointpred::cli
