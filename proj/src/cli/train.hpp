#pragma once

#include <filesystem>
#include <vector>

#include "cli/checkpoint.hpp"
#include "model/variants.hpp"
#include "scene/scene.hpp"

namespace jointpred::cli {

struct TrainOptions {
  std::filesystem::path out_dir;
  // stop once the train-split minSADE (K = config k) drops below this; 0
  // disables the probe
  double stop_min_sade = 0.0;
  int64_t eval_every_steps = 100;
  Sampling probe_sampling = Sampling::sample;
};

struct TrainResult {
  int64_t steps = 0;
  int64_t epochs = 0;
  double final_loss = 0.0;
  double final_min_sade = -1.0;  // only when the probe ran
  std::filesystem::path checkpoint_path;
};

// Runs the variant's loop: actor WTA for marginal_recombination, the scene
// loss for the joint decoders, the ELBO with posterior sampling for cvae.
// Deterministic for a fixed config seed. Writes checkpoint.bin every epoch
// and loss_curve.csv with one row per optimizer step. NaN losses abort with
// the step index.
TrainResult train_model(model::PredictionModel& m, const std::vector<scene::Scene>& scenes,
                        const TrainOptions& opts);

}  // namespace jointpred::cli
