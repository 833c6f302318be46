#pragma once

#include <string>

#include <json.hpp>

#include "autodiff/adam.hpp"
#include "common/errors.hpp"

namespace jointpred::cli {

enum class Variant { marginal_recombination, joint_loss, multi_mlp, anchor_transformer, cvae };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

enum class Sampling { sample, prior_mean_first };

const char* sampling_name(Sampling s);
Sampling sampling_from_name(const std::string& name);

struct ExperimentConfig {
  Variant variant = Variant::marginal_recombination;
  std::string preset = "desk";

  // model dims
  int64_t d = 32;
  int64_t heads = 4;
  int64_t sft_layers = 4;     // backbone depth (deterministic variants)
  int64_t cvae_sft_layers = 2;  // per CVAE submodule
  int64_t k = 6;
  int64_t l = 2;      // anchor decoder layers; anchor_transformer only
  int64_t d_b = 32;   // latent width; cvae only
  int64_t bezier_degree = 5;
  double output_scale = 10.0;
  double d_scale = 50.0;

  // horizons
  int64_t t_p = 20;
  int64_t t = 30;
  double dt = 0.1;

  // losses
  double beta = 0.05;  // cvae only
  double lambda_reg = 1.0;
  double lambda_cls = 0.1;

  // training
  int64_t epochs = 50;
  int64_t batch_size = 16;
  int64_t max_steps = 0;  // 0 = epochs decide
  ad::LrSchedule lr;
  uint64_t seed = 0;

  // evaluation
  double miss_threshold = 2.0;

  // data
  std::string data_dir;
  std::string split = "train";
};

// named presets: "desk" (default, fast) and "paper" (full-scale dims)
void apply_preset(ExperimentConfig& cfg, const std::string& preset);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
// Validates variant-specific fields: beta may only appear for cvae configs,
// l only for anchor_transformer.
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical JSON form; embedded in outputs for provenance.
std::string config_digest(const ExperimentConfig& cfg);

}  // namespace jointpred::cli
