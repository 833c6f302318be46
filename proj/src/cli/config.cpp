#include "cli/config.hpp"

#include <fstream>

namespace jointpred::cli {

using nlohmann::json;

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::marginal_recombination: return "marginal_recombination";
    case Variant::joint_loss: return "joint_loss";
    case Variant::multi_mlp: return "multi_mlp";
    case Variant::anchor_transformer: return "anchor_transformer";
    case Variant::cvae: return "cvae";
  }
  return "marginal_recombination";
}

Variant variant_from_name(const std::string& name) {
  if (name == "marginal_recombination") return Variant::marginal_recombination;
  if (name == "joint_loss") return Variant::joint_loss;
  if (name == "multi_mlp") return Variant::multi_mlp;
  if (name == "anchor_transformer") return Variant::anchor_transformer;
  if (name == "cvae") return Variant::cvae;
  throw ValidationError("unknown variant: " + name);
}

const char* sampling_name(Sampling s) {
  return s == Sampling::sample ? "sample" : "prior-mean-first";
}

Sampling sampling_from_name(const std::string& name) {
  if (name == "sample") return Sampling::sample;
  if (name == "prior-mean-first" || name == "prior_mean_first") return Sampling::prior_mean_first;
  throw ValidationError("unknown sampling mode: " + name + " (expected sample or prior-mean-first)");
}

void apply_preset(ExperimentConfig& cfg, const std::string& preset) {
  if (preset == "desk") {
    cfg.d = 32;
    cfg.heads = 4;
    cfg.sft_layers = 4;
    cfg.t_p = 20;
    cfg.t = 30;
    cfg.d_b = 32;
  } else if (preset == "paper") {
    cfg.d = 128;
    cfg.heads = 4;
    cfg.sft_layers = 4;
    cfg.t_p = 50;
    cfg.t = 60;
    cfg.d_b = 32;
  } else {
    throw ValidationError("unknown preset: " + preset + " (expected desk or paper)");
  }
  cfg.preset = preset;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["variant"] = variant_name(cfg.variant);
  j["preset"] = cfg.preset;
  j["d"] = cfg.d;
  j["heads"] = cfg.heads;
  j["sft_layers"] = cfg.sft_layers;
  j["cvae_sft_layers"] = cfg.cvae_sft_layers;
  j["k"] = cfg.k;
  if (cfg.variant == Variant::anchor_transformer) j["l"] = cfg.l;
  if (cfg.variant == Variant::cvae) {
    j["d_b"] = cfg.d_b;
    j["beta"] = cfg.beta;
  }
  j["bezier_degree"] = cfg.bezier_degree;
  j["output_scale"] = cfg.output_scale;
  j["d_scale"] = cfg.d_scale;
  j["t_p"] = cfg.t_p;
  j["t"] = cfg.t;
  j["dt"] = cfg.dt;
  j["lambda_reg"] = cfg.lambda_reg;
  j["lambda_cls"] = cfg.lambda_cls;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  if (cfg.max_steps > 0) j["max_steps"] = cfg.max_steps;
  j["lr"] = {{"initial", cfg.lr.initial_lr}, {"final", cfg.lr.final_lr}, {"decay_epochs", cfg.lr.decay_epochs}};
  j["seed"] = cfg.seed;
  j["miss_threshold"] = cfg.miss_threshold;
  if (!cfg.data_dir.empty()) j["data_dir"] = cfg.data_dir;
  j["split"] = cfg.split;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    cfg.variant = variant_from_name(j.at("variant").get<std::string>());
    if (j.contains("preset")) apply_preset(cfg, j.at("preset").get<std::string>());

    if (j.contains("beta") && cfg.variant != Variant::cvae) {
      throw ValidationError("config: beta is only valid for the cvae variant");
    }
    if (j.contains("d_b") && cfg.variant != Variant::cvae) {
      throw ValidationError("config: d_b is only valid for the cvae variant");
    }
    if (j.contains("l") && cfg.variant != Variant::anchor_transformer) {
      throw ValidationError("config: l is only valid for the anchor_transformer variant");
    }

    auto opt_i64 = [&](const char* key, int64_t& slot) {
      if (j.contains(key)) slot = j.at(key).get<int64_t>();
    };
    auto opt_f64 = [&](const char* key, double& slot) {
      if (j.contains(key)) slot = j.at(key).get<double>();
    };
    opt_i64("d", cfg.d);
    opt_i64("heads", cfg.heads);
    opt_i64("sft_layers", cfg.sft_layers);
    opt_i64("cvae_sft_layers", cfg.cvae_sft_layers);
    opt_i64("k", cfg.k);
    opt_i64("l", cfg.l);
    opt_i64("d_b", cfg.d_b);
    opt_i64("bezier_degree", cfg.bezier_degree);
    opt_f64("output_scale", cfg.output_scale);
    opt_f64("d_scale", cfg.d_scale);
    opt_i64("t_p", cfg.t_p);
    opt_i64("t", cfg.t);
    opt_f64("dt", cfg.dt);
    opt_f64("beta", cfg.beta);
    opt_f64("lambda_reg", cfg.lambda_reg);
    opt_f64("lambda_cls", cfg.lambda_cls);
    opt_i64("epochs", cfg.epochs);
    opt_i64("batch_size", cfg.batch_size);
    opt_i64("max_steps", cfg.max_steps);
    if (j.contains("lr")) {
      const json& lr = j.at("lr");
      if (lr.contains("initial")) cfg.lr.initial_lr = lr.at("initial").get<double>();
      if (lr.contains("final")) cfg.lr.final_lr = lr.at("final").get<double>();
      if (lr.contains("decay_epochs")) cfg.lr.decay_epochs = lr.at("decay_epochs").get<int64_t>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    opt_f64("miss_threshold", cfg.miss_threshold);
    if (j.contains("data_dir")) cfg.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("split")) cfg.split = j.at("split").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  if (cfg.d <= 0 || cfg.k <= 0 || cfg.t <= 0 || cfg.t_p <= 0) {
    throw ValidationError("config: d, k, t and t_p must be positive");
  }
  if (cfg.d % cfg.heads != 0) throw ValidationError("config: d must be divisible by heads");
  if (cfg.batch_size <= 0) throw ValidationError("config: batch_size must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("malformed config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_digest(const ExperimentConfig& cfg) {
  const std::string canonical = config_to_json(cfg).dump();
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace jointpred::cli
