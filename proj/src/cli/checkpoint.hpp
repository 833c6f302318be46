#pragma once

#include <filesystem>

#include "autodiff/adam.hpp"
#include "cli/config.hpp"
#include "nn/layers.hpp"

namespace jointpred::cli {

// Versioned binary container: magic, version, JSON header (config, digest,
// epoch, named shapes, optimizer presence), then raw little-endian f64
// buffers in header order (params, then Adam m, then Adam v). Loading and
// re-saving reproduces the file byte for byte.
struct Checkpoint {
  uint32_t version = 1;
  ExperimentConfig config;
  int64_t epoch = 0;
  std::vector<ad::NamedParam> params;
  bool has_optimizer = false;
  ad::AdamState optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into the model's parameters (matched by name and
// shape). Throws on any mismatch.
void restore_params(const Checkpoint& ckpt, nn::ParamMap& params);

}  // namespace jointpred::cli
