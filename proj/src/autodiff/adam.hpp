#pragma once

#include <string>
#include <vector>

#include "autodiff/tensor.hpp"

namespace jointpred::ad {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

// Adam with bias correction. Moment buffers are keyed by position in the
// parameter list, which must stay stable across steps.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  bool initialized() const { return !m.empty(); }
};

// One update over all params using their accumulated .grad() buffers.
// Throws NumericError naming the parameter on a non-finite gradient.
void adam_step(std::vector<NamedParam>& params, AdamState& state, double lr);

// Piecewise-exponential decay: interpolates from initial_lr to final_lr in
// log space over decay_epochs, then stays at final_lr.
struct LrSchedule {
  double initial_lr = 1e-3;
  double final_lr = 1e-4;
  int64_t decay_epochs = 40;

  double at_epoch(int64_t epoch) const;  // 1-indexed
};

}  // namespace jointpred::ad
