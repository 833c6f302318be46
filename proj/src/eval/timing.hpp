#pragma once

#include <cstdint>
#include <vector>

#include "common/errors.hpp"

namespace jointpred::eval {

struct TimingSample {
  int64_t n_agents = 0;
  int64_t n_lanes = 0;
  double ms = 0.0;
};

// elapsed = gamma0 + gamma_agent * N_a + gamma_lane * N_l
struct TimingModel {
  double gamma0 = 0.0;
  double gamma_agent = 0.0;
  double gamma_lane = 0.0;
  double r_squared = 0.0;

  double predict(int64_t n_agents, int64_t n_lanes) const {
    return gamma0 + gamma_agent * static_cast<double>(n_agents) + gamma_lane * static_cast<double>(n_lanes);
  }
};

// Ordinary least squares with intercept. Needs >= 3 samples spanning both
// regressors; throws on a rank-deficient design. Constant responses report
// R^2 = 0 by convention.
TimingModel fit_timing_model(const std::vector<TimingSample>& samples);

}  // namespace jointpred::eval
