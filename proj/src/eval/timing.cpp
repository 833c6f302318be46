#include "eval/timing.hpp"

#include <array>
#include <cmath>

namespace jointpred::eval {

TimingModel fit_timing_model(const std::vector<TimingSample>& samples) {
  if (samples.size() < 3) {
    throw ValidationError("fit_timing_model: need at least 3 samples, got " +
                          std::to_string(samples.size()));
  }
  // normal equations for X = [1, n_agents, n_lanes]
  std::array<std::array<double, 4>, 3> m{};  // augmented [XtX | Xty]
  for (const TimingSample& s : samples) {
    const std::array<double, 3> x{1.0, static_cast<double>(s.n_agents), static_cast<double>(s.n_lanes)};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r][c] += x[r] * x[c];
      m[r][3] += x[r] * s.ms;
    }
  }
  // Gaussian elimination with partial pivoting
  const double scale = m[0][0];  // = n samples, used for the rank tolerance
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-9 * std::max(1.0, scale)) {
      throw ValidationError("fit_timing_model: rank-deficient design (agents/lanes do not vary independently)");
    }
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  TimingModel out;
  out.gamma0 = m[0][3] / m[0][0];
  out.gamma_agent = m[1][3] / m[1][1];
  out.gamma_lane = m[2][3] / m[2][2];

  double mean = 0.0;
  for (const TimingSample& s : samples) mean += s.ms;
  mean /= static_cast<double>(samples.size());
  double sst = 0.0, ssr = 0.0;
  for (const TimingSample& s : samples) {
    const double pred = out.predict(s.n_agents, s.n_lanes);
    sst += (s.ms - mean) * (s.ms - mean);
    ssr += (s.ms - pred) * (s.ms - pred);
  }
  out.r_squared = sst == 0.0 ? 0.0 : 1.0 - ssr / sst;
  return out;
}

}  // namespace jointpred::eval
