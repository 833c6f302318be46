#include "autodiff/adam.hpp"

#include <cmath>

namespace jointpred::ad {

void adam_step(std::vector<NamedParam>& params, AdamState& state, double lr) {
  if (!state.initialized()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      const size_t n = params[i].tensor.values().size();
      state.m[i].assign(n, 0.0);
      state.v[i].assign(n, 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw ValidationError("adam_step: state holds " + std::to_string(state.m.size()) + " buffers for " +
                          std::to_string(params.size()) + " parameters");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    NamedParam& p = params[i];
    const std::vector<double>& g = p.tensor.grad();
    std::vector<double>& x = p.tensor.mutable_values();
    if (state.m[i].size() != x.size()) {
      throw ValidationError("adam_step: moment buffer shape drifted for parameter " + p.name);
    }
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (size_t j = 0; j < x.size(); ++j) {
      const double gj = g[j];
      if (!std::isfinite(gj)) {
        throw NumericError("adam_step: non-finite gradient in parameter " + p.name + " at index " +
                           std::to_string(j));
      }
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      x[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double LrSchedule::at_epoch(int64_t epoch) const {
  if (decay_epochs <= 0) return initial_lr;
  const int64_t e = std::max<int64_t>(epoch, 1);
  const double frac = static_cast<double>(std::min(e - 1, decay_epochs)) / static_cast<double>(decay_epochs);
  return initial_lr * std::pow(final_lr / initial_lr, frac);
}

}  // namespace jointpred::ad
