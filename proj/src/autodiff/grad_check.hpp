#pragma once

#include <functional>

#include "autodiff/adam.hpp"
#include "autodiff/tensor.hpp"

namespace jointpred::ad {

// Central-difference check of reverse-mode gradients.
// Returns max over coordinates of |analytic - numeric| / max(1, |analytic|).
// Throws NumericError on non-finite function values.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-5);

// Same check for a closure over several leaf tensors (model parameters,
// inputs). Perturbs each listed leaf in place; max_coords caps the number of
// coordinates probed per leaf (<=0 means all), stepping evenly through the
// buffer so large tensors still get spread-out coverage.
double grad_check_multi(const std::function<Tensor()>& f, const std::vector<NamedParam>& leaves,
                        double h = 1e-5, int64_t max_coords = -1, std::string* worst_leaf = nullptr);

}  // namespace jointpred::ad
