#pragma once

#include <string>
#include <vector>

#include "autodiff/adam.hpp"
#include "autodiff/tensor.hpp"
#include "common/rng.hpp"

namespace jointpred::nn {

using ad::Tensor;

// Collects named parameters in registration order for the optimizer and
// checkpoint writer. Names form a path, e.g. "backbone.sft.0.ffn.l0.w".
struct ParamMap {
  std::vector<ad::NamedParam> items;
  void add(const std::string& name, const Tensor& t) { items.push_back({name, t}); }
};

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [out]

  Linear() = default;
  Linear(int64_t in, int64_t out, Rng& rng);

  // x: [..., in] (rank 2 or 3) -> [..., out]
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// Fully connected stack with relu between layers, linear output.
struct Mlp {
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(const std::vector<int64_t>& widths, Rng& rng);

  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// layer_norm with learned affine over the last axis.
struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  explicit LayerNorm(int64_t width);

  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamMap& out) const;
};

// ---- shape helpers ----

// t -> [copies, ...t.shape] by stacking the same tensor; gradient sums over
// the new axis.
Tensor expand_front(const Tensor& t, int64_t copies);

// row-major stack of equal-shape tensors along a new leading axis
Tensor stack_front(const std::vector<Tensor>& parts);

// numerically stable log(sum(exp(x))) over the last axis
Tensor logsumexp(const Tensor& x);

// -log softmax(logits)[index]; logits rank 1
Tensor cross_entropy(const Tensor& logits, int64_t target_index);

}  // namespace jointpred::nn
