#include "nn/layers.hpp"

#include <cmath>

namespace jointpred::nn {

using namespace ad;

Linear::Linear(int64_t in, int64_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> wd(static_cast<size_t>(in * out));
  for (double& v : wd) v = rng.uniform(-bound, bound);
  w = Tensor::param({in, out}, std::move(wd));
  // small nonzero bias: zero-filled masked inputs would otherwise park
  // pre-activations exactly on the relu kink
  std::vector<double> bd(static_cast<size_t>(out));
  for (double& v : bd) v = rng.uniform(-0.05, 0.05);
  b = Tensor::param({out}, std::move(bd));
}

Tensor Linear::forward(const Tensor& x) const {
  return add(matmul(x, w), b);
}

void Linear::collect(const std::string& prefix, ParamMap& out) const {
  out.add(prefix + ".w", w);
  out.add(prefix + ".b", b);
}

Mlp::Mlp(const std::vector<int64_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw ValidationError("Mlp: need at least input and output widths");
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.emplace_back(widths[i], widths[i + 1], rng);
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

void Mlp::collect(const std::string& prefix, ParamMap& out) const {
  for (size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(prefix + ".l" + std::to_string(i), out);
  }
}

LayerNorm::LayerNorm(int64_t width) {
  gamma = Tensor::param({width}, std::vector<double>(static_cast<size_t>(width), 1.0));
  beta = Tensor::param({width}, std::vector<double>(static_cast<size_t>(width), 0.0));
}

Tensor LayerNorm::forward(const Tensor& x) const {
  // broadcast of gamma over leading axes is the trailing-vector mul
  Tensor normed = layer_norm(x);
  const int64_t width = gamma.dim(0);
  if (x.shape().back() != width) {
    throw ShapeError("LayerNorm: input width " + std::to_string(x.shape().back()) + " != " +
                     std::to_string(width));
  }
  // mul has no trailing-vector broadcast; tile gamma across rows instead
  const int64_t rows = x.size() / width;
  Tensor g = gamma;
  Tensor bta = beta;
  if (rows > 1) {
    g = reshape(expand_front(gamma, rows), x.shape());
    bta = reshape(expand_front(beta, rows), x.shape());
  } else {
    g = reshape(gamma, x.shape());
    bta = reshape(beta, x.shape());
  }
  return add(mul(normed, g), bta);
}

void LayerNorm::collect(const std::string& prefix, ParamMap& out) const {
  out.add(prefix + ".gamma", gamma);
  out.add(prefix + ".beta", beta);
}

Tensor expand_front(const Tensor& t, int64_t copies) {
  if (copies <= 0) throw ShapeError("expand_front: copies must be positive");
  Shape s1 = t.shape();
  s1.insert(s1.begin(), 1);
  Tensor row = reshape(t, s1);
  if (copies == 1) return row;
  std::vector<Tensor> parts(static_cast<size_t>(copies), row);
  return concat(parts, 0);
}

Tensor stack_front(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("stack_front: no inputs");
  std::vector<Tensor> rows;
  rows.reserve(parts.size());
  for (const Tensor& p : parts) {
    Shape s1 = p.shape();
    s1.insert(s1.begin(), 1);
    rows.push_back(reshape(p, s1));
  }
  return concat(rows, 0);
}

Tensor logsumexp(const Tensor& x) {
  const int64_t last = static_cast<int64_t>(x.shape().size()) - 1;
  if (last < 0) throw ShapeError("logsumexp: rank-0 input");
  Tensor mx = reduce_max(x, last);
  Shape keep = x.shape();
  keep[static_cast<size_t>(last)] = 1;
  Tensor mx_keep = reshape(mx, keep);
  // broadcast subtraction via tiling along the reduced axis
  const int64_t ext = x.shape()[static_cast<size_t>(last)];
  std::vector<Tensor> tiles(static_cast<size_t>(ext), mx_keep);
  Tensor mx_full = concat(tiles, last);
  Tensor shifted = sub(x, mx_full);
  Tensor lse = add(log(reduce_sum(exp(shifted), last)), mx);
  return lse;
}

Tensor cross_entropy(const Tensor& logits, int64_t target_index) {
  if (logits.rank() != 1) throw ShapeError("cross_entropy: logits must be rank 1, got " + shape_str(logits.shape()));
  if (target_index < 0 || target_index >= logits.dim(0)) {
    throw ValidationError("cross_entropy: target index out of range");
  }
  Tensor lse = logsumexp(logits);  // shape {}
  Tensor picked = reshape(slice(logits, 0, target_index, 1), {});
  return sub(lse, picked);
}

}  // namespace jointpred::nn
