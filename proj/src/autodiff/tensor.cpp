#include "autodiff/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace jointpred::ad {

namespace {

std::atomic<uint64_t> g_seq{1};
thread_local bool g_grad_enabled = true;

uint64_t next_seq() { return g_seq.fetch_add(1, std::memory_order_relaxed); }

int64_t checked_axis(const Shape& shape, int64_t axis, const char* op) {
  if (axis < 0 || axis >= static_cast<int64_t>(shape.size())) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape));
  }
  return axis;
}

// product of extents before/after an axis
int64_t outer_of(const Shape& s, int64_t axis) {
  int64_t o = 1;
  for (int64_t i = 0; i < axis; ++i) o *= s[static_cast<size_t>(i)];
  return o;
}
int64_t inner_of(const Shape& s, int64_t axis) {
  int64_t o = 1;
  for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) o *= s[i];
  return o;
}

// C[m,n] += A[m,k] B[k,n]
void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      double* crow = c + i * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,k] += A[m,n] B[k,n]^T
void gemm_nt(const double* a, const double* b, double* c, int64_t m, int64_t n, int64_t k) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      c[i * k + p] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T B[m,n]
void gemm_tn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* brow = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor make_op(const char* name, Shape shape, std::vector<double> values,
               std::vector<Tensor> parents, std::function<void(Node&)> backward_fn) {
  if (numel(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError(std::string(name) + ": value buffer size " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->op = name;
  bool rg = false;
  if (g_grad_enabled) {
    for (const Tensor& p : parents) rg = rg || p.requires_grad();
  }
  if (rg) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const Tensor& p : parents) n->parents.push_back(p.node_ptr());
    n->backward_fn = std::move(backward_fn);
  }
  n->seq = next_seq();
  return Tensor(std::move(n));
}

// ---- Tensor ----

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  std::vector<double> data(static_cast<size_t>(numel(shape)), value);
  return from(std::move(shape), std::move(data));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

Tensor Tensor::from(Shape shape, std::vector<double> data) {
  return make_op("leaf", std::move(shape), std::move(data), {}, {});
}

Tensor Tensor::param(Shape shape, std::vector<double> data) {
  Tensor t = from(std::move(shape), std::move(data));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  std::vector<double> data(static_cast<size_t>(numel(shape)));
  for (double& v : data) v = rng.normal(0.0, stddev);
  Tensor t = from(std::move(shape), std::move(data));
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::rand_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  std::vector<double> data(static_cast<size_t>(numel(shape)));
  for (double& v : data) v = rng.uniform(lo, hi);
  Tensor t = from(std::move(shape), std::move(data));
  t.node_->requires_grad = requires_grad;
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }
int64_t Tensor::size() const { return static_cast<int64_t>(node_->value.size()); }
const std::vector<double>& Tensor::values() const { return node_->value; }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item(): tensor has shape " + shape_str(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->parents.empty() && !node_->backward_fn; }

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

bool Tensor::has_grad() const { return !node_->grad.empty(); }

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

std::vector<double>& Tensor::mutable_values() {
  if (!is_leaf()) throw ValidationError("mutable_values(): only leaf tensors may be mutated in place");
  return node_->value;
}

Tensor Tensor::detach() const {
  return from(node_->shape, node_->value);
}

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  auto fail = [&]() -> Tensor {
    throw ShapeError("matmul: incompatible shapes " + shape_str(sa) + " x " + shape_str(sb));
  };
  if (sa.size() == 2 && sb.size() == 2) {
    const int64_t m = sa[0], k = sa[1], n = sb[1];
    if (sb[0] != k) return fail();
    std::vector<double> out(static_cast<size_t>(m * n), 0.0);
    gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op("matmul", {m, n}, std::move(out), {a, b}, [an, bn, m, k, n](Node& self) {
      if (an->requires_grad) {
        an->ensure_grad();
        gemm_nt(self.grad.data(), bn->value.data(), an->grad.data(), m, n, k);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        gemm_tn(an->value.data(), self.grad.data(), bn->grad.data(), m, k, n);
      }
    });
  }
  if (sa.size() == 3 && (sb.size() == 3 || sb.size() == 2)) {
    const int64_t bt = sa[0], m = sa[1], k = sa[2];
    const bool shared_rhs = sb.size() == 2;
    const int64_t n = shared_rhs ? sb[1] : sb[2];
    if (shared_rhs ? (sb[0] != k) : (sb[0] != bt || sb[1] != k)) return fail();
    std::vector<double> out(static_cast<size_t>(bt * m * n), 0.0);
    for (int64_t i = 0; i < bt; ++i) {
      const double* bp = b.values().data() + (shared_rhs ? 0 : i * k * n);
      gemm_nn(a.values().data() + i * m * k, bp, out.data() + i * m * n, m, k, n);
    }
    auto an = a.node_ptr();
    auto bn = b.node_ptr();
    return make_op("matmul", {bt, m, n}, std::move(out), {a, b},
                   [an, bn, bt, m, k, n, shared_rhs](Node& self) {
                     for (int64_t i = 0; i < bt; ++i) {
                       const double* g = self.grad.data() + i * m * n;
                       const double* bp = bn->value.data() + (shared_rhs ? 0 : i * k * n);
                       if (an->requires_grad) {
                         an->ensure_grad();
                         gemm_nt(g, bp, an->grad.data() + i * m * k, m, n, k);
                       }
                       if (bn->requires_grad) {
                         bn->ensure_grad();
                         double* bg = bn->grad.data() + (shared_rhs ? 0 : i * k * n);
                         gemm_tn(an->value.data() + i * m * k, g, bg, m, k, n);
                       }
                     }
                   });
  }
  return fail();
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.size() == 1 && b.size() > 1) return add(b, a);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const int64_t na = a.size(), nb = b.size();
  enum class Mode { same, scalar, bias } mode;
  if (sa == sb) {
    mode = Mode::same;
  } else if (nb == 1) {
    mode = Mode::scalar;
  } else if (sb.size() == 1 && !sa.empty() && sa.back() == sb[0]) {
    mode = Mode::bias;
  } else {
    throw ShapeError("add: incompatible shapes " + shape_str(sa) + " + " + shape_str(sb));
  }
  std::vector<double> out(a.values());
  if (mode == Mode::same) {
    for (int64_t i = 0; i < na; ++i) out[static_cast<size_t>(i)] += b.values()[static_cast<size_t>(i)];
  } else if (mode == Mode::scalar) {
    const double s = b.values()[0];
    for (double& v : out) v += s;
  } else {
    const int64_t w = sb[0];
    for (int64_t i = 0; i < na; ++i) out[static_cast<size_t>(i)] += b.values()[static_cast<size_t>(i % w)];
  }
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  return make_op("add", sa, std::move(out), {a, b}, [an, bn, mode, na](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (int64_t i = 0; i < na; ++i) an->grad[static_cast<size_t>(i)] += self.grad[static_cast<size_t>(i)];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      if (mode == Mode::same) {
        for (int64_t i = 0; i < na; ++i) bn->grad[static_cast<size_t>(i)] += self.grad[static_cast<size_t>(i)];
      } else if (mode == Mode::scalar) {
        double acc = 0.0;
        for (int64_t i = 0; i < na; ++i) acc += self.grad[static_cast<size_t>(i)];
        bn->grad[0] += acc;
      } else {
        const int64_t w = static_cast<int64_t>(bn->value.size());
        for (int64_t i = 0; i < na; ++i) bn->grad[static_cast<size_t>(i % w)] += self.grad[static_cast<size_t>(i)];
      }
    }
  });
}

Tensor neg(const Tensor& a) { return mul(a, Tensor::scalar(-1.0)); }

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, neg(b)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.size() == 1 && b.size() > 1) return mul(b, a);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const int64_t na = a.size();
  const bool scalar_rhs = b.size() == 1 && sa != sb;
  if (!scalar_rhs && sa != sb) {
    throw ShapeError("mul: incompatible shapes " + shape_str(sa) + " * " + shape_str(sb));
  }
  std::vector<double> out(static_cast<size_t>(na));
  if (scalar_rhs) {
    const double s = b.values()[0];
    for (int64_t i = 0; i < na; ++i) out[static_cast<size_t>(i)] = a.values()[static_cast<size_t>(i)] * s;
  } else {
    for (int64_t i = 0; i < na; ++i) {
      out[static_cast<size_t>(i)] = a.values()[static_cast<size_t>(i)] * b.values()[static_cast<size_t>(i)];
    }
  }
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  return make_op("mul", sa, std::move(out), {a, b}, [an, bn, scalar_rhs, na](Node& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      if (scalar_rhs) {
        const double s = bn->value[0];
        for (int64_t i = 0; i < na; ++i) an->grad[static_cast<size_t>(i)] += self.grad[static_cast<size_t>(i)] * s;
      } else {
        for (int64_t i = 0; i < na; ++i) {
          an->grad[static_cast<size_t>(i)] += self.grad[static_cast<size_t>(i)] * bn->value[static_cast<size_t>(i)];
        }
      }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      if (scalar_rhs) {
        double acc = 0.0;
        for (int64_t i = 0; i < na; ++i) acc += self.grad[static_cast<size_t>(i)] * an->value[static_cast<size_t>(i)];
        bn->grad[0] += acc;
      } else {
        for (int64_t i = 0; i < na; ++i) {
          bn->grad[static_cast<size_t>(i)] += self.grad[static_cast<size_t>(i)] * an->value[static_cast<size_t>(i)];
        }
      }
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  checked_axis(s0, axis, "concat");
  Shape out_shape = s0;
  int64_t total_axis = 0;
  for (const Tensor& p : parts) {
    const Shape& sp = p.shape();
    if (sp.size() != s0.size()) {
      throw ShapeError("concat: rank mismatch " + shape_str(s0) + " vs " + shape_str(sp));
    }
    for (size_t d = 0; d < s0.size(); ++d) {
      if (static_cast<int64_t>(d) != axis && sp[d] != s0[d]) {
        throw ShapeError("concat: shape mismatch off axis " + std::to_string(axis) + ": " + shape_str(s0) +
                         " vs " + shape_str(sp));
      }
    }
    total_axis += sp[static_cast<size_t>(axis)];
  }
  out_shape[static_cast<size_t>(axis)] = total_axis;
  const int64_t outer = outer_of(s0, axis), inner = inner_of(s0, axis);
  std::vector<double> out(static_cast<size_t>(numel(out_shape)));
  int64_t offset = 0;  // running offset along axis
  for (const Tensor& p : parts) {
    const int64_t ext = p.shape()[static_cast<size_t>(axis)];
    for (int64_t o = 0; o < outer; ++o) {
      const double* src = p.values().data() + o * ext * inner;
      double* dst = out.data() + (o * total_axis + offset) * inner;
      std::copy(src, src + ext * inner, dst);
    }
    offset += ext;
  }
  std::vector<std::shared_ptr<Node>> pnodes;
  std::vector<int64_t> exts;
  for (const Tensor& p : parts) {
    pnodes.push_back(p.node_ptr());
    exts.push_back(p.shape()[static_cast<size_t>(axis)]);
  }
  return make_op("concat", std::move(out_shape), std::move(out), parts,
                 [pnodes, exts, outer, inner, total_axis](Node& self) {
                   int64_t off = 0;
                   for (size_t pi = 0; pi < pnodes.size(); ++pi) {
                     auto& pn = pnodes[pi];
                     const int64_t ext = exts[pi];
                     if (pn->requires_grad) {
                       pn->ensure_grad();
                       for (int64_t o = 0; o < outer; ++o) {
                         const double* g = self.grad.data() + (o * total_axis + off) * inner;
                         double* dst = pn->grad.data() + o * ext * inner;
                         for (int64_t i = 0; i < ext * inner; ++i) dst[i] += g[i];
                       }
                     }
                     off += ext;
                   }
                 });
}

Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t len) {
  const Shape& s = a.shape();
  checked_axis(s, axis, "slice");
  const int64_t ext = s[static_cast<size_t>(axis)];
  if (start < 0 || len < 0 || start + len > ext) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
                     ") out of bounds for axis " + std::to_string(axis) + " of " + shape_str(s));
  }
  Shape out_shape = s;
  out_shape[static_cast<size_t>(axis)] = len;
  const int64_t outer = outer_of(s, axis), inner = inner_of(s, axis);
  std::vector<double> out(static_cast<size_t>(numel(out_shape)));
  for (int64_t o = 0; o < outer; ++o) {
    const double* src = a.values().data() + (o * ext + start) * inner;
    std::copy(src, src + len * inner, out.data() + o * len * inner);
  }
  auto an = a.node_ptr();
  return make_op("slice", std::move(out_shape), std::move(out), {a},
                 [an, outer, inner, ext, start, len](Node& self) {
                   if (!an->requires_grad) return;
                   an->ensure_grad();
                   for (int64_t o = 0; o < outer; ++o) {
                     const double* g = self.grad.data() + o * len * inner;
                     double* dst = an->grad.data() + (o * ext + start) * inner;
                     for (int64_t i = 0; i < len * inner; ++i) dst[i] += g[i];
                   }
                 });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  auto an = a.node_ptr();
  return make_op("reshape", std::move(shape), a.values(), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
  });
}

Tensor transpose(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.size() < 2) throw ShapeError("transpose: needs rank >= 2, got " + shape_str(s));
  Shape out_shape = s;
  std::swap(out_shape[s.size() - 1], out_shape[s.size() - 2]);
  const int64_t m = s[s.size() - 2], n = s[s.size() - 1];
  const int64_t batch = a.size() / (m * n);
  std::vector<double> out(static_cast<size_t>(a.size()));
  for (int64_t b = 0; b < batch; ++b) {
    const double* src = a.values().data() + b * m * n;
    double* dst = out.data() + b * m * n;
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
    }
  }
  auto an = a.node_ptr();
  return make_op("transpose", std::move(out_shape), std::move(out), {a}, [an, batch, m, n](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int64_t b = 0; b < batch; ++b) {
      const double* g = self.grad.data() + b * m * n;  // [n,m]
      double* dst = an->grad.data() + b * m * n;       // [m,n]
      for (int64_t j = 0; j < n; ++j) {
        for (int64_t i = 0; i < m; ++i) dst[i * n + j] += g[j * m + i];
      }
    }
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.values());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  auto an = a.node_ptr();
  return make_op("relu", a.shape(), std::move(out), {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      if (an->value[i] > 0.0) an->grad[i] += self.grad[i];
    }
  });
}

Tensor softmax(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.empty()) throw ShapeError("softmax: rank-0 input");
  const int64_t n = s.back();
  const int64_t rows = a.size() / n;
  std::vector<double> out(static_cast<size_t>(a.size()));
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = a.values().data() + r * n;
    double* y = out.data() + r * n;
    double mx = x[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    }
    for (int64_t j = 0; j < n; ++j) y[j] /= sum;
  }
  auto an = a.node_ptr();
  return make_op("softmax", s, std::move(out), {a}, [an, rows, n](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * n;
      const double* g = self.grad.data() + r * n;
      double dot = 0.0;
      for (int64_t j = 0; j < n; ++j) dot += y[j] * g[j];
      double* dst = an->grad.data() + r * n;
      for (int64_t j = 0; j < n; ++j) dst[j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& a, double eps) {
  const Shape& s = a.shape();
  if (s.empty()) throw ShapeError("layer_norm: rank-0 input");
  const int64_t n = s.back();
  const int64_t rows = a.size() / n;
  std::vector<double> out(static_cast<size_t>(a.size()));
  std::vector<double> inv_std(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = a.values().data() + r * n;
    double mean = 0.0;
    for (int64_t j = 0; j < n; ++j) mean += x[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(r)] = is;
    double* y = out.data() + r * n;
    for (int64_t j = 0; j < n; ++j) y[j] = (x[j] - mean) * is;
  }
  auto an = a.node_ptr();
  return make_op("layer_norm", s, std::move(out), {a}, [an, rows, n, inv_std](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * n;
      const double* g = self.grad.data() + r * n;
      double gmean = 0.0, gydot = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        gmean += g[j];
        gydot += g[j] * y[j];
      }
      gmean /= static_cast<double>(n);
      gydot /= static_cast<double>(n);
      const double is = inv_std[static_cast<size_t>(r)];
      double* dst = an->grad.data() + r * n;
      for (int64_t j = 0; j < n; ++j) dst[j] += is * (g[j] - gmean - y[j] * gydot);
    }
  });
}

Tensor reduce_sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  auto an = a.node_ptr();
  return make_op("reduce_sum", {}, {acc}, {a}, [an](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const double g = self.grad[0];
    for (double& gv : an->grad) gv += g;
  });
}

namespace {
Shape drop_axis(const Shape& s, int64_t axis) {
  Shape out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (static_cast<int64_t>(i) != axis) out.push_back(s[i]);
  }
  return out;
}
}  // namespace

Tensor reduce_sum(const Tensor& a, int64_t axis) {
  const Shape& s = a.shape();
  checked_axis(s, axis, "reduce_sum");
  const int64_t ext = s[static_cast<size_t>(axis)];
  const int64_t outer = outer_of(s, axis), inner = inner_of(s, axis);
  std::vector<double> out(static_cast<size_t>(outer * inner), 0.0);
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t e = 0; e < ext; ++e) {
      const double* src = a.values().data() + (o * ext + e) * inner;
      double* dst = out.data() + o * inner;
      for (int64_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  auto an = a.node_ptr();
  return make_op("reduce_sum", drop_axis(s, axis), std::move(out), {a},
                 [an, outer, inner, ext](Node& self) {
                   if (!an->requires_grad) return;
                   an->ensure_grad();
                   for (int64_t o = 0; o < outer; ++o) {
                     const double* g = self.grad.data() + o * inner;
                     for (int64_t e = 0; e < ext; ++e) {
                       double* dst = an->grad.data() + (o * ext + e) * inner;
                       for (int64_t i = 0; i < inner; ++i) dst[i] += g[i];
                     }
                   }
                 });
}

Tensor reduce_mean(const Tensor& a) {
  const int64_t n = a.size();
  if (n == 0) throw ShapeError("reduce_mean: empty tensor");
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  acc /= static_cast<double>(n);
  auto an = a.node_ptr();
  return make_op("reduce_mean", {}, {acc}, {a}, [an, n](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const double g = self.grad[0] / static_cast<double>(n);
    for (double& gv : an->grad) gv += g;
  });
}

Tensor reduce_mean(const Tensor& a, int64_t axis) {
  const Shape& s = a.shape();
  checked_axis(s, axis, "reduce_mean");
  const int64_t ext = s[static_cast<size_t>(axis)];
  if (ext == 0) throw ShapeError("reduce_mean: empty axis in " + shape_str(s));
  Tensor summed = reduce_sum(a, axis);
  return mul(summed, Tensor::scalar(1.0 / static_cast<double>(ext)));
}

Tensor reduce_max(const Tensor& a, int64_t axis) {
  const Shape& s = a.shape();
  checked_axis(s, axis, "reduce_max");
  const int64_t ext = s[static_cast<size_t>(axis)];
  if (ext == 0) throw ShapeError("reduce_max: empty axis in " + shape_str(s));
  const int64_t outer = outer_of(s, axis), inner = inner_of(s, axis);
  std::vector<double> out(static_cast<size_t>(outer * inner));
  std::vector<int64_t> arg(static_cast<size_t>(outer * inner));  // flat source indices
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      int64_t best_e = 0;
      double best = a.values()[static_cast<size_t>((o * ext) * inner + i)];
      for (int64_t e = 1; e < ext; ++e) {
        const double v = a.values()[static_cast<size_t>((o * ext + e) * inner + i)];
        if (v > best) {
          best = v;
          best_e = e;
        }
      }
      out[static_cast<size_t>(o * inner + i)] = best;
      arg[static_cast<size_t>(o * inner + i)] = (o * ext + best_e) * inner + i;
    }
  }
  auto an = a.node_ptr();
  return make_op("reduce_max", drop_axis(s, axis), std::move(out), {a}, [an, arg](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < arg.size(); ++i) an->grad[static_cast<size_t>(arg[i])] += self.grad[i];
  });
}

Tensor min_index(const Tensor& a, int64_t axis) {
  const Shape& s = a.shape();
  checked_axis(s, axis, "min_index");
  const int64_t ext = s[static_cast<size_t>(axis)];
  if (ext == 0) throw ShapeError("min_index: empty axis in " + shape_str(s));
  const int64_t outer = outer_of(s, axis), inner = inner_of(s, axis);
  std::vector<double> out(static_cast<size_t>(outer * inner));
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t i = 0; i < inner; ++i) {
      int64_t best_e = 0;
      double best = a.values()[static_cast<size_t>((o * ext) * inner + i)];
      for (int64_t e = 1; e < ext; ++e) {
        const double v = a.values()[static_cast<size_t>((o * ext + e) * inner + i)];
        if (v < best) {  // ties keep the lowest index
          best = v;
          best_e = e;
        }
      }
      out[static_cast<size_t>(o * inner + i)] = static_cast<double>(best_e);
    }
  }
  // index output carries no gradient
  return make_op("min_index", drop_axis(s, axis), std::move(out), {}, {});
}

std::vector<int64_t> argmin_axis(const Tensor& a, int64_t axis) {
  Tensor idx = min_index(a, axis);
  std::vector<int64_t> out(idx.values().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int64_t>(idx.values()[i]);
  return out;
}

int64_t argmin(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("argmin: empty tensor");
  int64_t best = 0;
  for (int64_t i = 1; i < a.size(); ++i) {
    if (a.values()[static_cast<size_t>(i)] < a.values()[static_cast<size_t>(best)]) best = i;
  }
  return best;
}

namespace {
template <typename F, typename DF>
Tensor unary_op(const char* name, const Tensor& a, F f, DF df) {
  std::vector<double> out(a.values());
  for (double& v : out) v = f(v);
  auto an = a.node_ptr();
  return make_op(name, a.shape(), std::move(out), {a}, [an, df](Node& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      an->grad[i] += self.grad[i] * df(an->value[i], self.value[i]);
    }
  });
}
}  // namespace

Tensor exp(const Tensor& a) {
  return unary_op("exp", a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op("log", a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary_op("sqrt", a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Tensor smooth_l1(const Tensor& pred, const Tensor& target, double beta) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("smooth_l1: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  }
  if (beta <= 0.0) throw ValidationError("smooth_l1: beta must be positive");
  const int64_t n = pred.size();
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double x = pred.values()[static_cast<size_t>(i)] - target.values()[static_cast<size_t>(i)];
    const double ax = std::abs(x);
    out[static_cast<size_t>(i)] = ax < beta ? 0.5 * x * x / beta : ax - 0.5 * beta;
  }
  auto pn = pred.node_ptr();
  auto tn = target.node_ptr();
  return make_op("smooth_l1", pred.shape(), std::move(out), {pred, target}, [pn, tn, beta, n](Node& self) {
    for (int64_t i = 0; i < n; ++i) {
      const double x = pn->value[static_cast<size_t>(i)] - tn->value[static_cast<size_t>(i)];
      double d = x / beta;
      d = std::clamp(d, -1.0, 1.0);
      const double g = self.grad[static_cast<size_t>(i)] * d;
      if (pn->requires_grad) {
        pn->ensure_grad();
        pn->grad[static_cast<size_t>(i)] += g;
      }
      if (tn->requires_grad) {
        tn->ensure_grad();
        tn->grad[static_cast<size_t>(i)] -= g;
      }
    }
  });
}

// ---- backward ----

bool ComputationTape::topologically_ordered() const {
  std::unordered_set<const Node*> seen;
  for (const Node* n : ops) {
    for (const auto& p : n->parents) {
      if (p->requires_grad && p->seq >= n->seq) return false;
      (void)seen;
    }
    seen.insert(n);
  }
  return true;
}

void backward(const Tensor& root) {
  if (!root.defined()) throw ValidationError("backward: undefined tensor");
  if (root.size() != 1) {
    throw ShapeError("backward: root must be scalar, got shape " + shape_str(root.shape()));
  }
  Node* r = root.node();
  if (!r->requires_grad) return;

  // Collect the reachable differentiable subgraph; creation order is a
  // topological order by construction.
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{r};
  ComputationTape tape;
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (seen.count(n)) continue;
    seen.insert(n);
    tape.ops.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && !seen.count(p.get())) stack.push_back(p.get());
    }
  }
  std::sort(tape.ops.begin(), tape.ops.end(), [](const Node* a, const Node* b) { return a->seq < b->seq; });

  r->ensure_grad();
  r->grad[0] += 1.0;
  for (auto it = tape.ops.rbegin(); it != tape.ops.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

}  // namespace jointpred::ad
