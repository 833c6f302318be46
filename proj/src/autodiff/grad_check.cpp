#include "autodiff/grad_check.hpp"

#include <cmath>

namespace jointpred::ad {

namespace {

double eval_scalar(const Tensor& t, const char* what) {
  const double v = t.item();
  if (!std::isfinite(v)) throw NumericError(std::string("grad_check: non-finite ") + what);
  return v;
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  if (h <= 0.0) throw ValidationError("grad_check: step h must be positive");
  std::vector<NamedParam> leaves{{"x", x}};
  return grad_check_multi([&]() { return f(x); }, leaves, h);
}

double grad_check_multi(const std::function<Tensor()>& f, const std::vector<NamedParam>& leaves,
                        double h, int64_t max_coords, std::string* worst_leaf) {
  if (h <= 0.0) throw ValidationError("grad_check: step h must be positive");
  // Analytic pass.
  for (const NamedParam& p : leaves) {
    if (!p.tensor.requires_grad()) {
      throw ValidationError("grad_check: leaf " + p.name + " does not require grad");
    }
    const_cast<Tensor&>(p.tensor).zero_grad();
  }
  Tensor out = f();
  eval_scalar(out, "function value");
  backward(out);

  double max_err = 0.0;
  for (const NamedParam& p : leaves) {
    std::vector<double> analytic = p.tensor.grad();
    Tensor t = p.tensor;
    std::vector<double>& data = t.mutable_values();
    const int64_t n = static_cast<int64_t>(data.size());
    int64_t count = (max_coords <= 0 || max_coords >= n) ? n : max_coords;
    // stride so capped probes cover the whole buffer
    const int64_t stride = count == n ? 1 : std::max<int64_t>(n / count, 1);
    NoGradGuard no_grad;
    for (int64_t probe = 0; probe < count; ++probe) {
      const int64_t i = (probe * stride) % n;
      const double saved = data[static_cast<size_t>(i)];
      data[static_cast<size_t>(i)] = saved + h;
      const double fp = eval_scalar(f(), "forward value at x+h");
      data[static_cast<size_t>(i)] = saved - h;
      const double fm = eval_scalar(f(), "forward value at x-h");
      data[static_cast<size_t>(i)] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[static_cast<size_t>(i)];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (err > max_err) {
        max_err = err;
        if (worst_leaf) *worst_leaf = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return max_err;
}

}  // namespace jointpred::ad
