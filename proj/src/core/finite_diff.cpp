#include "core/finite_diff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/ops.hpp"

namespace fdnet {

namespace {

double scalar_sum_forward(const std::function<Value(const std::vector<Value>&)>& builder,
                          const std::vector<Tensor>& inputs) {
  std::vector<Value> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(make_leaf(t, /*requires_grad=*/false));
  Value out = builder(leaves);
  if (!out->value.all_finite())
    fail(ErrorKind::runtime, "finite_diff_check: non-finite intermediate value in forward pass");
  double s = 0.0;
  for (int64_t i = 0; i < out->value.size(); ++i) s += out->value[i];
  return s;
}

}  // namespace

double finite_diff_check(const std::function<Value(const std::vector<Value>&)>& builder,
                         const std::vector<Tensor>& inputs, double eps,
                         int64_t max_coords_per_input, Rng* rng) {
  detail::require(eps >= 1e-7 && eps <= 1e-3, ErrorKind::invalid_config,
                  cat("finite_diff_check: eps must lie in [1e-7, 1e-3], got ", eps));
  detail::require(!inputs.empty(), ErrorKind::invalid_config,
                  "finite_diff_check: need at least one input");

  // Analytic pass: one forward/backward with gradients enabled.
  std::vector<Value> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(make_leaf(t, /*requires_grad=*/true));
  Value out = builder(leaves);
  if (!out->value.all_finite())
    fail(ErrorKind::runtime, "finite_diff_check: non-finite intermediate value in forward pass");
  Value loss = sum_all(out);
  backward(loss);

  double max_rel = 0.0;
  std::vector<Tensor> work = inputs;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    int64_t total = inputs[ti].size();
    std::vector<int64_t> coords(static_cast<size_t>(total));
    std::iota(coords.begin(), coords.end(), int64_t{0});
    if (max_coords_per_input >= 0 && max_coords_per_input < total) {
      detail::require(rng != nullptr, ErrorKind::invalid_config,
                      "finite_diff_check: coordinate sampling requires an rng");
      // Partial Fisher-Yates: the first max_coords entries become the sample.
      for (int64_t i = 0; i < max_coords_per_input; ++i) {
        int64_t j = rng->uniform_int(static_cast<int>(i), static_cast<int>(total - 1));
        std::swap(coords[static_cast<size_t>(i)], coords[static_cast<size_t>(j)]);
      }
      coords.resize(static_cast<size_t>(max_coords_per_input));
    }

    const Tensor* analytic = leaves[ti]->has_grad() ? &leaves[ti]->grad_buf() : nullptr;
    for (int64_t ci : coords) {
      double saved = work[ti][ci];
      work[ti][ci] = saved + eps;
      double f_plus = scalar_sum_forward(builder, work);
      work[ti][ci] = saved - eps;
      double f_minus = scalar_sum_forward(builder, work);
      work[ti][ci] = saved;
      double numeric = (f_plus - f_minus) / (2.0 * eps);
      double a = analytic ? (*analytic)[ci] : 0.0;
      double rel = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace fdnet
