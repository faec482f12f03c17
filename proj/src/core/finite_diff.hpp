#pragma once

#include <functional>
#include <vector>

#include "core/graph.hpp"
#include "core/rng.hpp"

namespace fdnet {

/// Compares reverse-mode gradients against central finite differences.
///
/// `builder` maps one leaf Value per entry of `inputs` to the graph output;
/// the output is reduced to a scalar by summation before differentiation.
/// Every coordinate of every input is perturbed unless `max_coords_per_input`
/// caps the count, in which case coordinates are sampled without replacement
/// using `rng` (required in that case).
///
/// Returns max over checked coordinates of |analytic - numeric| / max(1, |numeric|).
double finite_diff_check(const std::function<Value(const std::vector<Value>&)>& builder,
                         const std::vector<Tensor>& inputs, double eps,
                         int64_t max_coords_per_input = -1, Rng* rng = nullptr);

}  // namespace fdnet
