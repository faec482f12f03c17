#pragma once

#include <string>
#include <vector>

namespace fdnet::train {

struct GradCheckEntry {
  std::string op;
  double max_rel_err = 0.0;
};

std::vector<std::string> gradcheck_ops();

/// Finite-difference verification of one op's reverse-mode gradients on a
/// fixed random fixture. "fdnet_e2e" checks the full network: 50 sampled
/// parameter coordinates against central differences through the deep
/// supervision loss.
GradCheckEntry run_gradcheck_op(const std::string& op);

/// selector = "all" or one op name.
std::vector<GradCheckEntry> run_gradcheck(const std::string& selector);

}  // namespace fdnet::train
