#include "core/graph.hpp"

#include <unordered_set>

namespace fdnet {

namespace {

#ifdef NDEBUG
bool g_debug_checks = false;
#else
bool g_debug_checks = true;
#endif

struct LeafNode final : Node {
  const char* op_name() const override { return "leaf"; }
};

struct ParamLeafNode final : Node {
  ParamPtr param;
  const char* op_name() const override { return "param"; }
  void backward() override {
    // Reverse topological order guarantees every consumer has already pushed
    // its contribution, so the node gradient is complete here.
    if (has_grad()) param->grad.add_(grad);
  }
};

}  // namespace

bool debug_checks_enabled() { return g_debug_checks; }
void set_debug_checks(bool enabled) { g_debug_checks = enabled; }

void check_finite_debug(const Tensor& t, const char* op) {
  if (!g_debug_checks) return;
  if (!t.all_finite()) fail(ErrorKind::runtime, cat(op, ": non-finite value in output"));
}

Value make_leaf(Tensor v, bool requires_grad) {
  auto n = std::make_shared<LeafNode>();
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

Value make_param_leaf(const ParamPtr& p) {
  auto n = std::make_shared<ParamLeafNode>();
  n->param = p;
  n->value = p->value;
  n->requires_grad = true;
  return n;
}

void backward(const Value& loss) {
  if (!loss) fail(ErrorKind::runtime, "backward: null loss node");
  if (loss->value.empty()) fail(ErrorKind::runtime, "backward: loss evaluated before forward");
  if (loss->value.size() != 1)
    fail(ErrorKind::runtime,
         cat("backward: loss node must be scalar, got shape ", loss->value.shape_str()));

  // Iterative post-order DFS for a topological order of the ancestor set.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->inputs.size()) {
      Node* next = node->inputs[idx].get();
      ++idx;
      if (next && !visited.count(next)) {
        visited.insert(next);
        stack.emplace_back(next, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->grad_buf()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->requires_grad || !node->has_grad()) continue;
    node->backward();
  }
}

}  // namespace fdnet
