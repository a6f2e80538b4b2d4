#pragma once

#include <functional>
#include <vector>

#include "bytegan/ad/tape.hpp"

namespace bytegan::testing {

using ad::Shape;
using ad::Tape;
using ad::Tensor;

struct FdInput {
  Shape shape;
  std::vector<double> vals;
};

using GraphFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Central-difference gradient oracle, independent of the tape's backward
// path: it only re-runs forward evaluations on perturbed leaves.
// Returns the worst relative error |g_ad - g_fd| / max(1, |g_fd|) over all
// coordinates of all inputs.
inline double fd_check(const GraphFn& fn, std::vector<FdInput> inputs, double h = 1e-5) {
  // AD gradients
  std::vector<std::vector<double>> g_ad;
  {
    Tape tape;
    std::vector<Tensor> leaves;
    for (const auto& in : inputs) leaves.push_back(tape.leaf(in.shape, in.vals, true));
    Tensor out = fn(tape, leaves);
    auto gm = tape.backward(out);
    for (auto& leaf : leaves) {
      if (gm.has(leaf)) {
        g_ad.push_back(gm.grad(leaf).values());
      } else {
        g_ad.emplace_back(leaf.values().size(), 0.0);
      }
    }
  }

  auto eval_at = [&](const std::vector<FdInput>& at) {
    Tape tape;
    std::vector<Tensor> leaves;
    for (const auto& in : at) leaves.push_back(tape.leaf(in.shape, in.vals, false));
    return fn(tape, leaves).scalar();
  };

  double worst = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (size_t j = 0; j < inputs[i].vals.size(); ++j) {
      double keep = inputs[i].vals[j];
      inputs[i].vals[j] = keep + h;
      double up = eval_at(inputs);
      inputs[i].vals[j] = keep - h;
      double dn = eval_at(inputs);
      inputs[i].vals[j] = keep;
      double g_fd = (up - dn) / (2.0 * h);
      double err = std::abs(g_ad[i][j] - g_fd) / std::max(1.0, std::abs(g_fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace bytegan::testing
