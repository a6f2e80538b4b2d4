#pragma once

#include <map>
#include <string>
#include <vector>

#include "bytegan/ad/params.hpp"

namespace bytegan::ad {

struct AdamConfig {
  double alpha = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

// Bias-corrected Adam. One step() advances t by exactly 1 for the whole set.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamSet& params, const std::map<std::string, std::vector<double>>& grads);
  int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace bytegan::ad
