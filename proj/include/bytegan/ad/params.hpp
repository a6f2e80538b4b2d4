#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bytegan/ad/tape.hpp"

namespace bytegan::ad {

struct ParamSpec {
  enum class Init { WeightNormal, ZeroBias };
  std::string name;
  Shape shape;
  Init init = Init::WeightNormal;
};

// Named parameter tensors for one network. Shapes are fixed at creation;
// values are plain buffers mutated only by the optimizer.
class ParamSet {
 public:
  ParamSet() = default;

  void add(const std::string& name, Shape shape, std::vector<double> vals);
  bool has(const std::string& name) const { return vals_.count(name) > 0; }
  const Shape& shape(const std::string& name) const;
  const std::vector<double>& values(const std::string& name) const;
  std::vector<double>& values(const std::string& name);
  const std::vector<std::string>& names() const { return order_; }
  int64_t total_size() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, Shape> shapes_;
  std::map<std::string, std::vector<double>> vals_;
};

// Weights ~ Normal(0, 0.02^2), biases 0. Each parameter draws from its own
// counter stream keyed by name, so adding a parameter never shifts another.
ParamSet init_params(const std::vector<ParamSpec>& specs, uint64_t seed);

// Parameters staged onto a tape as leaves for one forward/backward pass.
struct TapedParams {
  std::map<std::string, Tensor> leaves;
  Tensor at(const std::string& name) const;
};

TapedParams stage(Tape& tape, const ParamSet& params, bool requires_grad);

// Gradients (by name) read out of a finished backward pass; parameters the
// loss never touched get zeros.
std::map<std::string, std::vector<double>> read_grads(const GradMap& gm, const ParamSet& params,
                                                      const TapedParams& staged);

// Little-endian binary checkpoint: magic "BGCK", u32 version, u32 count,
// then per tensor: u32 name_len, name, u32 rank, u32 dims[], f64 data[].
void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace bytegan::ad
