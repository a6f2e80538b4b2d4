#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bytegan/error.hpp"

namespace bytegan::ad {

using Shape = std::vector<int>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);

enum class Op : uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Scale,       // x * d0
  Shift,       // x + d0
  MatMul,      // {m,k} x {k,n}
  Transpose,   // 2-D
  BiasRows,    // X{m,n} + b{n} broadcast over rows
  ColSum,      // X{m,n} -> {n}
  BroadcastRows,
  BiasChan,    // X{N,C,H,W} + b{C}
  ChanSum,     // X{N,C,H,W} -> {C}
  BroadcastChan,
  Conv,        // x{N,Ci,H,W} * k{Co,Ci,kh,kw}, attrs stride/pad
  ConvDx,      // adjoint of Conv in x; doubles as transposed convolution
  ConvDk,      // adjoint of Conv in k
  LeakyRelu,   // slope d0
  TanhOp,
  SigmoidOp,
  Softplus,
  Square,
  Recip,
  Reshape,
  SumAll,           // -> rank-0
  BroadcastScalar,  // rank-0 -> shape
  SampleSum,        // {N,...} -> {N}
  BroadcastSample,  // {N} -> {N,...}
  L2NormSamples,    // {N,...} -> {N}, per-sample euclidean norm
  MaxPool2,         // 2x2 stride-2 max pool; in1 supplies argmax indices
  PoolScatter,      // adjoint of MaxPool2 in its value input
};

const char* op_name(Op op);

struct Attrs {
  int i0 = 0, i1 = 0, i2 = 0, i3 = 0;
  double d0 = 0.0;
};

class Tape;

// Lightweight handle into a tape. Values are computed eagerly at creation and
// never change afterwards.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Shape& shape() const;
  const std::vector<double>& values() const;
  int64_t size() const { return numel(shape()); }
  double scalar() const;
  bool requires_grad() const;
};

class GradMap {
 public:
  bool has(Tensor x) const { return x.valid() && m_.count(x.id) > 0; }
  Tensor grad(Tensor x) const;

 private:
  friend class Tape;
  Tape* tape_ = nullptr;
  std::unordered_map<int, int> m_;
};

// Append-only single-threaded graph arena. Backward passes emit their
// vector-Jacobian products as new tape nodes, so a gradient is itself a
// differentiable tensor and second-order gradients come for free.
class Tape {
 public:
  Tensor leaf(const Shape& shape, std::span<const double> vals, bool requires_grad);
  Tensor constant(const Shape& shape, std::span<const double> vals);
  Tensor constant_fill(const Shape& shape, double v);

  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);
  Tensor scale(Tensor a, double c);
  Tensor shift(Tensor a, double c);
  Tensor neg(Tensor a) { return scale(a, -1.0); }

  Tensor matmul(Tensor a, Tensor b);
  Tensor transpose(Tensor a);
  Tensor bias_rows(Tensor x, Tensor b);
  Tensor colsum(Tensor x);
  Tensor broadcast_rows(Tensor v, int rows);

  Tensor conv2d(Tensor x, Tensor k, int stride, int pad);
  // x{N,Cin,H,W}, k{Cin,Cout,kh,kw} -> {N,Cout,(H-1)s-2p+kh,(W-1)s-2p+kw}
  Tensor conv2d_transpose(Tensor x, Tensor k, int stride, int pad);
  Tensor bias_chan(Tensor x, Tensor b);
  Tensor chansum(Tensor x);
  Tensor broadcast_chan(Tensor v, int n, int h, int w);

  Tensor leaky_relu(Tensor x, double slope);
  Tensor tanh(Tensor x);
  Tensor sigmoid(Tensor x);
  Tensor softplus(Tensor x);
  Tensor square(Tensor x);
  Tensor recip(Tensor x);

  Tensor reshape(Tensor x, const Shape& shape);
  Tensor flatten_samples(Tensor x);  // {N,...} -> {N,rest}
  Tensor sum_all(Tensor x);
  Tensor mean_all(Tensor x);
  Tensor broadcast_scalar(Tensor s, const Shape& shape);
  Tensor sample_sum(Tensor x);
  Tensor broadcast_sample(Tensor v, const Shape& shape);
  Tensor sample_mean(Tensor x);  // {N,...} -> {N}
  Tensor l2norm_samples(Tensor x);
  Tensor maxpool2(Tensor x);

  // affine/matmul primitive of the public op set: x{m,k} W{k,n} b{n}
  Tensor affine(Tensor x, Tensor w, Tensor b) { return bias_rows(matmul(x, w), b); }

  // Gradients of `out` (scalar) w.r.t. every requires_grad leaf.
  GradMap backward(Tensor out);
  // Gradient of `out` (scalar) w.r.t. `wrt`; the result stays on the tape and
  // supports further backward passes. Throws Disconnected if no path exists.
  Tensor gradient(Tensor out, Tensor wrt);

  size_t node_count() const { return nodes_.size(); }

 private:
  friend struct Tensor;

  struct Node {
    Op op;
    int in0 = -1;
    int in1 = -1;
    bool requires_grad = false;
    Shape shape;
    Attrs attrs;
    std::vector<double> vals;
  };

  std::vector<Node> nodes_;

  Tensor push(Op op, int in0, int in1, Shape shape, Attrs attrs);
  void eval(Node& n);
  void check_finite(const Node& n);
  Tensor wrap(int id) { return Tensor{this, id}; }
  Tensor own(Tensor t) const;
  Tensor pool_scatter(Tensor g, Tensor idx_src);
  Tensor maxpool2_gather(Tensor vals, Tensor idx_src);

  GradMap backward_impl(Tensor out, const std::vector<char>& active);
  std::vector<char> active_from_rg(int upto) const;
  std::vector<char> active_from_target(int upto, int target) const;
};

}  // namespace bytegan::ad
