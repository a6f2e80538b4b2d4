#include "bytegan/ad/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bytegan::ad {

int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "}";
  return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::BiasRows: return "bias_rows";
    case Op::ColSum: return "colsum";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::BiasChan: return "bias_chan";
    case Op::ChanSum: return "chansum";
    case Op::BroadcastChan: return "broadcast_chan";
    case Op::Conv: return "conv2d";
    case Op::ConvDx: return "conv2d_transpose";
    case Op::ConvDk: return "conv2d_kgrad";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::TanhOp: return "tanh";
    case Op::SigmoidOp: return "sigmoid";
    case Op::Softplus: return "softplus";
    case Op::Square: return "square";
    case Op::Recip: return "recip";
    case Op::Reshape: return "reshape";
    case Op::SumAll: return "sum";
    case Op::BroadcastScalar: return "broadcast_scalar";
    case Op::SampleSum: return "sample_sum";
    case Op::BroadcastSample: return "broadcast_sample";
    case Op::L2NormSamples: return "l2norm_samples";
    case Op::MaxPool2: return "maxpool2";
    case Op::PoolScatter: return "pool_scatter";
  }
  return "?";
}

const Shape& Tensor::shape() const { return tape->nodes_[id].shape; }
const std::vector<double>& Tensor::values() const { return tape->nodes_[id].vals; }
bool Tensor::requires_grad() const { return tape->nodes_[id].requires_grad; }

double Tensor::scalar() const {
  if (size() != 1) fail(Errc::NotScalar, "tensor has shape " + shape_str(shape()));
  return values()[0];
}

Tensor GradMap::grad(Tensor x) const {
  auto it = m_.find(x.id);
  if (x.tape != tape_ || it == m_.end()) {
    fail(Errc::Disconnected, "no gradient recorded for node");
  }
  return Tensor{tape_, it->second};
}

Tensor Tape::own(Tensor t) const {
  if (t.tape != this || t.id < 0 || t.id >= static_cast<int>(nodes_.size())) {
    fail(Errc::ConfigError, "tensor does not belong to this tape");
  }
  return t;
}

Tensor Tape::push(Op op, int in0, int in1, Shape shape, Attrs attrs) {
  Node n;
  n.op = op;
  n.in0 = in0;
  n.in1 = in1;
  n.shape = std::move(shape);
  n.attrs = attrs;
  n.requires_grad = (in0 >= 0 && nodes_[in0].requires_grad) ||
                    (in1 >= 0 && nodes_[in1].requires_grad);
  // index-only input never carries gradient
  if (op == Op::MaxPool2 || op == Op::PoolScatter) {
    n.requires_grad = in0 >= 0 && nodes_[in0].requires_grad;
  }
  eval(n);
  check_finite(n);
  nodes_.push_back(std::move(n));
  return Tensor{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_finite(const Node& n) {
  for (double v : n.vals) {
    if (!std::isfinite(v)) {
      fail(Errc::NumericalFault, std::string("non-finite value produced by ") + op_name(n.op));
    }
  }
}

Tensor Tape::leaf(const Shape& shape, std::span<const double> vals, bool requires_grad) {
  if (static_cast<int64_t>(vals.size()) != numel(shape)) {
    fail(Errc::ShapeMismatch, "leaf data length does not match shape " + shape_str(shape));
  }
  Node n;
  n.op = Op::Leaf;
  n.shape = shape;
  n.requires_grad = requires_grad;
  n.vals.assign(vals.begin(), vals.end());
  check_finite(n);
  nodes_.push_back(std::move(n));
  return Tensor{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::constant(const Shape& shape, std::span<const double> vals) {
  return leaf(shape, vals, false);
}

Tensor Tape::constant_fill(const Shape& shape, double v) {
  std::vector<double> vals(static_cast<size_t>(numel(shape)), v);
  return leaf(shape, vals, false);
}

namespace {

void require(bool ok, Errc code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

struct ConvDims {
  int n, ci, h, w;   // input image
  int co, kh, kw;    // kernel
  int oh, ow;        // conv output
  int stride, pad;
};

// Shared index walk for the three bilinear conv contractions. The body sees
// flat offsets (xi into the image tensor, yi into the conv-output tensor,
// ki into the kernel tensor).
template <typename F>
void conv_walk(const ConvDims& d, F&& body) {
  for (int n = 0; n < d.n; ++n) {
    for (int co = 0; co < d.co; ++co) {
      for (int oh = 0; oh < d.oh; ++oh) {
        for (int ow = 0; ow < d.ow; ++ow) {
          int64_t yi = ((static_cast<int64_t>(n) * d.co + co) * d.oh + oh) * d.ow + ow;
          for (int ci = 0; ci < d.ci; ++ci) {
            for (int u = 0; u < d.kh; ++u) {
              int ih = oh * d.stride + u - d.pad;
              if (ih < 0 || ih >= d.h) continue;
              for (int v = 0; v < d.kw; ++v) {
                int iw = ow * d.stride + v - d.pad;
                if (iw < 0 || iw >= d.w) continue;
                int64_t xi = ((static_cast<int64_t>(n) * d.ci + ci) * d.h + ih) * d.w + iw;
                int64_t ki = ((static_cast<int64_t>(co) * d.ci + ci) * d.kh + u) * d.kw + v;
                body(xi, yi, ki);
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

void Tape::eval(Node& n) {
  auto& a = n.in0 >= 0 ? nodes_[n.in0] : n;
  auto& b = n.in1 >= 0 ? nodes_[n.in1] : n;
  n.vals.assign(static_cast<size_t>(numel(n.shape)), 0.0);
  double* out = n.vals.data();
  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Add: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = a.vals[i] + b.vals[i];
      break;
    }
    case Op::Sub: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = a.vals[i] - b.vals[i];
      break;
    }
    case Op::Mul: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = a.vals[i] * b.vals[i];
      break;
    }
    case Op::Scale: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = a.vals[i] * n.attrs.d0;
      break;
    }
    case Op::Shift: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = a.vals[i] + n.attrs.d0;
      break;
    }
    case Op::MatMul: {
      int m = a.shape[0], k = a.shape[1], c = b.shape[1];
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < c; ++j) {
          double acc = 0.0;
          for (int t = 0; t < k; ++t) acc += a.vals[i * k + t] * b.vals[t * c + j];
          out[i * c + j] = acc;
        }
      }
      break;
    }
    case Op::Transpose: {
      int m = a.shape[0], c = a.shape[1];
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j) out[j * m + i] = a.vals[i * c + j];
      break;
    }
    case Op::BiasRows: {
      int m = a.shape[0], c = a.shape[1];
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j) out[i * c + j] = a.vals[i * c + j] + b.vals[j];
      break;
    }
    case Op::ColSum: {
      int m = a.shape[0], c = a.shape[1];
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j) out[j] += a.vals[i * c + j];
      break;
    }
    case Op::BroadcastRows: {
      int m = n.shape[0], c = n.shape[1];
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j) out[i * c + j] = a.vals[j];
      break;
    }
    case Op::BiasChan: {
      int nn = a.shape[0], c = a.shape[1];
      int64_t hw = static_cast<int64_t>(a.shape[2]) * a.shape[3];
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < c; ++j) {
          const double bj = b.vals[j];
          int64_t base = (static_cast<int64_t>(i) * c + j) * hw;
          for (int64_t t = 0; t < hw; ++t) out[base + t] = a.vals[base + t] + bj;
        }
      break;
    }
    case Op::ChanSum: {
      int nn = a.shape[0], c = a.shape[1];
      int64_t hw = static_cast<int64_t>(a.shape[2]) * a.shape[3];
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < c; ++j) {
          int64_t base = (static_cast<int64_t>(i) * c + j) * hw;
          double acc = 0.0;
          for (int64_t t = 0; t < hw; ++t) acc += a.vals[base + t];
          out[j] += acc;
        }
      break;
    }
    case Op::BroadcastChan: {
      int nn = n.shape[0], c = n.shape[1];
      int64_t hw = static_cast<int64_t>(n.shape[2]) * n.shape[3];
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < c; ++j) {
          int64_t base = (static_cast<int64_t>(i) * c + j) * hw;
          for (int64_t t = 0; t < hw; ++t) out[base + t] = a.vals[j];
        }
      break;
    }
    case Op::Conv: {
      ConvDims d{a.shape[0], a.shape[1], a.shape[2], a.shape[3],
                 b.shape[0], b.shape[2], b.shape[3],
                 n.shape[2], n.shape[3], n.attrs.i0, n.attrs.i1};
      const double* x = a.vals.data();
      const double* k = b.vals.data();
      conv_walk(d, [&](int64_t xi, int64_t yi, int64_t ki) { out[yi] += x[xi] * k[ki]; });
      break;
    }
    case Op::ConvDx: {
      // a is conv-output-indexed, output is image-indexed
      ConvDims d{a.shape[0], b.shape[1], n.shape[2], n.shape[3],
                 b.shape[0], b.shape[2], b.shape[3],
                 a.shape[2], a.shape[3], n.attrs.i0, n.attrs.i1};
      const double* g = a.vals.data();
      const double* k = b.vals.data();
      conv_walk(d, [&](int64_t xi, int64_t yi, int64_t ki) { out[xi] += g[yi] * k[ki]; });
      break;
    }
    case Op::ConvDk: {
      // a is image-indexed, b is conv-output-indexed, output is kernel-indexed
      ConvDims d{a.shape[0], a.shape[1], a.shape[2], a.shape[3],
                 b.shape[1], n.shape[2], n.shape[3],
                 b.shape[2], b.shape[3], n.attrs.i0, n.attrs.i1};
      const double* x = a.vals.data();
      const double* g = b.vals.data();
      conv_walk(d, [&](int64_t xi, int64_t yi, int64_t ki) { out[ki] += x[xi] * g[yi]; });
      break;
    }
    case Op::LeakyRelu: {
      double s = n.attrs.d0;
      for (size_t i = 0; i < n.vals.size(); ++i) {
        double v = a.vals[i];
        out[i] = v > 0.0 ? v : s * v;
      }
      break;
    }
    case Op::TanhOp: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = std::tanh(a.vals[i]);
      break;
    }
    case Op::SigmoidOp: {
      for (size_t i = 0; i < n.vals.size(); ++i) {
        double v = a.vals[i];
        out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      }
      break;
    }
    case Op::Softplus: {
      for (size_t i = 0; i < n.vals.size(); ++i) {
        double v = a.vals[i];
        out[i] = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
      }
      break;
    }
    case Op::Square: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = a.vals[i] * a.vals[i];
      break;
    }
    case Op::Recip: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = 1.0 / a.vals[i];
      break;
    }
    case Op::Reshape: {
      n.vals = a.vals;
      break;
    }
    case Op::SumAll: {
      double acc = 0.0;
      for (double v : a.vals) acc += v;
      out[0] = acc;
      break;
    }
    case Op::BroadcastScalar: {
      for (size_t i = 0; i < n.vals.size(); ++i) out[i] = a.vals[0];
      break;
    }
    case Op::SampleSum: {
      int nn = a.shape[0];
      int64_t rest = numel(a.shape) / nn;
      for (int i = 0; i < nn; ++i) {
        double acc = 0.0;
        for (int64_t t = 0; t < rest; ++t) acc += a.vals[i * rest + t];
        out[i] = acc;
      }
      break;
    }
    case Op::BroadcastSample: {
      int nn = n.shape[0];
      int64_t rest = numel(n.shape) / nn;
      for (int i = 0; i < nn; ++i)
        for (int64_t t = 0; t < rest; ++t) out[i * rest + t] = a.vals[i];
      break;
    }
    case Op::L2NormSamples: {
      int nn = a.shape[0];
      int64_t rest = numel(a.shape) / nn;
      for (int i = 0; i < nn; ++i) {
        double acc = 0.0;
        for (int64_t t = 0; t < rest; ++t) {
          double v = a.vals[i * rest + t];
          acc += v * v;
        }
        out[i] = std::sqrt(acc);
      }
      break;
    }
    case Op::MaxPool2: {
      // a: values, b: argmax source (may be the same node)
      int nn = b.shape[0], c = b.shape[1], h = b.shape[2], w = b.shape[3];
      int oh = n.shape[2], ow = n.shape[3];
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < c; ++j)
          for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
              int64_t best = -1;
              double bv = 0.0;
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                  int iy = 2 * y + dy, ix = 2 * x + dx;
                  int64_t off = ((static_cast<int64_t>(i) * c + j) * h + iy) * w + ix;
                  if (best < 0 || b.vals[off] > bv) {
                    best = off;
                    bv = b.vals[off];
                  }
                }
              out[((static_cast<int64_t>(i) * c + j) * oh + y) * ow + x] = a.vals[best];
            }
      break;
    }
    case Op::PoolScatter: {
      // a: pooled-shape values, b: argmax source (full shape); out: full shape
      int nn = b.shape[0], c = b.shape[1], h = b.shape[2], w = b.shape[3];
      int oh = a.shape[2], ow = a.shape[3];
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < c; ++j)
          for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
              int64_t best = -1;
              double bv = 0.0;
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                  int iy = 2 * y + dy, ix = 2 * x + dx;
                  int64_t off = ((static_cast<int64_t>(i) * c + j) * h + iy) * w + ix;
                  if (best < 0 || b.vals[off] > bv) {
                    best = off;
                    bv = b.vals[off];
                  }
                }
              out[best] += a.vals[((static_cast<int64_t>(i) * c + j) * oh + y) * ow + x];
            }
      break;
    }
  }
}

Tensor Tape::add(Tensor a, Tensor b) {
  own(a), own(b);
  require(same_shape(a.shape(), b.shape()), Errc::ShapeMismatch,
          "add " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  return push(Op::Add, a.id, b.id, a.shape(), {});
}

Tensor Tape::sub(Tensor a, Tensor b) {
  own(a), own(b);
  require(same_shape(a.shape(), b.shape()), Errc::ShapeMismatch,
          "sub " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  return push(Op::Sub, a.id, b.id, a.shape(), {});
}

Tensor Tape::mul(Tensor a, Tensor b) {
  own(a), own(b);
  require(same_shape(a.shape(), b.shape()), Errc::ShapeMismatch,
          "mul " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  return push(Op::Mul, a.id, b.id, a.shape(), {});
}

Tensor Tape::scale(Tensor a, double c) {
  own(a);
  Attrs at;
  at.d0 = c;
  return push(Op::Scale, a.id, -1, a.shape(), at);
}

Tensor Tape::shift(Tensor a, double c) {
  own(a);
  Attrs at;
  at.d0 = c;
  return push(Op::Shift, a.id, -1, a.shape(), at);
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  own(a), own(b);
  require(a.shape().size() == 2 && b.shape().size() == 2 && a.shape()[1] == b.shape()[0],
          Errc::ShapeMismatch, "matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  return push(Op::MatMul, a.id, b.id, Shape{a.shape()[0], b.shape()[1]}, {});
}

Tensor Tape::transpose(Tensor a) {
  own(a);
  require(a.shape().size() == 2, Errc::ShapeMismatch, "transpose needs rank 2");
  return push(Op::Transpose, a.id, -1, Shape{a.shape()[1], a.shape()[0]}, {});
}

Tensor Tape::bias_rows(Tensor x, Tensor b) {
  own(x), own(b);
  require(x.shape().size() == 2 && b.shape().size() == 1 && b.shape()[0] == x.shape()[1],
          Errc::ShapeMismatch, "bias_rows " + shape_str(x.shape()) + " + " + shape_str(b.shape()));
  return push(Op::BiasRows, x.id, b.id, x.shape(), {});
}

Tensor Tape::colsum(Tensor x) {
  own(x);
  require(x.shape().size() == 2, Errc::ShapeMismatch, "colsum needs rank 2");
  return push(Op::ColSum, x.id, -1, Shape{x.shape()[1]}, {});
}

Tensor Tape::broadcast_rows(Tensor v, int rows) {
  own(v);
  require(v.shape().size() == 1, Errc::ShapeMismatch, "broadcast_rows needs rank 1");
  return push(Op::BroadcastRows, v.id, -1, Shape{rows, v.shape()[0]}, {});
}

Tensor Tape::bias_chan(Tensor x, Tensor b) {
  own(x), own(b);
  require(x.shape().size() == 4 && b.shape().size() == 1 && b.shape()[0] == x.shape()[1],
          Errc::ShapeMismatch, "bias_chan " + shape_str(x.shape()) + " + " + shape_str(b.shape()));
  return push(Op::BiasChan, x.id, b.id, x.shape(), {});
}

Tensor Tape::chansum(Tensor x) {
  own(x);
  require(x.shape().size() == 4, Errc::ShapeMismatch, "chansum needs rank 4");
  return push(Op::ChanSum, x.id, -1, Shape{x.shape()[1]}, {});
}

Tensor Tape::broadcast_chan(Tensor v, int n, int h, int w) {
  own(v);
  require(v.shape().size() == 1, Errc::ShapeMismatch, "broadcast_chan needs rank 1");
  return push(Op::BroadcastChan, v.id, -1, Shape{n, v.shape()[0], h, w}, {});
}

Tensor Tape::conv2d(Tensor x, Tensor k, int stride, int pad) {
  own(x), own(k);
  require(x.shape().size() == 4 && k.shape().size() == 4 && k.shape()[1] == x.shape()[1],
          Errc::ShapeMismatch, "conv2d " + shape_str(x.shape()) + " * " + shape_str(k.shape()));
  int oh = (x.shape()[2] + 2 * pad - k.shape()[2]) / stride + 1;
  int ow = (x.shape()[3] + 2 * pad - k.shape()[3]) / stride + 1;
  require(stride >= 1 && oh >= 1 && ow >= 1, Errc::ShapeMismatch, "conv2d output would be empty");
  Attrs at;
  at.i0 = stride;
  at.i1 = pad;
  return push(Op::Conv, x.id, k.id, Shape{x.shape()[0], k.shape()[0], oh, ow}, at);
}

Tensor Tape::conv2d_transpose(Tensor x, Tensor k, int stride, int pad) {
  own(x), own(k);
  // kernel layout {Cin, Cout, kh, kw}: x's channels contract against dim 0
  require(x.shape().size() == 4 && k.shape().size() == 4 && k.shape()[0] == x.shape()[1],
          Errc::ShapeMismatch,
          "conv2d_transpose " + shape_str(x.shape()) + " * " + shape_str(k.shape()));
  int oh = (x.shape()[2] - 1) * stride - 2 * pad + k.shape()[2];
  int ow = (x.shape()[3] - 1) * stride - 2 * pad + k.shape()[3];
  require(oh >= 1 && ow >= 1, Errc::ShapeMismatch, "conv2d_transpose output would be empty");
  Attrs at;
  at.i0 = stride;
  at.i1 = pad;
  return push(Op::ConvDx, x.id, k.id, Shape{x.shape()[0], k.shape()[1], oh, ow}, at);
}

Tensor Tape::leaky_relu(Tensor x, double slope) {
  own(x);
  Attrs at;
  at.d0 = slope;
  return push(Op::LeakyRelu, x.id, -1, x.shape(), at);
}

Tensor Tape::tanh(Tensor x) {
  own(x);
  return push(Op::TanhOp, x.id, -1, x.shape(), {});
}

Tensor Tape::sigmoid(Tensor x) {
  own(x);
  return push(Op::SigmoidOp, x.id, -1, x.shape(), {});
}

Tensor Tape::softplus(Tensor x) {
  own(x);
  return push(Op::Softplus, x.id, -1, x.shape(), {});
}

Tensor Tape::square(Tensor x) {
  own(x);
  return push(Op::Square, x.id, -1, x.shape(), {});
}

Tensor Tape::recip(Tensor x) {
  own(x);
  return push(Op::Recip, x.id, -1, x.shape(), {});
}

Tensor Tape::reshape(Tensor x, const Shape& shape) {
  own(x);
  require(numel(shape) == x.size(), Errc::ShapeMismatch,
          "reshape " + shape_str(x.shape()) + " -> " + shape_str(shape));
  return push(Op::Reshape, x.id, -1, shape, {});
}

Tensor Tape::flatten_samples(Tensor x) {
  own(x);
  require(!x.shape().empty(), Errc::ShapeMismatch, "flatten_samples needs rank >= 1");
  int n = x.shape()[0];
  return reshape(x, Shape{n, static_cast<int>(x.size() / n)});
}

Tensor Tape::sum_all(Tensor x) {
  own(x);
  return push(Op::SumAll, x.id, -1, Shape{}, {});
}

Tensor Tape::mean_all(Tensor x) {
  own(x);
  return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

Tensor Tape::broadcast_scalar(Tensor s, const Shape& shape) {
  own(s);
  require(s.size() == 1, Errc::ShapeMismatch, "broadcast_scalar needs a scalar");
  return push(Op::BroadcastScalar, s.id, -1, shape, {});
}

Tensor Tape::sample_sum(Tensor x) {
  own(x);
  require(!x.shape().empty(), Errc::ShapeMismatch, "sample_sum needs rank >= 1");
  return push(Op::SampleSum, x.id, -1, Shape{x.shape()[0]}, {});
}

Tensor Tape::broadcast_sample(Tensor v, const Shape& shape) {
  own(v);
  require(v.shape().size() == 1 && !shape.empty() && shape[0] == v.shape()[0],
          Errc::ShapeMismatch, "broadcast_sample " + shape_str(v.shape()) + " -> " + shape_str(shape));
  return push(Op::BroadcastSample, v.id, -1, shape, {});
}

Tensor Tape::sample_mean(Tensor x) {
  own(x);
  int64_t rest = x.size() / x.shape()[0];
  return scale(sample_sum(x), 1.0 / static_cast<double>(rest));
}

Tensor Tape::l2norm_samples(Tensor x) {
  own(x);
  require(!x.shape().empty(), Errc::ShapeMismatch, "l2norm_samples needs rank >= 1");
  return push(Op::L2NormSamples, x.id, -1, Shape{x.shape()[0]}, {});
}

Tensor Tape::maxpool2(Tensor x) {
  own(x);
  require(x.shape().size() == 4, Errc::ShapeMismatch, "maxpool2 needs rank 4");
  Shape out{x.shape()[0], x.shape()[1], x.shape()[2] / 2, x.shape()[3] / 2};
  require(out[2] >= 1 && out[3] >= 1, Errc::ShapeMismatch, "maxpool2 input too small");
  return push(Op::MaxPool2, x.id, x.id, out, {});
}

Tensor Tape::maxpool2_gather(Tensor vals, Tensor idx_src) {
  Shape out{idx_src.shape()[0], idx_src.shape()[1], idx_src.shape()[2] / 2, idx_src.shape()[3] / 2};
  return push(Op::MaxPool2, vals.id, idx_src.id, out, {});
}

Tensor Tape::pool_scatter(Tensor g, Tensor idx_src) {
  return push(Op::PoolScatter, g.id, idx_src.id, idx_src.shape(), {});
}

std::vector<char> Tape::active_from_rg(int upto) const {
  std::vector<char> a(static_cast<size_t>(upto) + 1);
  for (int i = 0; i <= upto; ++i) a[i] = nodes_[i].requires_grad;
  return a;
}

std::vector<char> Tape::active_from_target(int upto, int target) const {
  std::vector<char> a(static_cast<size_t>(upto) + 1, 0);
  a[target] = 1;
  for (int i = target + 1; i <= upto; ++i) {
    const Node& n = nodes_[i];
    bool index_only = n.op == Op::MaxPool2 || n.op == Op::PoolScatter;
    bool act = (n.in0 >= 0 && a[n.in0]);
    if (!index_only && n.in1 >= 0 && a[n.in1]) act = true;
    a[i] = act;
  }
  return a;
}

GradMap Tape::backward_impl(Tensor out, const std::vector<char>& active) {
  if (out.size() != 1) {
    fail(Errc::NotScalar, "backward needs a scalar output, got " + shape_str(out.shape()));
  }
  GradMap gm;
  gm.tape_ = this;
  auto& gmap = gm.m_;
  gmap[out.id] = constant_fill(out.shape(), 1.0).id;

  auto accum = [&](int input, Tensor contrib) {
    auto it = gmap.find(input);
    if (it == gmap.end()) {
      gmap[input] = contrib.id;
    } else {
      it->second = add(wrap(it->second), contrib).id;
    }
  };

  const int start = out.id;
  for (int id = start; id >= 0; --id) {
    if (!active[id] || gmap.find(id) == gmap.end()) continue;
    // copy POD fields: emissions below may reallocate nodes_
    const Op op = nodes_[id].op;
    const int in0 = nodes_[id].in0;
    const int in1 = nodes_[id].in1;
    const Attrs at = nodes_[id].attrs;
    Tensor g = wrap(gmap[id]);
    Tensor y = wrap(id);
    const bool a0 = in0 >= 0 && active[in0];
    const bool a1 = in1 >= 0 && active[in1];
    if (!a0 && !a1) continue;

    switch (op) {
      case Op::Leaf:
        break;
      case Op::Add: {
        if (a0) accum(in0, g);
        if (a1) accum(in1, g);
        break;
      }
      case Op::Sub: {
        if (a0) accum(in0, g);
        if (a1) accum(in1, neg(g));
        break;
      }
      case Op::Mul: {
        if (a0) accum(in0, mul(g, wrap(in1)));
        if (a1) accum(in1, mul(g, wrap(in0)));
        break;
      }
      case Op::Scale: {
        if (a0) accum(in0, scale(g, at.d0));
        break;
      }
      case Op::Shift: {
        if (a0) accum(in0, g);
        break;
      }
      case Op::MatMul: {
        if (a0) accum(in0, matmul(g, transpose(wrap(in1))));
        if (a1) accum(in1, matmul(transpose(wrap(in0)), g));
        break;
      }
      case Op::Transpose: {
        if (a0) accum(in0, transpose(g));
        break;
      }
      case Op::BiasRows: {
        if (a0) accum(in0, g);
        if (a1) accum(in1, colsum(g));
        break;
      }
      case Op::ColSum: {
        if (a0) accum(in0, broadcast_rows(g, nodes_[in0].shape[0]));
        break;
      }
      case Op::BroadcastRows: {
        if (a0) accum(in0, colsum(g));
        break;
      }
      case Op::BiasChan: {
        if (a0) accum(in0, g);
        if (a1) accum(in1, chansum(g));
        break;
      }
      case Op::ChanSum: {
        if (a0) {
          const Shape& xs = nodes_[in0].shape;
          accum(in0, broadcast_chan(g, xs[0], xs[2], xs[3]));
        }
        break;
      }
      case Op::BroadcastChan: {
        if (a0) accum(in0, chansum(g));
        break;
      }
      case Op::Conv: {
        if (a0) {
          const Shape& xs = nodes_[in0].shape;
          Attrs dx;
          dx.i0 = at.i0, dx.i1 = at.i1;
          accum(in0, push(Op::ConvDx, g.id, in1, xs, dx));
        }
        if (a1) {
          const Shape& ks = nodes_[in1].shape;
          Attrs dk;
          dk.i0 = at.i0, dk.i1 = at.i1;
          accum(in1, push(Op::ConvDk, in0, g.id, ks, dk));
        }
        break;
      }
      case Op::ConvDx: {
        // y = convdx(a, k); upstream g is image-indexed
        if (a0) {
          // d/da = conv(g, k) with the same stride/pad
          const Shape& as = nodes_[in0].shape;
          Attrs c;
          c.i0 = at.i0, c.i1 = at.i1;
          Tensor contrib = push(Op::Conv, g.id, in1, as, c);
          accum(in0, contrib);
        }
        if (a1) {
          const Shape& ks = nodes_[in1].shape;
          Attrs dk;
          dk.i0 = at.i0, dk.i1 = at.i1;
          accum(in1, push(Op::ConvDk, g.id, in0, ks, dk));
        }
        break;
      }
      case Op::ConvDk: {
        // y = convdk(x, go); upstream g is kernel-indexed
        if (a0) {
          const Shape& xs = nodes_[in0].shape;
          Attrs dx;
          dx.i0 = at.i0, dx.i1 = at.i1;
          accum(in0, push(Op::ConvDx, in1, g.id, xs, dx));
        }
        if (a1) {
          const Shape& gs = nodes_[in1].shape;
          Attrs c;
          c.i0 = at.i0, c.i1 = at.i1;
          accum(in1, push(Op::Conv, in0, g.id, gs, c));
        }
        break;
      }
      case Op::LeakyRelu: {
        if (a0) {
          // mask is constant on the tape; the kink is measure-zero
          const auto& xv = nodes_[in0].vals;
          std::vector<double> mask(xv.size());
          for (size_t i = 0; i < xv.size(); ++i) mask[i] = xv[i] > 0.0 ? 1.0 : at.d0;
          Tensor m = constant(nodes_[in0].shape, mask);
          accum(in0, mul(g, m));
        }
        break;
      }
      case Op::TanhOp: {
        if (a0) accum(in0, mul(g, shift(scale(square(y), -1.0), 1.0)));
        break;
      }
      case Op::SigmoidOp: {
        if (a0) accum(in0, mul(g, mul(y, shift(scale(y, -1.0), 1.0))));
        break;
      }
      case Op::Softplus: {
        if (a0) accum(in0, mul(g, sigmoid(wrap(in0))));
        break;
      }
      case Op::Square: {
        if (a0) accum(in0, mul(g, scale(wrap(in0), 2.0)));
        break;
      }
      case Op::Recip: {
        if (a0) accum(in0, mul(g, scale(square(y), -1.0)));
        break;
      }
      case Op::Reshape: {
        if (a0) accum(in0, reshape(g, nodes_[in0].shape));
        break;
      }
      case Op::SumAll: {
        if (a0) accum(in0, broadcast_scalar(g, nodes_[in0].shape));
        break;
      }
      case Op::BroadcastScalar: {
        if (a0) accum(in0, sum_all(g));
        break;
      }
      case Op::SampleSum: {
        if (a0) accum(in0, broadcast_sample(g, nodes_[in0].shape));
        break;
      }
      case Op::BroadcastSample: {
        if (a0) accum(in0, sample_sum(g));
        break;
      }
      case Op::L2NormSamples: {
        if (a0) {
          Tensor t = mul(g, recip(y));
          accum(in0, mul(broadcast_sample(t, nodes_[in0].shape), wrap(in0)));
        }
        break;
      }
      case Op::MaxPool2: {
        if (a0) accum(in0, pool_scatter(g, wrap(in1)));
        break;
      }
      case Op::PoolScatter: {
        if (a0) accum(in0, maxpool2_gather(g, wrap(in1)));
        break;
      }
    }
  }
  return gm;
}

GradMap Tape::backward(Tensor out) {
  own(out);
  return backward_impl(out, active_from_rg(out.id));
}

Tensor Tape::gradient(Tensor out, Tensor wrt) {
  own(out), own(wrt);
  if (wrt.id > out.id) fail(Errc::Disconnected, "wrt does not participate in output");
  auto active = active_from_target(out.id, wrt.id);
  if (!active[out.id]) fail(Errc::Disconnected, "wrt does not participate in output");
  GradMap gm = backward_impl(out, active);
  auto it = gm.m_.find(wrt.id);
  if (it == gm.m_.end()) return constant_fill(wrt.shape(), 0.0);
  return wrap(it->second);
}

}  // namespace bytegan::ad
