// Copyright 2026 The Siteplan Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal reverse-mode differentiation over dense double matrices.
//
// Values are laid out features x items (one column per node, edge or pixel).
// A Tape records every op; Backward() replays them in reverse. Ops whose
// inputs carry no gradient record no closure, so an inference tape costs
// only the forward arithmetic.

#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace siteplan::ad {

using Mat = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

class Tape {
 public:
  using BackFn = std::function<void(Tape&, const Mat&)>;

  Var Constant(Mat value);
  // Gradient flows into param.grad on Backward(). On a tape built with
  // record = false parameters behave as constants.
  Var Leaf(Parameter& param);
  // Differentiable input without a backing parameter; read its gradient
  // with grad() after Backward().
  Var Input(Mat value);

  explicit Tape(bool record = true) : record_(record) {}

  const Mat& value(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  const Mat& grad(Var v) const;
  bool needs_grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].needs; }
  bool recording() const { return record_; }
  size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 loss and propagates.
  void Backward(Var loss);

  // Op plumbing. NextVar() is the handle the next Push returns, for
  // closures that read their own output.
  Var NextVar() { return Var{this, static_cast<int>(nodes_.size())}; }
  Var Push(Mat value, std::initializer_list<Var> inputs, BackFn backward);
  Var Push(Mat value, const std::vector<Var>& inputs, BackFn backward);
  // Zero-initialized gradient buffer of v, or nullptr when v needs none.
  Mat* GradBuffer(Var v);
  void Accumulate(Var v, const Mat& g) {
    if (Mat* buf = GradBuffer(v)) *buf += g;
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    BackFn backward;
    Parameter* param = nullptr;
    bool needs = false;
  };
  std::deque<Node> nodes_;
  bool record_;
};

inline const Mat& Var::value() const { return tape->value(*this); }

// Elementwise and linear algebra.
Var MatMul(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var AddBias(Var a, Var bias);  // bias is rows x 1, broadcast over columns
Var Scale(Var a, double s);
Var Affine(Var a, double s, double t);  // s * a + t
Var Relu(Var a);
Var Tanh(Var a);
Var Sigmoid(Var a);
Var Sum(Var a);      // 1 x 1
Var SumCols(Var a);  // rows x 1

// Shape plumbing.
Var ConcatRows(const std::vector<Var>& parts);
Var ConcatCols(const std::vector<Var>& parts);
Var SliceRows(Var a, Eigen::Index start, Eigen::Index count);
Var SliceCols(Var a, Eigen::Index start, Eigen::Index count);
Var Reshape(Var a, Eigen::Index rows, Eigen::Index cols);  // column-major
Var GatherCols(Var a, const std::vector<int>& index);
Var ScatterAddCols(Var a, const std::vector<int>& index, Eigen::Index cols);
Var ScaleCols(Var a, Var weights);  // weights 1 x cols

// Softmax of a 1 x E score row within groups of columns sharing a segment id.
Var SegmentSoftmax(Var scores, const std::vector<int>& segment, int segments);

// Dense layer W x + b.
inline Var Linear(Var w, Var b, Var x) { return AddBias(MatMul(w, x), b); }

struct ImageShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  int batch = 1;

  Eigen::Index pixels() const { return static_cast<Eigen::Index>(height) * width; }
};

// 3x3 convolution, zero padding 1. Input columns are ordered
// (image, row, col); weight is out_channels x (in_channels * 9) with inner
// order (channel, ky, kx).
Var Conv3x3(Var x, Var weight, Var bias, const ImageShape& shape, int stride);
inline int ConvOutSize(int in, int stride) { return (in - 1) / stride + 1; }

// Width-3 1D unfolding with zero padding at the ends of every run of
// consecutive columns. runs holds (start, length) pairs covering all
// columns. Output is (channels * 3) x cols with inner order (channel, tap).
Var Unfold1d(Var a, const std::vector<std::pair<int, int>>& runs);

struct BatchNormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

// Per-row normalization over columns. In training mode the column statistics
// are used (and folded into running with the given momentum when running is
// non-null); otherwise running statistics are used.
Var BatchNorm(Var x, Var gamma, Var beta, bool training, BatchNormStats* running,
              double momentum = 0.1, double eps = 1e-5);

// Average of the clamped bilinear interpolant of a feature map over an
// axis-aligned region, split into bins x bins cells. Coordinates are in the
// map's pixel units with sample k centered at k + 0.5.
struct PoolRegion {
  int image = 0;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};
Var RegionPool(Var features, const ImageShape& shape, const std::vector<PoolRegion>& regions,
               int bins);

// Cosine similarity of every column of a against every column of b; columns
// with zero norm yield 0.
Var CosineMatrix(Var a, Var b);

// -sum_z log softmax_row(gamma S)[z, z] - sum_z log softmax_col(gamma S)[z, z].
Var SymmetricMatchLoss(Var similarity, double gamma);

// Mixture-of-categoricals negative log likelihood summed over a batch.
// alpha_logits: mixtures x samples. theta_logits: (mixtures * classes) x
// nodes, class probabilities are sigmoids renormalized per (mixture, node).
// node_sample maps each node column to its sample; target holds the class
// per node.
Var MixtureNll(Var alpha_logits, Var theta_logits, int classes,
               const std::vector<int>& node_sample, const std::vector<int>& target);

// Helpers shared with inference code.
double LogSigmoid(double z);
Eigen::VectorXd LogSoftmax(const Eigen::VectorXd& v);

// Weights of the exact bin averages of the clamped 1D linear interpolant of
// n samples over [lo, hi] split into bins; bins x n.
Mat IntervalAverageWeights(int n, double lo, double hi, int bins);

}  // namespace siteplan::ad
