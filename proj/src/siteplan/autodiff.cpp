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

#include "siteplan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "siteplan/error.hpp"

namespace siteplan::ad {

using Eigen::Index;

// ---------------------------------------------------------------------------
// Tape

Var Tape::Constant(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, nullptr, false});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Leaf(Parameter& param) {
  nodes_.push_back(Node{param.value, Mat(), nullptr, record_ ? &param : nullptr, record_});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Input(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, nullptr, record_});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Mat& Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id)];
  if (!n.needs) Fail(ErrorCode::kInvalidArgument, "value carries no gradient");
  return n.grad;
}

Var Tape::Push(Mat value, std::initializer_list<Var> inputs, BackFn backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || nodes_[static_cast<size_t>(v.id)].needs;
  nodes_.push_back(Node{std::move(value), Mat(), needs ? std::move(backward) : nullptr,
                        nullptr, needs});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Push(Mat value, const std::vector<Var>& inputs, BackFn backward) {
  bool needs = false;
  for (Var v : inputs) needs = needs || nodes_[static_cast<size_t>(v.id)].needs;
  nodes_.push_back(Node{std::move(value), Mat(), needs ? std::move(backward) : nullptr,
                        nullptr, needs});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Mat* Tape::GradBuffer(Var v) {
  Node& n = nodes_[static_cast<size_t>(v.id)];
  if (!n.needs) return nullptr;
  if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
  return &n.grad;
}

void Tape::Backward(Var loss) {
  if (value(loss).size() != 1) Fail(ErrorCode::kInvalidArgument, "loss must be a scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  Mat* seed = GradBuffer(loss);
  if (seed == nullptr) return;
  (*seed)(0, 0) = 1.0;
  for (size_t k = nodes_.size(); k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.needs || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      if (n.param->grad.size() == 0) n.param->ZeroGrad();
      n.param->grad += n.grad;
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise and linear algebra

namespace {

void CheckSameShape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    Fail(ErrorCode::kInvalidArgument, std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var MatMul(Var a, Var b) {
  Tape& t = *a.tape;
  if (a.cols() != b.rows()) Fail(ErrorCode::kInvalidArgument, "MatMul: shape mismatch");
  return t.Push(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) ga->noalias() += g * t.value(b).transpose();
    if (Mat* gb = t.GradBuffer(b)) gb->noalias() += t.value(a).transpose() * g;
  });
}

Var Add(Var a, Var b) {
  CheckSameShape(a.value(), b.value(), "Add");
  return a.tape->Push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    t.Accumulate(a, g);
    t.Accumulate(b, g);
  });
}

Var Sub(Var a, Var b) {
  CheckSameShape(a.value(), b.value(), "Sub");
  return a.tape->Push(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    t.Accumulate(a, g);
    if (Mat* gb = t.GradBuffer(b)) *gb -= g;
  });
}

Var Mul(Var a, Var b) {
  CheckSameShape(a.value(), b.value(), "Mul");
  return a.tape->Push(a.value().cwiseProduct(b.value()), {a, b},
                      [a, b](Tape& t, const Mat& g) {
                        if (Mat* ga = t.GradBuffer(a)) *ga += g.cwiseProduct(t.value(b));
                        if (Mat* gb = t.GradBuffer(b)) *gb += g.cwiseProduct(t.value(a));
                      });
}

Var AddBias(Var a, Var bias) {
  if (bias.cols() != 1 || bias.rows() != a.rows()) {
    Fail(ErrorCode::kInvalidArgument, "AddBias: bias must be a matching column");
  }
  Mat out = a.value().colwise() + bias.value().col(0);
  return a.tape->Push(std::move(out), {a, bias}, [a, bias](Tape& t, const Mat& g) {
    t.Accumulate(a, g);
    if (Mat* gb = t.GradBuffer(bias)) *gb += g.rowwise().sum();
  });
}

Var Scale(Var a, double s) {
  return a.tape->Push(a.value() * s, {a}, [a, s](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) *ga += g * s;
  });
}

Var Affine(Var a, double s, double b) {
  Mat out = (a.value().array() * s + b).matrix();
  return a.tape->Push(std::move(out), {a}, [a, s](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) *ga += g * s;
  });
}

Var Relu(Var a) {
  return a.tape->Push(a.value().cwiseMax(0.0), {a}, [a](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) {
      *ga += (t.value(a).array() > 0.0).select(g, 0.0);
    }
  });
}

Var Tanh(Var a) {
  Mat out = a.value().array().tanh().matrix();
  const Var y = a.tape->NextVar();
  return a.tape->Push(std::move(out), {a}, [a, y](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) {
      *ga += (g.array() * (1.0 - t.value(y).array().square())).matrix();
    }
  });
}

Var Sigmoid(Var a) {
  Mat out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  const Var y = a.tape->NextVar();
  return a.tape->Push(std::move(out), {a}, [a, y](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) {
      const auto s = t.value(y).array();
      *ga += (g.array() * s * (1.0 - s)).matrix();
    }
  });
}

Var Sum(Var a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->Push(std::move(out), {a}, [a](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) ga->array() += g(0, 0);
  });
}

Var SumCols(Var a) {
  return a.tape->Push(a.value().rowwise().sum(), {a}, [a](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) ga->colwise() += g.col(0);
  });
}

// ---------------------------------------------------------------------------
// Shape plumbing

Var ConcatRows(const std::vector<Var>& parts) {
  if (parts.empty()) Fail(ErrorCode::kInvalidArgument, "ConcatRows: no parts");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (Var p : parts) {
    if (p.cols() != cols) Fail(ErrorCode::kInvalidArgument, "ConcatRows: column mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts[0].tape->Push(std::move(out), parts, [parts](Tape& t, const Mat& g) {
    Index r = 0;
    for (Var p : parts) {
      const Index n = t.value(p).rows();
      if (Mat* gp = t.GradBuffer(p)) *gp += g.middleRows(r, n);
      r += n;
    }
  });
}

Var ConcatCols(const std::vector<Var>& parts) {
  if (parts.empty()) Fail(ErrorCode::kInvalidArgument, "ConcatCols: no parts");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (Var p : parts) {
    if (p.rows() != rows) Fail(ErrorCode::kInvalidArgument, "ConcatCols: row mismatch");
    cols += p.cols();
  }
  Mat out(rows, cols);
  Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return parts[0].tape->Push(std::move(out), parts, [parts](Tape& t, const Mat& g) {
    Index c = 0;
    for (Var p : parts) {
      const Index n = t.value(p).cols();
      if (Mat* gp = t.GradBuffer(p)) *gp += g.middleCols(c, n);
      c += n;
    }
  });
}

Var SliceRows(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    Fail(ErrorCode::kInvalidArgument, "SliceRows: out of range");
  }
  return a.tape->Push(a.value().middleRows(start, count), {a},
                      [a, start, count](Tape& t, const Mat& g) {
                        if (Mat* ga = t.GradBuffer(a)) ga->middleRows(start, count) += g;
                      });
}

Var SliceCols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    Fail(ErrorCode::kInvalidArgument, "SliceCols: out of range");
  }
  return a.tape->Push(a.value().middleCols(start, count), {a},
                      [a, start, count](Tape& t, const Mat& g) {
                        if (Mat* ga = t.GradBuffer(a)) ga->middleCols(start, count) += g;
                      });
}

Var Reshape(Var a, Index rows, Index cols) {
  if (rows * cols != a.value().size()) Fail(ErrorCode::kInvalidArgument, "Reshape: size mismatch");
  Mat out = Eigen::Map<const Mat>(a.value().data(), rows, cols);
  return a.tape->Push(std::move(out), {a}, [a](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) {
      Eigen::Map<Mat>(ga->data(), g.rows(), g.cols()) += g;
    }
  });
}

Var GatherCols(Var a, const std::vector<int>& index) {
  const Mat& v = a.value();
  Mat out(v.rows(), static_cast<Index>(index.size()));
  for (size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= v.cols()) Fail(ErrorCode::kInvalidArgument, "GatherCols: index");
    out.col(static_cast<Index>(k)) = v.col(index[k]);
  }
  return a.tape->Push(std::move(out), {a}, [a, index](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) {
      for (size_t k = 0; k < index.size(); ++k) ga->col(index[k]) += g.col(static_cast<Index>(k));
    }
  });
}

Var ScatterAddCols(Var a, const std::vector<int>& index, Index cols) {
  const Mat& v = a.value();
  if (static_cast<Index>(index.size()) != v.cols()) {
    Fail(ErrorCode::kInvalidArgument, "ScatterAddCols: index size");
  }
  Mat out = Mat::Zero(v.rows(), cols);
  for (size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= cols) Fail(ErrorCode::kInvalidArgument, "ScatterAddCols: index");
    out.col(index[k]) += v.col(static_cast<Index>(k));
  }
  return a.tape->Push(std::move(out), {a}, [a, index](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) {
      for (size_t k = 0; k < index.size(); ++k) ga->col(static_cast<Index>(k)) += g.col(index[k]);
    }
  });
}

Var ScaleCols(Var a, Var weights) {
  if (weights.rows() != 1 || weights.cols() != a.cols()) {
    Fail(ErrorCode::kInvalidArgument, "ScaleCols: weights must be 1 x cols");
  }
  Mat out = a.value() * weights.value().row(0).asDiagonal();
  return a.tape->Push(std::move(out), {a, weights}, [a, weights](Tape& t, const Mat& g) {
    if (Mat* ga = t.GradBuffer(a)) *ga += g * t.value(weights).row(0).asDiagonal();
    if (Mat* gw = t.GradBuffer(weights)) {
      *gw += g.cwiseProduct(t.value(a)).colwise().sum();
    }
  });
}

Var SegmentSoftmax(Var scores, const std::vector<int>& segment, int segments) {
  const Mat& s = scores.value();
  if (s.rows() != 1 || static_cast<Index>(segment.size()) != s.cols()) {
    Fail(ErrorCode::kInvalidArgument, "SegmentSoftmax: scores must be 1 x E");
  }
  std::vector<double> peak(static_cast<size_t>(segments), -std::numeric_limits<double>::infinity());
  for (size_t e = 0; e < segment.size(); ++e) {
    auto& p = peak[static_cast<size_t>(segment[e])];
    p = std::max(p, s(0, static_cast<Index>(e)));
  }
  std::vector<double> total(static_cast<size_t>(segments), 0.0);
  Mat out(1, s.cols());
  for (size_t e = 0; e < segment.size(); ++e) {
    const size_t k = static_cast<size_t>(segment[e]);
    out(0, static_cast<Index>(e)) = std::exp(s(0, static_cast<Index>(e)) - peak[k]);
    total[k] += out(0, static_cast<Index>(e));
  }
  for (size_t e = 0; e < segment.size(); ++e) {
    out(0, static_cast<Index>(e)) /= total[static_cast<size_t>(segment[e])];
  }
  const Var y = scores.tape->NextVar();
  return scores.tape->Push(std::move(out), {scores},
                           [scores, y, segment, segments](Tape& t, const Mat& g) {
                             Mat* gs = t.GradBuffer(scores);
                             if (gs == nullptr) return;
                             const Mat& p = t.value(y);
                             std::vector<double> dot(static_cast<size_t>(segments), 0.0);
                             for (size_t e = 0; e < segment.size(); ++e) {
                               dot[static_cast<size_t>(segment[e])] +=
                                   g(0, static_cast<Index>(e)) * p(0, static_cast<Index>(e));
                             }
                             for (size_t e = 0; e < segment.size(); ++e) {
                               const Index i = static_cast<Index>(e);
                               (*gs)(0, i) += p(0, i) * (g(0, i) - dot[static_cast<size_t>(segment[e])]);
                             }
                           });
}

// ---------------------------------------------------------------------------
// Convolutions

namespace {

Mat Im2Col3x3(const Mat& x, const ImageShape& s, int stride, int ho, int wo) {
  const Index out_px = static_cast<Index>(ho) * wo;
  Mat cols = Mat::Zero(static_cast<Index>(s.channels) * 9, out_px * s.batch);
  for (int b = 0; b < s.batch; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const Index col = b * out_px + static_cast<Index>(oy) * wo + ox;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= s.height) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox * stride + kx - 1;
            if (ix < 0 || ix >= s.width) continue;
            const Index src = b * s.pixels() + static_cast<Index>(iy) * s.width + ix;
            for (int c = 0; c < s.channels; ++c) {
              cols(c * 9 + ky * 3 + kx, col) = x(c, src);
            }
          }
        }
      }
    }
  }
  return cols;
}

void Col2Im3x3(const Mat& cols, const ImageShape& s, int stride, int ho, int wo, Mat& dx) {
  const Index out_px = static_cast<Index>(ho) * wo;
  for (int b = 0; b < s.batch; ++b) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        const Index col = b * out_px + static_cast<Index>(oy) * wo + ox;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * stride + ky - 1;
          if (iy < 0 || iy >= s.height) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox * stride + kx - 1;
            if (ix < 0 || ix >= s.width) continue;
            const Index dst = b * s.pixels() + static_cast<Index>(iy) * s.width + ix;
            for (int c = 0; c < s.channels; ++c) {
              dx(c, dst) += cols(c * 9 + ky * 3 + kx, col);
            }
          }
        }
      }
    }
  }
}

}  // namespace

Var Conv3x3(Var x, Var weight, Var bias, const ImageShape& shape, int stride) {
  if (x.rows() != shape.channels || x.cols() != shape.pixels() * shape.batch) {
    Fail(ErrorCode::kInvalidArgument, "Conv3x3: input does not match its shape");
  }
  if (weight.cols() != shape.channels * 9 || bias.rows() != weight.rows() || bias.cols() != 1) {
    Fail(ErrorCode::kInvalidArgument, "Conv3x3: weight shape mismatch");
  }
  const int ho = ConvOutSize(shape.height, stride);
  const int wo = ConvOutSize(shape.width, stride);
  Mat cols = Im2Col3x3(x.value(), shape, stride, ho, wo);
  Mat out = weight.value() * cols;
  out.colwise() += bias.value().col(0);
  Tape& tape = *x.tape;
  const bool need_cols = tape.needs_grad(weight);
  return tape.Push(std::move(out), {x, weight, bias},
                   [x, weight, bias, shape, stride, ho, wo,
                    cols = need_cols ? std::move(cols) : Mat()](Tape& t, const Mat& g) {
                     if (Mat* gw = t.GradBuffer(weight)) gw->noalias() += g * cols.transpose();
                     if (Mat* gb = t.GradBuffer(bias)) *gb += g.rowwise().sum();
                     if (Mat* gx = t.GradBuffer(x)) {
                       const Mat dcols = t.value(weight).transpose() * g;
                       Col2Im3x3(dcols, shape, stride, ho, wo, *gx);
                     }
                   });
}

Var Unfold1d(Var a, const std::vector<std::pair<int, int>>& runs) {
  const Mat& v = a.value();
  const Index channels = v.rows();
  // Column -> (run start, run end) lookup.
  std::vector<std::pair<int, int>> bounds(static_cast<size_t>(v.cols()), {-1, -1});
  for (auto [start, len] : runs) {
    for (int c = start; c < start + len; ++c) bounds[static_cast<size_t>(c)] = {start, start + len};
  }
  for (const auto& b : bounds) {
    if (b.first < 0) Fail(ErrorCode::kInvalidArgument, "Unfold1d: runs must cover all columns");
  }
  Mat out = Mat::Zero(channels * 3, v.cols());
  for (Index col = 0; col < v.cols(); ++col) {
    const auto [lo, hi] = bounds[static_cast<size_t>(col)];
    for (int tap = 0; tap < 3; ++tap) {
      const Index src = col + tap - 1;
      if (src < lo || src >= hi) continue;
      for (Index c = 0; c < channels; ++c) out(c * 3 + tap, col) = v(c, src);
    }
  }
  return a.tape->Push(std::move(out), {a}, [a, bounds, channels](Tape& t, const Mat& g) {
    Mat* ga = t.GradBuffer(a);
    if (ga == nullptr) return;
    for (Index col = 0; col < g.cols(); ++col) {
      const auto [lo, hi] = bounds[static_cast<size_t>(col)];
      for (int tap = 0; tap < 3; ++tap) {
        const Index src = col + tap - 1;
        if (src < lo || src >= hi) continue;
        for (Index c = 0; c < channels; ++c) (*ga)(c, src) += g(c * 3 + tap, col);
      }
    }
  });
}

Var BatchNorm(Var x, Var gamma, Var beta, bool training, BatchNormStats* running,
              double momentum, double eps) {
  const Mat& v = x.value();
  const Index n = v.cols();
  if (gamma.rows() != v.rows() || beta.rows() != v.rows()) {
    Fail(ErrorCode::kInvalidArgument, "BatchNorm: parameter shape mismatch");
  }
  Eigen::VectorXd mean, var;
  if (training) {
    if (n < 1) Fail(ErrorCode::kInvalidArgument, "BatchNorm: empty batch");
    mean = v.rowwise().mean();
    var = (v.colwise() - mean).array().square().rowwise().mean().matrix();
    if (running != nullptr) {
      const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
      if (running->mean.size() != mean.size()) {
        running->mean = Eigen::VectorXd::Zero(mean.size());
        running->var = Eigen::VectorXd::Ones(mean.size());
      }
      running->mean = (1 - momentum) * running->mean + momentum * mean;
      running->var = (1 - momentum) * running->var + momentum * unbias * var;
    }
  } else {
    if (running == nullptr || running->mean.size() != v.rows()) {
      Fail(ErrorCode::kInvalidArgument, "BatchNorm: running statistics missing");
    }
    mean = running->mean;
    var = running->var;
  }
  const Eigen::VectorXd inv_std = (var.array() + eps).rsqrt().matrix();
  Mat xhat = (v.colwise() - mean).array().colwise() * inv_std.array();
  Mat out = (xhat.array().colwise() * gamma.value().col(0).array()).colwise() +
            beta.value().col(0).array();
  return x.tape->Push(std::move(out), {x, gamma, beta},
                      [x, gamma, beta, training, inv_std, xhat](Tape& t, const Mat& g) {
                        if (Mat* gg = t.GradBuffer(gamma)) *gg += g.cwiseProduct(xhat).rowwise().sum();
                        if (Mat* gb = t.GradBuffer(beta)) *gb += g.rowwise().sum();
                        Mat* gx = t.GradBuffer(x);
                        if (gx == nullptr) return;
                        const Mat dxhat = g.array().colwise() * t.value(gamma).col(0).array();
                        if (!training) {
                          *gx += (dxhat.array().colwise() * inv_std.array()).matrix();
                          return;
                        }
                        const double n = static_cast<double>(g.cols());
                        const Eigen::VectorXd sum_d = dxhat.rowwise().sum();
                        const Eigen::VectorXd sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
                        Mat d = (n * dxhat).colwise() - sum_d;
                        d -= (xhat.array().colwise() * sum_dx.array()).matrix();
                        *gx += (d.array().colwise() * (inv_std.array() / n)).matrix();
                      });
}

// ---------------------------------------------------------------------------
// Region pooling

namespace {

// Antiderivative of the basis function of sample k (centered at k + 0.5) of
// the clamped linear interpolant over n samples.
double BasisIntegral(int k, int n, double u) {
  const double c = k + 0.5;
  const double t = u - c;
  if (n == 1) return u;
  auto rising = [](double t) {  // integral of the left half of a hat, from c - 1
    if (t <= -1) return 0.0;
    if (t <= 0) return 0.5 * (t + 1) * (t + 1);
    return 0.5;
  };
  auto falling = [](double t) {  // integral of the right half, from c
    if (t <= 0) return 0.0;
    if (t <= 1) return t - 0.5 * t * t;
    return 0.5;
  };
  if (k == 0) return (t <= 0 ? t : 0.0) + falling(t);
  if (k == n - 1) return rising(t) + (t > 0 ? t : 0.0);
  return rising(t) + falling(t);
}

}  // namespace

Mat IntervalAverageWeights(int n, double lo, double hi, int bins) {
  if (!(hi > lo) || bins < 1 || n < 1) {
    Fail(ErrorCode::kInvalidArgument, "region must have positive extent");
  }
  Mat w = Mat::Zero(bins, n);
  const double step = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    const double a0 = lo + b * step;
    const double a1 = b + 1 == bins ? hi : a0 + step;
    for (int k = 0; k < n; ++k) {
      w(b, k) = (BasisIntegral(k, n, a1) - BasisIntegral(k, n, a0)) / (a1 - a0);
    }
  }
  return w;
}

Var RegionPool(Var features, const ImageShape& shape, const std::vector<PoolRegion>& regions,
               int bins) {
  const Mat& f = features.value();
  if (f.rows() != shape.channels || f.cols() != shape.pixels() * shape.batch) {
    Fail(ErrorCode::kInvalidArgument, "RegionPool: features do not match their shape");
  }
  struct Plan {
    Mat wx, wy;  // restricted to [x_lo, x_lo + wx.cols()) etc.
    int x_lo, y_lo;
    Index base;
  };
  auto span = [](const Mat& w, int& lo) {
    int first = static_cast<int>(w.cols()), last = -1;
    for (Index k = 0; k < w.cols(); ++k) {
      if (w.col(k).cwiseAbs().maxCoeff() > 0) {
        first = std::min(first, static_cast<int>(k));
        last = static_cast<int>(k);
      }
    }
    lo = first;
    return Mat(w.middleCols(first, last - first + 1));
  };
  std::vector<Plan> plans;
  plans.reserve(regions.size());
  for (const auto& r : regions) {
    if (r.image < 0 || r.image >= shape.batch) Fail(ErrorCode::kInvalidArgument, "RegionPool: image");
    Plan p;
    p.wx = span(IntervalAverageWeights(shape.width, r.x0, r.x1, bins), p.x_lo);
    p.wy = span(IntervalAverageWeights(shape.height, r.y0, r.y1, bins), p.y_lo);
    p.base = r.image * shape.pixels();
    plans.push_back(std::move(p));
  }
  const Index cells = static_cast<Index>(bins) * bins;
  const Index channels = shape.channels;
  const Index width = shape.width;
  using Strided = Eigen::Map<const Mat, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
  Mat out(channels, cells * static_cast<Index>(regions.size()));
  for (size_t r = 0; r < plans.size(); ++r) {
    const Plan& p = plans[r];
    for (Index c = 0; c < channels; ++c) {
      // block(x, y) = f(c, base + (y_lo + y) * width + x_lo + x)
      const double* origin = f.data() + c + (p.base + p.y_lo * width + p.x_lo) * channels;
      Strided block(origin, p.wx.cols(), p.wy.cols(),
                    Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(width * channels, channels));
      const Mat pooled = p.wx * block * p.wy.transpose();  // (bx, by)
      for (Index k = 0; k < cells; ++k) out(c, static_cast<Index>(r) * cells + k) = pooled.data()[k];
    }
  }
  return features.tape->Push(
      std::move(out), {features}, [features, plans, channels, width, cells, bins](Tape& t, const Mat& g) {
        Mat* gf = t.GradBuffer(features);
        if (gf == nullptr) return;
        using StridedMut = Eigen::Map<Mat, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
        Mat dpooled(bins, bins);
        for (size_t r = 0; r < plans.size(); ++r) {
          const Plan& p = plans[r];
          for (Index c = 0; c < channels; ++c) {
            for (Index k = 0; k < cells; ++k) dpooled.data()[k] = g(c, static_cast<Index>(r) * cells + k);
            double* origin = gf->data() + c + (p.base + p.y_lo * width + p.x_lo) * channels;
            StridedMut block(origin, p.wx.cols(), p.wy.cols(),
                             Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(width * channels, channels));
            block += p.wx.transpose() * dpooled * p.wy;
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Losses

double LogSigmoid(double z) {
  return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

Eigen::VectorXd LogSoftmax(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  const double lse = m + std::log((v.array() - m).exp().sum());
  return (v.array() - lse).matrix();
}

Var CosineMatrix(Var a, Var b) {
  const Mat& va = a.value();
  const Mat& vb = b.value();
  if (va.rows() != vb.rows()) Fail(ErrorCode::kInvalidArgument, "CosineMatrix: dimension mismatch");
  const Eigen::VectorXd na = va.colwise().norm().transpose();
  const Eigen::VectorXd nb = vb.colwise().norm().transpose();
  Mat dots = va.transpose() * vb;
  Mat out = Mat::Zero(va.cols(), vb.cols());
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      if (na(i) > 0 && nb(j) > 0) out(i, j) = dots(i, j) / (na(i) * nb(j));
    }
  }
  const Var y = a.tape->NextVar();
  return a.tape->Push(std::move(out), {a, b}, [a, b, y, na, nb](Tape& t, const Mat& g) {
    const Mat& va = t.value(a);
    const Mat& vb = t.value(b);
    const Mat& s = t.value(y);
    // Zero-norm columns are constants of value 0; their gradient is taken as 0.
    Mat gm = g;
    for (Index i = 0; i < gm.rows(); ++i) {
      for (Index j = 0; j < gm.cols(); ++j) {
        if (!(na(i) > 0 && nb(j) > 0)) gm(i, j) = 0;
      }
    }
    if (Mat* ga = t.GradBuffer(a)) {
      for (Index i = 0; i < va.cols(); ++i) {
        if (!(na(i) > 0)) continue;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(va.rows());
        double self = 0;
        for (Index j = 0; j < vb.cols(); ++j) {
          if (!(nb(j) > 0)) continue;
          acc += gm(i, j) * vb.col(j) / (na(i) * nb(j));
          self += gm(i, j) * s(i, j);
        }
        ga->col(i) += acc - self * va.col(i) / (na(i) * na(i));
      }
    }
    if (Mat* gb = t.GradBuffer(b)) {
      for (Index j = 0; j < vb.cols(); ++j) {
        if (!(nb(j) > 0)) continue;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(vb.rows());
        double self = 0;
        for (Index i = 0; i < va.cols(); ++i) {
          if (!(na(i) > 0)) continue;
          acc += gm(i, j) * va.col(i) / (na(i) * nb(j));
          self += gm(i, j) * s(i, j);
        }
        gb->col(j) += acc - self * vb.col(j) / (nb(j) * nb(j));
      }
    }
  });
}

Var SymmetricMatchLoss(Var similarity, double gamma) {
  const Mat& s = similarity.value();
  if (s.rows() != s.cols()) Fail(ErrorCode::kInvalidArgument, "SymmetricMatchLoss: square input");
  const Mat x = gamma * s;
  const Index z = x.rows();
  Mat row_p(z, z), col_p(z, z);
  double loss = 0;
  for (Index i = 0; i < z; ++i) {
    const Eigen::VectorXd lr = LogSoftmax(x.row(i).transpose());
    const Eigen::VectorXd lc = LogSoftmax(x.col(i));
    loss -= lr(i) + lc(i);
    row_p.row(i) = lr.array().exp().transpose();
    col_p.col(i) = lc.array().exp();
  }
  Mat out(1, 1);
  out(0, 0) = loss;
  return similarity.tape->Push(std::move(out), {similarity},
                               [similarity, gamma, row_p, col_p](Tape& t, const Mat& g) {
                                 Mat* gs = t.GradBuffer(similarity);
                                 if (gs == nullptr) return;
                                 Mat d = row_p + col_p;
                                 d.diagonal().array() -= 2.0;
                                 *gs += g(0, 0) * gamma * d;
                               });
}

Var MixtureNll(Var alpha_logits, Var theta_logits, int classes,
               const std::vector<int>& node_sample, const std::vector<int>& target) {
  const Mat& a = alpha_logits.value();
  const Mat& z = theta_logits.value();
  const Index mixtures = a.rows();
  const Index samples = a.cols();
  if (z.rows() != mixtures * classes || z.cols() != static_cast<Index>(node_sample.size()) ||
      target.size() != node_sample.size()) {
    Fail(ErrorCode::kInvalidArgument, "MixtureNll: shape mismatch");
  }
  // Per (mixture, node): log theta of the target class and the normalizer.
  Mat log_alpha(mixtures, samples);
  for (Index s = 0; s < samples; ++s) log_alpha.col(s) = LogSoftmax(a.col(s));
  Mat joint = log_alpha;  // mixtures x samples
  // sig holds the sigmoids, prob the renormalized class probabilities; the
  // normalizer is taken in log space so extreme logits stay finite.
  Mat sig(z.rows(), z.cols());
  Mat prob(z.rows(), z.cols());
  Eigen::VectorXd logs(classes);
  for (Index j = 0; j < z.cols(); ++j) {
    const int tj = target[static_cast<size_t>(j)];
    if (tj < 0 || tj >= classes) Fail(ErrorCode::kInvalidArgument, "MixtureNll: target class");
    const Index sample = node_sample[static_cast<size_t>(j)];
    for (Index m = 0; m < mixtures; ++m) {
      for (int c = 0; c < classes; ++c) {
        const double zc = z(m * classes + c, j);
        logs(c) = LogSigmoid(zc);
        sig(m * classes + c, j) = std::exp(logs(c));
      }
      const Eigen::VectorXd norm = LogSoftmax(logs);
      for (int c = 0; c < classes; ++c) prob(m * classes + c, j) = std::exp(norm(c));
      joint(m, sample) += norm(tj);
    }
  }
  Mat post(mixtures, samples);
  double loss = 0;
  for (Index s = 0; s < samples; ++s) {
    const Eigen::VectorXd lw = LogSoftmax(joint.col(s));
    const double m = joint.col(s).maxCoeff();
    loss -= m + std::log((joint.col(s).array() - m).exp().sum());
    post.col(s) = lw.array().exp();
  }
  Mat out(1, 1);
  out(0, 0) = loss;
  return alpha_logits.tape->Push(
      std::move(out), {alpha_logits, theta_logits},
      [alpha_logits, theta_logits, classes, node_sample, target, log_alpha, post, sig, prob](
          Tape& t, const Mat& g) {
        const double scale = g(0, 0);
        if (Mat* ga = t.GradBuffer(alpha_logits)) {
          *ga -= scale * (post - log_alpha.array().exp().matrix());
        }
        Mat* gz = t.GradBuffer(theta_logits);
        if (gz == nullptr) return;
        const Index mixtures = post.rows();
        for (Index j = 0; j < sig.cols(); ++j) {
          const Index sample = node_sample[static_cast<size_t>(j)];
          const int tj = target[static_cast<size_t>(j)];
          for (Index m = 0; m < mixtures; ++m) {
            const double w = post(m, sample);
            for (int c = 0; c < classes; ++c) {
              const double sv = sig(m * classes + c, j);
              double d = -(1 - sv) * prob(m * classes + c, j);
              if (c == tj) d += 1 - sv;
              (*gz)(m * classes + c, j) -= scale * w * d;
            }
          }
        }
      });
}

}  // namespace siteplan::ad
