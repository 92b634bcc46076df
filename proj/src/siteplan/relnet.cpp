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

#include "siteplan/relnet.hpp"

#include <algorithm>
#include <cmath>

#include "siteplan/error.hpp"
#include "siteplan/rng.hpp"

namespace siteplan {

namespace {

using ad::Mat;
using ad::Var;

std::string RoundName(int r) { return "round" + std::to_string(r); }
std::string HeadName(int r, int k) { return RoundName(r) + ".head" + std::to_string(k); }

int NodeFeatureDim(const ModelConfig& c) {
  return c.num_categories + kNodeBoxFeatures + kOrientationFeatures;
}

void AddMlp(ParamSet& p, const std::string& name, int in, int hidden, int out, Rng& rng) {
  p.AddWeight(name + ".w1", hidden, in, in, rng);
  p.AddConstant(name + ".b1", hidden, 1, 0.0);
  p.AddWeight(name + ".w2", out, hidden, hidden, rng);
  p.AddConstant(name + ".b2", out, 1, 0.0);
}

Var Mlp(ad::Tape& t, const ParamSet& p, const std::string& name, Var x) {
  Var hidden = ad::Relu(ad::Linear(p.Bind(t, name + ".w1"), p.Bind(t, name + ".b1"), x));
  return ad::Linear(p.Bind(t, name + ".w2"), p.Bind(t, name + ".b2"), hidden);
}

// Union-graph bookkeeping for one batch.
struct Layout {
  int samples = 0;
  int total = 0;                    // union columns
  std::vector<int> existing_pos;    // union column of every existing node
  std::vector<int> existing_sample;
  std::vector<int> new_pos;         // union column of each sample's new node
  std::vector<int> sample_offset;   // first existing-node index per sample
  std::vector<double> inv_count;    // 1 / |V| per sample
};

Layout MakeLayout(const std::vector<ModelInput>& batch, const ModelConfig& config) {
  Layout lay;
  lay.samples = static_cast<int>(batch.size());
  if (batch.empty()) Fail(ErrorCode::kInvalidArgument, "empty batch");
  for (int b = 0; b < lay.samples; ++b) {
    const RelationGraph* g = batch[static_cast<size_t>(b)].graph;
    if (g == nullptr || g->size() == 0) {
      Fail(ErrorCode::kInvalidArgument, "graph has no nodes to condition on");
    }
    if (g->size() > config.max_nodes) {
      Fail(ErrorCode::kTooLarge, "graph has " + std::to_string(g->size()) + " nodes, limit " +
                                     std::to_string(config.max_nodes));
    }
    lay.sample_offset.push_back(static_cast<int>(lay.existing_pos.size()));
    for (int i = 0; i < g->size(); ++i) {
      lay.existing_pos.push_back(lay.total + i);
      lay.existing_sample.push_back(b);
    }
    lay.total += g->size();
    lay.new_pos.push_back(lay.total);
    lay.total += 1;
    lay.inv_count.push_back(1.0 / g->size());
  }
  return lay;
}

// Mean over each sample's existing nodes of the columns of x (already
// restricted to existing nodes): dim x samples.
Var SampleMean(Var x, const Layout& lay) {
  Var sums = ad::ScatterAddCols(x, lay.existing_sample, lay.samples);
  Mat w(1, lay.samples);
  for (int b = 0; b < lay.samples; ++b) w(0, b) = lay.inv_count[static_cast<size_t>(b)];
  return ad::ScaleCols(sums, x.tape->Constant(std::move(w)));
}

}  // namespace

void ModelConfig::Validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) Fail(ErrorCode::kInvalidArgument, std::string("model config: ") + name + " must be positive");
  };
  positive(max_nodes, "max_nodes");
  positive(conv_channels, "conv_channels");
  positive(node_dim, "node_dim");
  positive(hidden_dim, "hidden_dim");
  positive(message_dim, "message_dim");
  positive(heads, "heads");
  positive(rounds, "rounds");
  positive(mixtures, "mixtures");
  positive(num_categories, "num_categories");
  positive(visual.clue_dim, "clue_dim");
  if (image_resolution < 32 || image_resolution % 16 != 0) {
    Fail(ErrorCode::kInvalidArgument, "model config: image_resolution must be a multiple of 16, at least 32");
  }
  positive(visual.bins, "bins");
  positive(visual.lateral_channels, "lateral_channels");
  for (int c : visual.channels) positive(c, "channels");
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"max_nodes", max_nodes},
          {"conv_channels", conv_channels},
          {"node_dim", node_dim},
          {"hidden_dim", hidden_dim},
          {"message_dim", message_dim},
          {"heads", heads},
          {"rounds", rounds},
          {"mixtures", mixtures},
          {"num_categories", num_categories},
          {"use_visual", use_visual},
          {"image_resolution", image_resolution},
          {"visual",
           {{"channels", visual.channels},
            {"lateral_channels", visual.lateral_channels},
            {"bins", visual.bins},
            {"clue_dim", visual.clue_dim}}},
          {"seed", seed}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& doc) {
  ModelConfig c;
  try {
    c.max_nodes = doc.value("max_nodes", c.max_nodes);
    c.conv_channels = doc.value("conv_channels", c.conv_channels);
    c.node_dim = doc.value("node_dim", c.node_dim);
    c.hidden_dim = doc.value("hidden_dim", c.hidden_dim);
    c.message_dim = doc.value("message_dim", c.message_dim);
    c.heads = doc.value("heads", c.heads);
    c.rounds = doc.value("rounds", c.rounds);
    c.mixtures = doc.value("mixtures", c.mixtures);
    c.num_categories = doc.value("num_categories", c.num_categories);
    c.use_visual = doc.value("use_visual", c.use_visual);
    c.image_resolution = doc.value("image_resolution", c.image_resolution);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("visual")) {
      const auto& v = doc.at("visual");
      c.visual.channels = v.value("channels", c.visual.channels);
      c.visual.lateral_channels = v.value("lateral_channels", c.visual.lateral_channels);
      c.visual.bins = v.value("bins", c.visual.bins);
      c.visual.clue_dim = v.value("clue_dim", c.visual.clue_dim);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("model config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::vector<double> NodeFeatures(const RelationGraph& graph, int node, int num_categories) {
  const RelationNode& n = graph.nodes[static_cast<size_t>(node)];
  std::vector<double> out = NodeLabelOneHot(n, num_categories);
  const auto box = NodeBoxAttribute(n);
  const double gw = graph.grid_w > 0 ? graph.grid_w : 1;
  const double gh = graph.grid_h > 0 ? graph.grid_h : 1;
  out.push_back(box[0] / gw);
  out.push_back(box[1] / gh);
  out.push_back(box[2] / gw);
  out.push_back(box[3] / gh);
  for (int q = 0; q < kOrientationFeatures; ++q) {
    out.push_back(Degrees(n.orientation) == 90 * q ? 1.0 : 0.0);
  }
  return out;
}

std::vector<double> EdgeFeatures(const RelationEdge& edge, int grid_w) {
  std::vector<double> out(kEdgeFeatureDim, 0.0);
  out[static_cast<size_t>(edge.type_index() - 1)] = 1.0;
  out[kNumEdgeTypes] = edge.distance / std::max(grid_w, 1);
  for (int k = 0; k < kNumAlignmentBits; ++k) {
    out[static_cast<size_t>(kNumEdgeTypes + 1 + k)] = edge.alignment[static_cast<size_t>(k)] ? 1.0 : 0.0;
  }
  return out;
}

double EdgeDistribution::LogLikelihood(const std::vector<int>& target, double eps) const {
  if (static_cast<int>(target.size()) != nodes) {
    Fail(ErrorCode::kInvalidArgument, "target length differs from node count");
  }
  std::vector<double> joint(static_cast<size_t>(mixtures));
  for (int s = 0; s < mixtures; ++s) {
    double lp = std::log(std::max(alpha[static_cast<size_t>(s)], eps));
    for (int j = 0; j < nodes; ++j) {
      const int c = target[static_cast<size_t>(j)];
      if (c < 0 || c >= kNumEdgeClasses) Fail(ErrorCode::kInvalidArgument, "target class out of range");
      lp += std::log(std::max(Theta(s, j, c), eps));
    }
    joint[static_cast<size_t>(s)] = lp;
  }
  const double m = *std::max_element(joint.begin(), joint.end());
  double sum = 0;
  for (double v : joint) sum += std::exp(v - m);
  return m + std::log(sum);
}

EdgeSample SampleEdges(const EdgeDistribution& dist, DecodeMode mode, std::uint64_t seed) {
  EdgeSample out;
  Rng rng(seed);
  auto draw = [&](auto prob, int count) {
    const double u = rng.Unit();
    double acc = 0;
    for (int k = 0; k < count; ++k) {
      acc += prob(k);
      if (u < acc) return k;
    }
    return count - 1;
  };
  if (mode == DecodeMode::kArgmax) {
    out.mixture = static_cast<int>(std::max_element(dist.alpha.begin(), dist.alpha.end()) -
                                   dist.alpha.begin());
  } else {
    out.mixture = draw([&](int s) { return dist.alpha[static_cast<size_t>(s)]; }, dist.mixtures);
  }
  for (int j = 0; j < dist.nodes; ++j) {
    int best = 0;
    if (mode == DecodeMode::kArgmax) {
      for (int c = 1; c < kNumEdgeClasses; ++c) {
        if (dist.Theta(out.mixture, j, c) > dist.Theta(out.mixture, j, best)) best = c;
      }
    } else {
      best = draw([&](int c) { return dist.Theta(out.mixture, j, c); }, kNumEdgeClasses);
    }
    if (best != 0) out.edges.push_back({j, best});
  }
  out.empty = out.edges.empty();
  return out;
}

namespace {
constexpr double kNoEdgePriorLogit = 4.0;
}  // namespace

RelationModel::RelationModel(ModelConfig config) : config_(std::move(config)) {
  config_.Validate();
  Rng rng(config_.seed);
  const ModelConfig& c = config_;
  const int ch = c.conv_channels;
  params_.AddWeight("init.conv1.w", ch, kNumEdgeClasses * 3, kNumEdgeClasses * 3, rng);
  params_.AddWeight("init.conv2.w", ch, ch * 3, ch * 3, rng);
  params_.AddWeight("init.w", c.node_dim, ch + NodeFeatureDim(c), ch + NodeFeatureDim(c), rng);
  params_.AddConstant("init.b", c.node_dim, 1, 0.0);
  if (c.use_visual) {
    AddVisualParams(c.visual, params_, rng);
    for (int r = 0; r < c.rounds; ++r) {
      params_.AddWeight("clue.proj" + std::to_string(r) + ".w", c.node_dim, c.visual.clue_dim,
                        c.visual.clue_dim, rng);
    }
    const int lc = c.visual.lateral_channels;
    clue_stats_.mean = Eigen::VectorXd::Zero(lc);
    clue_stats_.var = Eigen::VectorXd::Ones(lc);
  }
  AddMlp(params_, "ctx", 2 * c.node_dim, c.hidden_dim, c.node_dim, rng);
  const int pair_in = 2 * c.node_dim + kEdgeFeatureDim;
  for (int r = 0; r < c.rounds; ++r) {
    for (int k = 0; k < c.heads; ++k) {
      const std::string h = HeadName(r, k);
      params_.AddWeight(h + ".msg.wi", c.message_dim, c.node_dim, pair_in, rng);
      params_.AddWeight(h + ".msg.wj", c.message_dim, c.node_dim, pair_in, rng);
      params_.AddWeight(h + ".msg.we", c.message_dim, kEdgeFeatureDim, pair_in, rng);
      params_.AddConstant(h + ".msg.b1", c.message_dim, 1, 0.0);
      params_.AddWeight(h + ".msg.w2", c.message_dim, c.message_dim, c.message_dim, rng);
      params_.AddConstant(h + ".msg.b2", c.message_dim, 1, 0.0);
      params_.AddWeight(h + ".att.wi", 1, c.node_dim, pair_in, rng);
      params_.AddWeight(h + ".att.wj", 1, c.node_dim, pair_in, rng);
      params_.AddWeight(h + ".att.we", 1, kEdgeFeatureDim, pair_in, rng);
      params_.AddConstant(h + ".att.b", 1, 1, 0.0);
    }
    const std::string g = RoundName(r) + ".gru";
    const int in = c.heads * c.message_dim;
    for (const char* gate : {"z", "r", "n"}) {
      params_.AddWeight(g + ".w" + gate, c.node_dim, in, in, rng);
      params_.AddWeight(g + ".u" + gate, c.node_dim, c.node_dim, c.node_dim, rng);
      params_.AddConstant(g + ".b" + gate, c.node_dim, 1, 0.0);
    }
  }
  AddMlp(params_, "alpha", 2 * c.node_dim, c.hidden_dim, c.mixtures, rng);
  AddMlp(params_, "theta", 2 * c.node_dim, c.hidden_dim, c.mixtures * kNumEdgeClasses, rng);
  // Start near the sparse prior: most existing nodes share no edge with the
  // new one.
  Mat& prior = params_.at("theta.b2").value;
  for (Eigen::Index row = 0; row < prior.rows(); ++row) {
    prior(row, 0) = row % kNumEdgeClasses == 0 ? kNoEdgePriorLogit : -kNoEdgePriorLogit;
  }
}

Var RelationModel::InitNodes(ad::Tape& tape, const std::vector<ModelInput>& batch,
                             int pad_to) const {
  const Layout lay = MakeLayout(batch, config_);
  const ModelConfig& c = config_;
  // Connectivity rows, one run of positions per (sample, node).
  std::vector<std::pair<int, int>> runs;
  std::vector<int> row_of_col;
  std::vector<double> mask;
  int cols = 0;
  for (const auto& item : batch) {
    const int n = item.graph->size();
    const int len = pad_to > 0 ? pad_to : n;
    if (len < n) Fail(ErrorCode::kInvalidArgument, "pad length below node count");
    cols += n * len;
  }
  Mat onehot = Mat::Zero(kNumEdgeClasses, cols);
  int col = 0;
  int row = 0;
  for (const auto& item : batch) {
    const RelationGraph& g = *item.graph;
    const int n = g.size();
    const int len = pad_to > 0 ? pad_to : n;
    for (int i = 0; i < n; ++i, ++row) {
      runs.emplace_back(col, len);
      for (int j = 0; j < len; ++j, ++col) {
        row_of_col.push_back(row);
        if (j < n) {
          onehot(g.A(i, j), col) = 1.0;
          mask.push_back(1.0);
        } else {
          mask.push_back(0.0);
        }
      }
    }
  }
  Var mask_var = tape.Constant(Eigen::Map<const Mat>(mask.data(), 1, cols));
  Var x = tape.Constant(std::move(onehot));
  x = ad::Relu(ad::MatMul(params_.Bind(tape, "init.conv1.w"), ad::Unfold1d(x, runs)));
  x = ad::ScaleCols(x, mask_var);
  x = ad::Relu(ad::MatMul(params_.Bind(tape, "init.conv2.w"), ad::Unfold1d(x, runs)));
  x = ad::ScaleCols(x, mask_var);
  const int nodes = static_cast<int>(lay.existing_pos.size());
  Var pooled = ad::ScatterAddCols(x, row_of_col, nodes);
  Mat inv(1, nodes);
  for (int k = 0; k < nodes; ++k) {
    inv(0, k) = lay.inv_count[static_cast<size_t>(lay.existing_sample[static_cast<size_t>(k)])];
  }
  pooled = ad::ScaleCols(pooled, tape.Constant(std::move(inv)));

  Mat attrs(NodeFeatureDim(c), nodes);
  int k = 0;
  for (const auto& item : batch) {
    for (int i = 0; i < item.graph->size(); ++i, ++k) {
      const auto f = NodeFeatures(*item.graph, i, c.num_categories);
      attrs.col(k) = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    }
  }
  Var h = ad::Tanh(ad::Linear(params_.Bind(tape, "init.w"), params_.Bind(tape, "init.b"),
                              ad::ConcatRows({pooled, tape.Constant(std::move(attrs))})));
  return ad::ScatterAddCols(h, lay.existing_pos, lay.total);
}

ForwardOutput RelationModel::Forward(ad::Tape& tape, const std::vector<ModelInput>& batch,
                                     const ForwardOptions& options) {
  return Run(tape, batch, options, clue_stats_);
}

ForwardOutput RelationModel::Forward(ad::Tape& tape, const std::vector<ModelInput>& batch,
                                     const ForwardOptions& options) const {
  ad::BatchNormStats scratch = clue_stats_;
  return Run(tape, batch, options, scratch);
}

ForwardOutput RelationModel::Run(ad::Tape& tape, const std::vector<ModelInput>& batch,
                                 const ForwardOptions& options, ad::BatchNormStats& stats) const {
  const ModelConfig& c = config_;
  const Layout lay = MakeLayout(batch, c);
  const int nodes = static_cast<int>(lay.existing_pos.size());
  const ParamSet& p = params_;

  Var h = InitNodes(tape, batch, options.pad_to);

  // Visual clues of the existing nodes, clue_dim x nodes.
  std::optional<Var> clues;
  if (c.use_visual) {
    std::vector<const SiteImage*> images;
    std::vector<ClueBox> boxes;
    for (int b = 0; b < lay.samples; ++b) {
      const ModelInput& item = batch[static_cast<size_t>(b)];
      if (item.image == nullptr) Fail(ErrorCode::kInvalidArgument, "sample has no site image");
      if (item.image->resolution != c.image_resolution) {
        Fail(ErrorCode::kInvalidArgument, "site image resolution " + std::to_string(item.image->resolution) +
                                              " differs from the model's " + std::to_string(c.image_resolution));
      }
      images.push_back(item.image);
      for (const auto& n : item.graph->nodes) boxes.push_back({b, n.merged_obb});
    }
    const Pyramid pyramid = EncodeImages(tape, p, c.visual, images);
    clues = CropClues(tape, p, c.visual, pyramid, images, boxes, options.training, stats);
  }

  // Edge lists: aggregator i receives from neighbor j.
  std::vector<int> agg, nbr;
  std::vector<std::vector<double>> feats;
  for (int b = 0; b < lay.samples; ++b) {
    const RelationGraph& g = *batch[static_cast<size_t>(b)].graph;
    const int base = lay.existing_pos[static_cast<size_t>(lay.sample_offset[static_cast<size_t>(b)])];
    for (const auto& e : g.edges) {
      agg.push_back(base + e.src);
      nbr.push_back(base + e.dst);
      feats.push_back(EdgeFeatures(e, g.grid_w));
    }
    std::vector<double> unknown(kEdgeFeatureDim, 0.0);
    unknown.back() = 1.0;
    const int fresh = lay.new_pos[static_cast<size_t>(b)];
    for (int j = 0; j < g.size(); ++j) {
      agg.push_back(fresh);
      nbr.push_back(base + j);
      feats.push_back(unknown);
      agg.push_back(base + j);
      nbr.push_back(fresh);
      feats.push_back(unknown);
    }
  }
  Mat edge_mat(kEdgeFeatureDim, static_cast<Eigen::Index>(feats.size()));
  for (size_t e = 0; e < feats.size(); ++e) {
    edge_mat.col(static_cast<Eigen::Index>(e)) =
        Eigen::Map<const Eigen::VectorXd>(feats[e].data(), kEdgeFeatureDim);
  }
  Var edge_attr = tape.Constant(std::move(edge_mat));

  ForwardOutput out;
  out.node_sample = lay.existing_sample;
  out.sample_offset = lay.sample_offset;
  for (int r = 0; r < c.rounds; ++r) {
    Var clue_r = tape.Constant(Mat::Zero(c.node_dim, lay.total));
    std::optional<Var> clue_exist;
    if (clues) {
      clue_exist = ad::MatMul(p.Bind(tape, "clue.proj" + std::to_string(r) + ".w"), *clues);
      clue_r = ad::ScatterAddCols(*clue_exist, lay.existing_pos, lay.total);
    }
    Var hc = Mlp(tape, p, "ctx", ad::ConcatRows({h, clue_r}));
    std::vector<Var> heads;
    for (int k = 0; k < c.heads; ++k) {
      const std::string name = HeadName(r, k);
      Var pre = ad::Add(
          ad::Add(ad::GatherCols(ad::MatMul(p.Bind(tape, name + ".msg.wi"), hc), agg),
                  ad::GatherCols(ad::MatMul(p.Bind(tape, name + ".msg.wj"), hc), nbr)),
          ad::MatMul(p.Bind(tape, name + ".msg.we"), edge_attr));
      Var hidden = ad::Relu(ad::AddBias(pre, p.Bind(tape, name + ".msg.b1")));
      Var msg = ad::Linear(p.Bind(tape, name + ".msg.w2"), p.Bind(tape, name + ".msg.b2"), hidden);
      Var score = ad::Add(
          ad::Add(ad::GatherCols(ad::MatMul(p.Bind(tape, name + ".att.wi"), hc), agg),
                  ad::GatherCols(ad::MatMul(p.Bind(tape, name + ".att.wj"), hc), nbr)),
          ad::MatMul(p.Bind(tape, name + ".att.we"), edge_attr));
      score = ad::Relu(ad::AddBias(score, p.Bind(tape, name + ".att.b")));
      Var att = ad::SegmentSoftmax(score, agg, lay.total);
      heads.push_back(ad::ScatterAddCols(ad::ScaleCols(msg, att), agg, lay.total));
    }
    Var x = heads.size() == 1 ? heads[0] : ad::ConcatRows(heads);
    const std::string g = RoundName(r) + ".gru";
    auto gate = [&](const std::string& name, Var hidden_part) {
      return ad::AddBias(ad::Add(ad::MatMul(p.Bind(tape, g + ".w" + name), x), hidden_part),
                         p.Bind(tape, g + ".b" + name));
    };
    Var z = ad::Sigmoid(gate("z", ad::MatMul(p.Bind(tape, g + ".uz"), h)));
    Var reset = ad::Sigmoid(gate("r", ad::MatMul(p.Bind(tape, g + ".ur"), h)));
    Var cand = ad::Tanh(gate("n", ad::Mul(reset, ad::MatMul(p.Bind(tape, g + ".un"), h))));
    h = ad::Add(cand, ad::Mul(z, ad::Sub(h, cand)));
    out.graph_features.push_back(SampleMean(ad::GatherCols(h, lay.existing_pos), lay));
    if (clue_exist) out.image_features.push_back(SampleMean(*clue_exist, lay));
  }

  std::vector<int> fresh_of_node(static_cast<size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    fresh_of_node[static_cast<size_t>(k)] =
        lay.new_pos[static_cast<size_t>(lay.existing_sample[static_cast<size_t>(k)])];
  }
  out.states = h;
  Var pair = ad::ConcatRows({ad::GatherCols(h, lay.existing_pos), ad::GatherCols(h, fresh_of_node)});
  out.alpha_logits = ad::ScatterAddCols(Mlp(tape, p, "alpha", pair), lay.existing_sample, lay.samples);
  out.theta_logits = Mlp(tape, p, "theta", pair);
  return out;
}

std::vector<EdgeDistribution> ToDistributions(const ForwardOutput& out) {
  const Mat& a = out.alpha_logits.value();
  const Mat& z = out.theta_logits.value();
  const int mixtures = static_cast<int>(a.rows());
  const int samples = static_cast<int>(a.cols());
  std::vector<EdgeDistribution> dists(static_cast<size_t>(samples));
  for (int b = 0; b < samples; ++b) {
    EdgeDistribution& d = dists[static_cast<size_t>(b)];
    d.mixtures = mixtures;
    const Eigen::VectorXd la = ad::LogSoftmax(a.col(b));
    d.alpha.assign(la.data(), la.data() + la.size());
    for (double& v : d.alpha) v = std::exp(v);
    const int start = out.sample_offset[static_cast<size_t>(b)];
    const int end = b + 1 < samples ? out.sample_offset[static_cast<size_t>(b) + 1]
                                    : static_cast<int>(z.cols());
    d.nodes = end - start;
    d.theta.assign(static_cast<size_t>(mixtures) * d.nodes * kNumEdgeClasses, 0.0);
    for (int s = 0; s < mixtures; ++s) {
      for (int j = 0; j < d.nodes; ++j) {
        // Sigmoids renormalized in log space so that no slice underflows.
        Eigen::VectorXd logs(kNumEdgeClasses);
        for (int cls = 0; cls < kNumEdgeClasses; ++cls) {
          logs(cls) = ad::LogSigmoid(z(s * kNumEdgeClasses + cls, start + j));
        }
        const Eigen::VectorXd norm = ad::LogSoftmax(logs);
        double* slot = &d.theta[(static_cast<size_t>(s) * d.nodes + j) * kNumEdgeClasses];
        for (int cls = 0; cls < kNumEdgeClasses; ++cls) slot[cls] = std::exp(norm(cls));
      }
    }
  }
  return dists;
}

EdgeDistribution RelationModel::Predict(const RelationGraph& graph, const SiteImage* image) const {
  ad::Tape tape(false);
  const ForwardOutput out = Forward(tape, {ModelInput{&graph, image}}, ForwardOptions{});
  return ToDistributions(out).front();
}

}  // namespace siteplan
