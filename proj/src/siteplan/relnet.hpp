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

// Relation network: predicts, for a graph plus its site image, a mixture of
// per-node categoricals over the edge class from every existing node to one
// new node.
//
// A batch is the disjoint union of its samples. Within a sample the columns
// are the existing nodes in graph order followed by the new node, which is
// linked to every existing node in both directions by an edge of unknown type.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "siteplan/autodiff.hpp"
#include "siteplan/graph.hpp"
#include "siteplan/params.hpp"
#include "siteplan/render.hpp"
#include "siteplan/visual.hpp"

namespace siteplan {

inline constexpr int kEdgeFeatureDim = kNumEdgeTypes + 1 + kNumAlignmentBits + 1;
inline constexpr int kNodeBoxFeatures = 4;
inline constexpr int kOrientationFeatures = 4;

struct ModelConfig {
  int max_nodes = 128;     // larger graphs are rejected
  int conv_channels = 16;  // connectivity convolution width
  int node_dim = 128;
  int hidden_dim = 128;    // hidden width of the node and head MLPs
  int message_dim = 32;
  int heads = 4;
  int rounds = 4;
  int mixtures = 10;
  int num_categories = 12;
  bool use_visual = true;  // false: clues are zero and the encoder is absent
  int image_resolution = kDeskResolution;  // site renders fed to the encoder
  VisualConfig visual;
  std::uint64_t seed = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& doc);
};

struct ModelInput {
  const RelationGraph* graph = nullptr;
  const SiteImage* image = nullptr;  // may be null when use_visual is false
};

struct ForwardOutput {
  ad::Var alpha_logits;  // mixtures x samples
  ad::Var theta_logits;  // (mixtures * classes) x existing nodes of the batch
  std::vector<int> node_sample;
  std::vector<int> sample_offset;  // first existing-node column per sample
  ad::Var states;  // final node states, node_dim x union columns
  // Per round: mean node state and mean projected clue per sample, dim x samples.
  std::vector<ad::Var> graph_features;
  std::vector<ad::Var> image_features;
};

struct ForwardOptions {
  bool training = false;  // batch statistics in the clue block
  int pad_to = 0;         // connectivity rows padded to this length (0: none)
};

// Edge distribution of one sample. theta is row-major [mixture][node][class].
struct EdgeDistribution {
  int mixtures = 0;
  int nodes = 0;
  std::vector<double> alpha;
  std::vector<double> theta;

  double Theta(int s, int j, int c) const {
    return theta[(static_cast<size_t>(s) * nodes + j) * kNumEdgeClasses + c];
  }
  // log sum_s alpha_s prod_j theta[s, j, target_j], with class probabilities
  // floored at eps.
  double LogLikelihood(const std::vector<int>& target, double eps = 1e-12) const;
};

struct PredictedEdge {
  int node = 0;        // existing node index
  int edge_type = 0;   // 1..16
};

enum class DecodeMode { kArgmax, kSample };

struct EdgeSample {
  std::vector<PredictedEdge> edges;
  int mixture = 0;
  bool empty = false;
};

EdgeSample SampleEdges(const EdgeDistribution& dist, DecodeMode mode, std::uint64_t seed = 0);

class RelationModel {
 public:
  explicit RelationModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  ad::BatchNormStats& clue_stats() { return clue_stats_; }
  const ad::BatchNormStats& clue_stats() const { return clue_stats_; }

  // Throws kTooLarge for graphs above max_nodes and kInvalidArgument for
  // empty graphs or missing images. Training mode updates the running clue
  // statistics; inference leaves the model untouched.
  ForwardOutput Forward(ad::Tape& tape, const std::vector<ModelInput>& batch,
                        const ForwardOptions& options);
  ForwardOutput Forward(ad::Tape& tape, const std::vector<ModelInput>& batch,
                        const ForwardOptions& options) const;

  // Inference for one graph.
  EdgeDistribution Predict(const RelationGraph& graph, const SiteImage* image) const;

  // Initial node states of the union batch, node_dim x columns (new-node
  // columns zero). Exposed for tests.
  ad::Var InitNodes(ad::Tape& tape, const std::vector<ModelInput>& batch, int pad_to) const;

 private:
  ForwardOutput Run(ad::Tape& tape, const std::vector<ModelInput>& batch,
                    const ForwardOptions& options, ad::BatchNormStats& stats) const;

  ModelConfig config_;
  ParamSet params_;
  ad::BatchNormStats clue_stats_;
};

// Distributions of every sample in a forward output.
std::vector<EdgeDistribution> ToDistributions(const ForwardOutput& out);

// Node and edge feature vectors fed to the network.
std::vector<double> NodeFeatures(const RelationGraph& graph, int node, int num_categories);
std::vector<double> EdgeFeatures(const RelationEdge& edge, int grid_w);

}  // namespace siteplan
