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

// Training samples, the objective, the optimization loop and evaluation.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "siteplan/graph.hpp"
#include "siteplan/heatmap.hpp"
#include "siteplan/metrics.hpp"
#include "siteplan/relnet.hpp"
#include "siteplan/render.hpp"
#include "siteplan/scene.hpp"
#include "siteplan/synth.hpp"

namespace siteplan {

enum class Variant { kFull, kNoMatchingLoss, kGraphOnly };

const char* VariantName(Variant v);
Variant ParseVariant(const std::string& name);

// Reduced scene (one architectural unit removed), its graph and render, and
// the edge class from every remaining node to the removed unit.
struct TrainSample {
  std::string source;  // scene name or path
  int held_out_unit = 0;
  Scene scene;
  RelationGraph graph;
  SiteImage image;
  std::vector<int> target;
  OBB target_box;
  Orientation target_orientation = Orientation::k0;
  int target_category = 0;
};

struct SampleReport {
  int scenes = 0;
  int samples = 0;
  std::vector<std::string> skipped;  // scenes without any architectural unit
};

// One sample per architectural unit; held-out units whose removal leaves no
// node are skipped.
std::vector<TrainSample> MakeSamples(const Scene& scene, const Catalog& catalog, int resolution,
                                     const std::string& source = {});

// Samples of every scene (held-out unit restored) in one split of a
// generated dataset. Throws kCatalogMismatch when the dataset was built
// against another catalog.
std::vector<TrainSample> LoadSplit(const DatasetManifest& manifest, const Catalog& catalog,
                                   bool train, int resolution, SampleReport* report = nullptr);

struct TrainConfig {
  int batch_size = 8;
  double lr = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 1;
  double gamma = 10.0;
  Variant variant = Variant::kFull;
  int patience = 10;        // epochs without validation improvement; 0 disables
  double nll_floor = 1e-12; // floor on probabilities in reported likelihoods

  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& doc);
};

// Model hyperparameters implied by the variant (graph_only drops the visual
// stream).
ModelConfig ApplyVariant(ModelConfig model, Variant variant);

struct LossTerms {
  ad::Var total;
  double nll = 0;
  double matching = 0;
  std::vector<double> matching_per_round;
};

// Mixture NLL summed over the batch plus, for the full variant, the symmetric
// matching loss of every round.
LossTerms ComputeLoss(const ForwardOutput& out, const std::vector<const TrainSample*>& batch,
                      const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_nll = 0;       // mean per sample over the epoch
  double train_matching = 0;  // mean per batch
  double val_nll = 0;         // mean per sample, inference mode
  bool has_val = false;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double initial_train_nll = 0;  // inference mode, before the first update
  double final_train_nll = 0;    // inference mode, with the kept parameters
  int best_epoch = 0;
  bool early_stopped = false;
};

// Mean per-sample NLL in inference mode.
double MeanNll(const RelationModel& model, const std::vector<TrainSample>& samples, int batch_size,
               double floor = 1e-12);

// Deterministic given the seed. Keeps the parameters of the best validation
// epoch when validation samples are given. Throws kDiverged naming the batch
// on a non-finite loss. Each epoch appends one JSON line to log when set.
TrainResult Train(RelationModel& model, const std::vector<TrainSample>& train,
                  const std::vector<TrainSample>& val, const TrainConfig& config,
                  std::ostream* log = nullptr);

struct EvalOptions {
  DecodeMode mode = DecodeMode::kArgmax;
  std::uint64_t seed = 0;
  int target_size = 0;  // 0: scaled default
};

struct EvalReport {
  ScoreRow mean;
  int samples = 0;            // scored samples
  int empty_predictions = 0;  // scored as zero
  int no_truth = 0;           // held-out unit related to nothing; not scored
  std::vector<ScoreRow> rows;

  nlohmann::json ToJson() const;
};

// Predicted edges decoded to a heatmap and scored against the heatmap of the
// true edges; empty predictions score zero. Overlap means cover only samples
// with a non-empty predicted heatmap.
EvalReport Evaluate(const RelationModel& model, const std::vector<TrainSample>& samples,
                    const EvalOptions& options = {});

}  // namespace siteplan
