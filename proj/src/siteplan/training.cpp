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

#include "siteplan/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "siteplan/error.hpp"
#include "siteplan/rng.hpp"

namespace siteplan {

const char* VariantName(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoMatchingLoss: return "no_matching_loss";
    case Variant::kGraphOnly: return "graph_only";
  }
  return "full";
}

Variant ParseVariant(const std::string& name) {
  if (name == "full") return Variant::kFull;
  if (name == "no_matching_loss") return Variant::kNoMatchingLoss;
  if (name == "graph_only") return Variant::kGraphOnly;
  Fail(ErrorCode::kInvalidArgument, "unknown variant '" + name + "'");
}

std::vector<TrainSample> MakeSamples(const Scene& scene, const Catalog& catalog, int resolution,
                                     const std::string& source) {
  std::vector<TrainSample> out;
  const double scale = DistanceScale(scene.grid_w);
  for (const Unit& held : scene.units) {
    if (catalog.at(held.category_id).kind != UnitKind::kArchitectural) continue;
    TrainSample s;
    s.source = source;
    s.held_out_unit = held.unit_id;
    s.scene = scene;
    std::erase_if(s.scene.units, [&](const Unit& u) { return u.unit_id == held.unit_id; });
    s.graph = BuildGraph(s.scene, catalog);
    if (s.graph.size() == 0) continue;
    s.target = EdgeClassesToNewBox(s.graph.nodes, held.obb, held.orientation, scale);
    s.image = RenderTopdown(s.scene, catalog, resolution);
    s.target_box = held.obb;
    s.target_orientation = held.orientation;
    s.target_category = held.category_id;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TrainSample> LoadSplit(const DatasetManifest& manifest, const Catalog& catalog,
                                   bool train, int resolution, SampleReport* report) {
  if (manifest.catalog_hash != catalog.Hash()) {
    Fail(ErrorCode::kCatalogMismatch, "dataset " + manifest.root.string() +
                                          " was generated with catalog " + manifest.catalog_hash);
  }
  std::vector<TrainSample> out;
  SampleReport local;
  for (const DatasetEntry* entry : manifest.Split(train)) {
    const Scene scene = LoadFullScene(manifest, *entry);
    auto samples = MakeSamples(scene, catalog, resolution, entry->scene_file);
    ++local.scenes;
    if (samples.empty()) local.skipped.push_back(entry->scene_file);
    local.samples += static_cast<int>(samples.size());
    for (auto& s : samples) out.push_back(std::move(s));
  }
  if (report) *report = local;
  return out;
}

void TrainConfig::Validate() const {
  if (batch_size < 1) Fail(ErrorCode::kInvalidArgument, "batch_size must be positive");
  if (variant == Variant::kFull && batch_size < 2) {
    Fail(ErrorCode::kInvalidArgument, "the matching loss needs batch_size >= 2");
  }
  if (!(lr > 0)) Fail(ErrorCode::kInvalidArgument, "lr must be positive");
  if (epochs < 0) Fail(ErrorCode::kInvalidArgument, "epochs must be non-negative");
  if (!(gamma > 0)) Fail(ErrorCode::kInvalidArgument, "gamma must be positive");
  if (patience < 0) Fail(ErrorCode::kInvalidArgument, "patience must be non-negative");
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"batch_size", batch_size}, {"lr", lr},       {"epochs", epochs},
          {"seed", seed},             {"gamma", gamma}, {"variant", VariantName(variant)},
          {"patience", patience},     {"nll_floor", nll_floor}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& doc) {
  TrainConfig c;
  try {
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.lr = doc.value("lr", c.lr);
    c.epochs = doc.value("epochs", c.epochs);
    c.seed = doc.value("seed", c.seed);
    c.gamma = doc.value("gamma", c.gamma);
    c.variant = ParseVariant(doc.value("variant", std::string(VariantName(c.variant))));
    c.patience = doc.value("patience", c.patience);
    c.nll_floor = doc.value("nll_floor", c.nll_floor);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("train config: ") + e.what());
  }
  c.Validate();
  return c;
}

ModelConfig ApplyVariant(ModelConfig model, Variant variant) {
  model.use_visual = variant != Variant::kGraphOnly;
  return model;
}

namespace {

std::vector<ModelInput> Inputs(const std::vector<const TrainSample*>& batch) {
  std::vector<ModelInput> in;
  for (const TrainSample* s : batch) in.push_back({&s->graph, &s->image});
  return in;
}

std::vector<int> Targets(const std::vector<const TrainSample*>& batch) {
  std::vector<int> t;
  for (const TrainSample* s : batch) t.insert(t.end(), s->target.begin(), s->target.end());
  return t;
}

std::vector<std::vector<const TrainSample*>> Batches(const std::vector<const TrainSample*>& items,
                                                     int size) {
  std::vector<std::vector<const TrainSample*>> out;
  for (size_t k = 0; k < items.size(); k += static_cast<size_t>(size)) {
    out.emplace_back(items.begin() + static_cast<long>(k),
                     items.begin() + static_cast<long>(std::min(items.size(), k + static_cast<size_t>(size))));
  }
  return out;
}

std::vector<const TrainSample*> Pointers(const std::vector<TrainSample>& samples) {
  std::vector<const TrainSample*> out;
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

struct Snapshot {
  std::vector<ad::Mat> values;
  ad::BatchNormStats stats;
};

Snapshot Take(RelationModel& model) {
  Snapshot s;
  for (const auto& p : model.params().all()) s.values.push_back(p->value);
  s.stats = model.clue_stats();
  return s;
}

void Restore(RelationModel& model, const Snapshot& s) {
  auto& all = model.params().all();
  for (size_t k = 0; k < all.size(); ++k) all[k]->value = s.values[k];
  model.clue_stats() = s.stats;
}

}  // namespace

LossTerms ComputeLoss(const ForwardOutput& out, const std::vector<const TrainSample*>& batch,
                      const TrainConfig& config) {
  LossTerms terms;
  const std::vector<int> target = Targets(batch);
  terms.total = ad::MixtureNll(out.alpha_logits, out.theta_logits, kNumEdgeClasses,
                               out.node_sample, target);
  terms.nll = terms.total.value()(0, 0);
  if (config.variant == Variant::kFull && batch.size() >= 2) {
    if (out.image_features.size() != out.graph_features.size()) {
      Fail(ErrorCode::kInvalidArgument, "matching loss needs image features for every round");
    }
    for (size_t r = 0; r < out.graph_features.size(); ++r) {
      ad::Var m = ad::SymmetricMatchLoss(
          ad::CosineMatrix(out.graph_features[r], out.image_features[r]), config.gamma);
      terms.matching_per_round.push_back(m.value()(0, 0));
      terms.matching += m.value()(0, 0);
      terms.total = ad::Add(terms.total, m);
    }
  }
  return terms;
}

double MeanNll(const RelationModel& model, const std::vector<TrainSample>& samples, int batch_size,
               double floor) {
  if (samples.empty()) return 0.0;
  double total = 0;
  for (const auto& batch : Batches(Pointers(samples), std::max(batch_size, 1))) {
    ad::Tape tape(false);
    const ForwardOutput out = model.Forward(tape, Inputs(batch), ForwardOptions{});
    const auto dists = ToDistributions(out);
    for (size_t b = 0; b < batch.size(); ++b) {
      total -= dists[b].LogLikelihood(batch[b]->target, floor);
    }
  }
  return total / static_cast<double>(samples.size());
}

TrainResult Train(RelationModel& model, const std::vector<TrainSample>& train,
                  const std::vector<TrainSample>& val, const TrainConfig& config,
                  std::ostream* log) {
  config.Validate();
  if (train.empty()) Fail(ErrorCode::kInvalidArgument, "no training samples");
  if ((config.variant == Variant::kGraphOnly) == model.config().use_visual) {
    Fail(ErrorCode::kInvalidArgument, "model visual stream does not match the variant");
  }
  TrainResult result;
  result.initial_train_nll = MeanNll(model, train, config.batch_size, config.nll_floor);
  Adam adam(model.params(), AdamConfig{config.lr});
  Rng rng(config.seed);
  std::vector<const TrainSample*> order = Pointers(train);
  double best_val = std::numeric_limits<double>::infinity();
  Snapshot best;
  int since_best = 0;
  long long batch_id = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[static_cast<size_t>(rng.Uniform(0, static_cast<int>(k) - 1))]);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    const auto batches = Batches(order, config.batch_size);
    for (const auto& batch : batches) {
      ad::Tape tape;
      model.params().ZeroGrad();
      const ForwardOutput out = model.Forward(tape, Inputs(batch), ForwardOptions{true, 0});
      const LossTerms terms = ComputeLoss(out, batch, config);
      const double loss = terms.total.value()(0, 0);
      if (!std::isfinite(loss)) {
        Fail(ErrorCode::kDiverged, "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                       std::to_string(batch_id));
      }
      tape.Backward(terms.total);
      adam.Step();
      rec.train_nll += terms.nll;
      rec.train_matching += terms.matching;
      ++batch_id;
    }
    rec.train_nll /= static_cast<double>(train.size());
    rec.train_matching /= static_cast<double>(batches.size());
    if (!val.empty()) {
      rec.has_val = true;
      rec.val_nll = MeanNll(model, val, config.batch_size, config.nll_floor);
      if (rec.val_nll < best_val) {
        best_val = rec.val_nll;
        best = Take(model);
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    } else {
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    if (log != nullptr) {
      nlohmann::json line{{"epoch", epoch},
                          {"train_nll", rec.train_nll},
                          {"train_matching", rec.train_matching},
                          {"variant", VariantName(config.variant)},
                          {"seed", config.seed}};
      if (rec.has_val) line["val_nll"] = rec.val_nll;
      *log << line.dump() << '\n';
      log->flush();
    }
    if (config.patience > 0 && rec.has_val && since_best >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }
  if (!val.empty() && !best.values.empty()) Restore(model, best);
  result.final_train_nll = MeanNll(model, train, config.batch_size, config.nll_floor);
  return result;
}

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json doc{{"samples", samples},
                     {"empty_predictions", empty_predictions},
                     {"no_truth", no_truth},
                     {"mean", ScoreRowToJson(mean)}};
  return doc;
}

EvalReport Evaluate(const RelationModel& model, const std::vector<TrainSample>& samples,
                    const EvalOptions& options) {
  EvalReport report;
  std::vector<ScoreRow> placed;
  for (const auto& s : samples) {
    const int size = options.target_size > 0 ? options.target_size : DefaultTargetSize(s.scene.grid_w);
    const auto truth_edges = TruthHeatmapEdges(s.graph, s.target, s.target_box);
    const DecodedHeatmap truth = EdgesToHeatmap(truth_edges, s.scene.grid_w, s.scene.grid_h, size, size);
    if (truth.map.all_zero()) {
      ++report.no_truth;
      continue;
    }
    const EdgeDistribution dist = model.Predict(s.graph, model.config().use_visual ? &s.image : nullptr);
    const EdgeSample pick = SampleEdges(dist, options.mode, options.seed);
    ++report.samples;
    ScoreRow row;
    if (pick.empty) {
      ++report.empty_predictions;
      report.rows.push_back(row);
      continue;
    }
    std::vector<int> nodes, types;
    for (const auto& e : pick.edges) {
      nodes.push_back(e.node);
      types.push_back(e.edge_type);
    }
    const DecodedHeatmap pred = EdgesToHeatmap(PredictedHeatmapEdges(s.graph, nodes, types),
                                               s.scene.grid_w, s.scene.grid_h, size, size);
    row = ScoreHeatmaps(truth.map, pred.map, s.scene);
    report.rows.push_back(row);
    if (!pred.map.all_zero()) placed.push_back(row);
  }
  report.mean = MeanRow(report.rows);
  const ScoreRow placed_mean = MeanRow(placed);
  report.mean.forbidden_overlap = placed_mean.forbidden_overlap;
  report.mean.collision_overlap = placed_mean.collision_overlap;
  return report;
}

}  // namespace siteplan
