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

#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "support/model_check.hpp"
#include "siteplan/error.hpp"
#include "siteplan/training.hpp"

using namespace siteplan;

namespace {

const Catalog& Desk() {
  static const Catalog c = Catalog::DeskDefault();
  return c;
}

// Symmetric matching loss from its definition, for one round.
double MatchingOracle(const ad::Mat& g, const ad::Mat& v, double gamma) {
  const auto z = g.cols();
  ad::Mat s(z, z);
  for (Eigen::Index a = 0; a < z; ++a) {
    for (Eigen::Index b = 0; b < z; ++b) {
      const double na = g.col(a).norm(), nb = v.col(b).norm();
      s(a, b) = na > 0 && nb > 0 ? g.col(a).dot(v.col(b)) / (na * nb) : 0.0;
    }
  }
  double loss = 0;
  for (Eigen::Index a = 0; a < z; ++a) {
    double row = 0, col = 0;
    for (Eigen::Index b = 0; b < z; ++b) {
      row += std::exp(gamma * s(a, b));
      col += std::exp(gamma * s(b, a));
    }
    loss -= std::log(std::exp(gamma * s(a, a)) / row) + std::log(std::exp(gamma * s(a, a)) / col);
  }
  return loss;
}

}  // namespace

TEST_CASE("make_samples holds out every architectural unit") {
  Scene s = Scene::Empty(64, 64, Desk());
  s.units.push_back({0, 6, {4, 4, 8, 8}, Orientation::k90});
  s.units.push_back({1, 7, {20, 4, 8, 6}, Orientation::k90});
  s.units.push_back({2, 8, {40, 4, 5, 5}, Orientation::k90});
  s.units.push_back({3, 0, {0, 30, 4, 1}, Orientation::k0});
  s.units.push_back({4, 1, {10, 30, 4, 1}, Orientation::k0});
  s.units.push_back({5, 3, {30, 30, 1, 1}, Orientation::k0});
  s.units.push_back({6, 4, {40, 40, 2, 1}, Orientation::k0});
  s.units.push_back({7, 2, {50, 50, 2, 3}, Orientation::k0});
  const auto samples = MakeSamples(s, Desk(), 64, "fixture");
  REQUIRE(samples.size() == 3);
  for (const auto& t : samples) {
    CHECK(t.graph.size() == 7);
    CHECK(static_cast<int>(t.target.size()) == t.graph.size());
    CHECK(t.scene.find(t.held_out_unit) == nullptr);
    CHECK(t.image.resolution == 64);
  }
  CHECK(samples[0].held_out_unit == 0);
  CHECK(samples[0].target_box == OBB{4, 4, 8, 8});

  const auto again = MakeSamples(s, Desk(), 64, "fixture");
  for (size_t k = 0; k < samples.size(); ++k) {
    CHECK(again[k].target == samples[k].target);
    CHECK(GraphToJson(again[k].graph) == GraphToJson(samples[k].graph));
    CHECK(again[k].image.depth == samples[k].image.depth);
  }

  SUBCASE("hidden unit keeps an all no-edge row") {
    Scene boxed = Scene::Empty(64, 64, Desk());
    boxed.units.push_back({0, 8, {2, 2, 4, 4}, Orientation::k0});
    boxed.units.push_back({1, 5, {10, 0, 1, 64}, Orientation::k0});
    boxed.units.push_back({2, 5, {40, 0, 1, 64}, Orientation::k0});
    boxed.units.push_back({3, 3, {50, 50, 1, 1}, Orientation::k0});
    const auto t = MakeSamples(boxed, Desk(), 64);
    REQUIRE(t.size() == 1);
    // The first wall faces the shed and sees it; the lamp behind the second
    // wall does not.
    CHECK(t[0].target.back() == 0);
  }
  SUBCASE("no architectural unit") {
    Scene infra = Scene::Empty(64, 64, Desk());
    infra.units.push_back({0, 3, {1, 1, 1, 1}, Orientation::k0});
    CHECK(MakeSamples(infra, Desk(), 64).empty());
  }
}

TEST_CASE("train config") {
  TrainConfig c;
  CHECK(TrainConfig::FromJson(c.ToJson()).ToJson() == c.ToJson());
  c.batch_size = 1;
  CHECK_THROWS_AS(c.Validate(), Error);
  c.variant = Variant::kNoMatchingLoss;
  CHECK_NOTHROW(c.Validate());
  CHECK(ParseVariant("graph_only") == Variant::kGraphOnly);
  CHECK_THROWS_AS(ParseVariant("baseline"), Error);
  CHECK_FALSE(ApplyVariant(ModelConfig{}, Variant::kGraphOnly).use_visual);
  CHECK(ApplyVariant(ModelConfig{}, Variant::kNoMatchingLoss).use_visual);
}

TEST_CASE("loss values") {
  ad::Tape tape(false);
  SUBCASE("certain and correct distribution has zero loss") {
    ad::Mat alpha(1, 1);
    alpha << 0.0;
    ad::Mat theta = ad::Mat::Constant(17, 2, -800.0);
    theta(4, 0) = 800.0;
    theta(0, 1) = 800.0;
    const auto nll = ad::MixtureNll(tape.Constant(alpha), tape.Constant(theta), 17, {0, 0}, {4, 0});
    CHECK(nll.value()(0, 0) == 0.0);
  }
  SUBCASE("uniform classes") {
    const auto nll = ad::MixtureNll(tape.Constant(ad::Mat::Zero(1, 1)), tape.Constant(ad::Mat::Zero(17, 2)),
                                    17, {0, 0}, {3, 11});
    CHECK(std::abs(nll.value()(0, 0) - 2 * std::log(17.0)) < 1e-9);
  }
  SUBCASE("matching with identical features") {
    const ad::Mat f = ad::Mat::Ones(3, 2);
    const auto m = ad::SymmetricMatchLoss(ad::CosineMatrix(tape.Constant(f), tape.Constant(f)), 10.0);
    CHECK(std::abs(m.value()(0, 0) - 4 * std::log(2.0)) < 1e-9);
  }
  SUBCASE("perfectly matched orthogonal pairs saturate") {
    const ad::Mat f = ad::Mat::Identity(3, 3);
    const auto m = ad::SymmetricMatchLoss(ad::CosineMatrix(tape.Constant(f), tape.Constant(f)), 60.0);
    CHECK(m.value()(0, 0) < 1e-20);
  }
}

TEST_CASE("loss composition") {
  const auto batch = modelcheck::MakeToyBatch(Desk());
  RelationModel model(modelcheck::TinyConfig());
  TrainConfig tc;
  ad::Tape tape(false);
  const RelationModel& view = model;
  const auto out = view.Forward(tape, batch.inputs(), ForwardOptions{true, 0});
  const LossTerms terms = ComputeLoss(out, batch.pointers(), tc);
  const auto dists = ToDistributions(out);
  double nll = 0;
  for (size_t b = 0; b < dists.size(); ++b) nll -= dists[b].LogLikelihood(batch.samples[b].target);
  double matching = 0;
  for (size_t r = 0; r < out.graph_features.size(); ++r) {
    const double m = MatchingOracle(out.graph_features[r].value(), out.image_features[r].value(), tc.gamma);
    CHECK(terms.matching_per_round[r] == doctest::Approx(m).epsilon(1e-10));
    matching += m;
  }
  CHECK(terms.nll == doctest::Approx(nll).epsilon(1e-10));
  CHECK(terms.total.value()(0, 0) == doctest::Approx(nll + matching).epsilon(1e-10));
  CHECK(terms.matching_per_round.size() == 2);
  CHECK(terms.nll >= 0);

  SUBCASE("batch order does not change the total") {
    auto swapped = batch;
    std::swap(swapped.samples[0], swapped.samples[1]);
    ad::Tape t2(false);
    const auto out2 = view.Forward(t2, swapped.inputs(), ForwardOptions{true, 0});
    const LossTerms terms2 = ComputeLoss(out2, swapped.pointers(), tc);
    CHECK(terms2.total.value()(0, 0) == doctest::Approx(terms.total.value()(0, 0)).epsilon(1e-10));
  }
  SUBCASE("variants without the matching term") {
    for (Variant v : {Variant::kNoMatchingLoss, Variant::kGraphOnly}) {
      TrainConfig other = tc;
      other.variant = v;
      RelationModel m(ApplyVariant(modelcheck::TinyConfig(), v));
      ad::Tape t3(false);
      const auto o = static_cast<const RelationModel&>(m).Forward(t3, batch.inputs(), ForwardOptions{});
      const LossTerms lt = ComputeLoss(o, batch.pointers(), other);
      CHECK(lt.matching == 0.0);
      CHECK(lt.matching_per_round.empty());
      CHECK(lt.total.value()(0, 0) == lt.nll);
      if (v == Variant::kGraphOnly) CHECK(o.image_features.empty());
    }
  }
}

TEST_CASE("training is deterministic and logs every epoch") {
  const auto batch = modelcheck::MakeToyBatch(Desk());
  std::vector<TrainSample> train = batch.samples;
  train.push_back(batch.samples[0]);
  TrainConfig tc;
  tc.batch_size = 2;
  tc.epochs = 4;
  tc.lr = 1e-2;
  tc.patience = 0;
  std::ostringstream log1, log2;
  RelationModel a(modelcheck::TinyConfig()), b(modelcheck::TinyConfig());
  const TrainResult ra = Train(a, train, {}, tc, &log1);
  const TrainResult rb = Train(b, train, {}, tc, &log2);
  CHECK(log1.str() == log2.str());
  REQUIRE(ra.history.size() == 4);
  for (size_t k = 0; k < ra.history.size(); ++k) {
    CHECK(ra.history[k].train_nll == rb.history[k].train_nll);
    CHECK(ra.history[k].train_matching > 0);
  }
  CHECK(ra.final_train_nll < ra.initial_train_nll);
  std::istringstream lines(log1.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto doc = nlohmann::json::parse(line);
    CHECK(doc.at("epoch") == ++count);
    CHECK(doc.contains("train_nll"));
  }
  CHECK(count == 4);

  SUBCASE("graph_only records no matching term") {
    TrainConfig go = tc;
    go.variant = Variant::kGraphOnly;
    RelationModel m(ApplyVariant(modelcheck::TinyConfig(), Variant::kGraphOnly));
    const TrainResult r = Train(m, train, {}, go);
    for (const auto& e : r.history) CHECK(e.train_matching == 0.0);
    RelationModel wrong(modelcheck::TinyConfig());
    CHECK_THROWS_AS(Train(wrong, train, {}, go), Error);
  }
  SUBCASE("early stopping keeps the best validation epoch") {
    TrainConfig es = tc;
    es.epochs = 30;
    es.lr = 0.2;
    es.patience = 2;
    RelationModel m(modelcheck::TinyConfig());
    const TrainResult r = Train(m, train, {batch.samples[1]}, es);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : r.history) best = std::min(best, e.val_nll);
    CHECK(r.history[static_cast<size_t>(r.best_epoch - 1)].val_nll == best);
    CHECK(MeanNll(m, {batch.samples[1]}, 2) == doctest::Approx(best).epsilon(1e-12));
    if (r.early_stopped) CHECK(static_cast<int>(r.history.size()) == r.best_epoch + 2);
  }
  SUBCASE("a non-finite loss aborts with the batch id") {
    RelationModel m(modelcheck::TinyConfig());
    m.params().at("alpha.b2").value(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
      Train(m, train, {}, tc);
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDiverged);
      CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
    }
  }
}

TEST_CASE("evaluation of truth against itself") {
  const auto batch = modelcheck::MakeToyBatch(Desk());
  const TrainSample& s = batch.samples[0];
  const int size = DefaultTargetSize(s.scene.grid_w);
  const auto truth = EdgesToHeatmap(TruthHeatmapEdges(s.graph, s.target, s.target_box),
                                    s.scene.grid_w, s.scene.grid_h, size, size);
  REQUIRE_FALSE(truth.map.all_zero());
  const ScoreRow row = ScoreHeatmaps(truth.map, truth.map, s.scene);
  CHECK(row.f1s_a == 1.0);
  CHECK(row.f1s_p == 1.0);

  RelationModel model(modelcheck::TinyConfig());
  const EvalReport report = Evaluate(model, batch.samples);
  // The three-node scene sees nothing of the held-out unit.
  CHECK(report.samples == 1);
  CHECK(report.no_truth == 1);
  CHECK(report.rows.size() == 1);
  CHECK(report.mean.f1s_a >= 0.0);
  CHECK(report.mean.f1s_a <= 1.0);
  CHECK(report.ToJson().at("mean").contains("f1s_p"));
}
