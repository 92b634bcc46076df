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
#include <random>

#include "doctest.h"
#include "support/model_check.hpp"
#include "siteplan/error.hpp"
#include "siteplan/relnet.hpp"
#include "siteplan/training.hpp"

using namespace siteplan;

namespace {

const Catalog& Desk() {
  static const Catalog c = Catalog::DeskDefault();
  return c;
}

void Randomize(RelationModel& model, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& p : model.params().all()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = n(rng);
  }
}

void ZeroBiases(RelationModel& model) {
  for (auto& p : model.params().all()) {
    const auto& name = p->name;
    if (name.size() > 2 && (name.ends_with(".b") || name.ends_with(".b1") || name.ends_with(".b2") ||
                            name.ends_with(".bz") || name.ends_with(".br") || name.ends_with(".bn") ||
                            name.ends_with(".beta"))) {
      p->value.setZero();
    }
  }
}

}  // namespace

TEST_CASE("initial node states") {
  const auto batch = modelcheck::MakeToyBatch(Desk());
  RelationModel model(modelcheck::TinyConfig());
  ad::Tape tape(false);
  const ad::Var h = model.InitNodes(tape, batch.inputs(), 0);
  const int n0 = batch.samples[0].graph.size(), n1 = batch.samples[1].graph.size();
  REQUIRE(h.cols() == n0 + 1 + n1 + 1);
  CHECK(h.value().col(n0).isZero(0.0));
  CHECK(h.value().col(n0 + 1 + n1).isZero(0.0));
  CHECK(h.value().col(0).norm() > 0);

  SUBCASE("padding is inert") {
    for (int pad : {n0, 9, 16}) {
      ad::Tape t2(false);
      const ad::Var padded = model.InitNodes(t2, batch.inputs(), pad);
      CHECK((padded.value() - h.value()).cwiseAbs().maxCoeff() < 1e-12);
    }
    ad::Tape t3(false);
    CHECK_THROWS_AS(model.InitNodes(t3, batch.inputs(), n0 - 1), Error);
  }
  SUBCASE("zero inputs and zero biases give zero states") {
    RelationModel zero(modelcheck::TinyConfig());
    ZeroBiases(zero);
    RelationGraph g = batch.samples[0].graph;
    std::fill(g.adjacency.begin(), g.adjacency.end(), 0);
    for (auto& node : g.nodes) node.category_id = -1;  // no label bit
    for (auto& node : g.nodes) node.merged_obb = {0, 0, 0, 0};
    for (auto& node : g.nodes) node.orientation = Orientation::k0;
    // Only the orientation bit remains; zero its input weights.
    auto& w = zero.params().at("init.w").value;
    w.col(w.cols() - 4).setZero();
    // Connectivity is all no-edge, which is a real class; zero its taps.
    zero.params().at("init.conv1.w").value.leftCols(3).setZero();
    ad::Tape t4(false);
    const ad::Var hz = zero.InitNodes(t4, {ModelInput{&g, nullptr}}, 0);
    CHECK(hz.value().isZero(0.0));
  }
}

TEST_CASE("graph size limits") {
  const auto batch = modelcheck::MakeToyBatch(Desk());
  ModelConfig c = modelcheck::TinyConfig();
  c.max_nodes = 4;
  RelationModel model(c);
  ad::Tape tape(false);
  try {
    model.Forward(tape, batch.inputs(), ForwardOptions{});
    FAIL("expected a size error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooLarge);
  }
  RelationGraph empty;
  CHECK_THROWS_AS(model.Predict(empty, &batch.samples[0].image), Error);
}

TEST_CASE("edge distribution is valid and deterministic") {
  const auto batch = modelcheck::MakeToyBatch(Desk());
  RelationModel model(modelcheck::TinyConfig());
  std::mt19937_64 rng(3);
  for (int draw = 0; draw < 20; ++draw) {
    Randomize(model, rng, draw < 10 ? 1.0 : 30.0);
    ad::Tape tape(false);
    const auto dists = ToDistributions(model.Forward(tape, batch.inputs(), ForwardOptions{}));
    REQUIRE(dists.size() == 2);
    for (const auto& d : dists) {
      double asum = 0;
      for (double a : d.alpha) {
        CHECK(std::isfinite(a));
        asum += a;
      }
      CHECK(std::abs(asum - 1) < 1e-6);
      for (int s = 0; s < d.mixtures; ++s) {
        for (int j = 0; j < d.nodes; ++j) {
          double sum = 0;
          for (int c = 0; c < kNumEdgeClasses; ++c) {
            CHECK(std::isfinite(d.Theta(s, j, c)));
            sum += d.Theta(s, j, c);
          }
          CHECK(std::abs(sum - 1) < 1e-6);
        }
      }
    }
  }
  const auto a = model.Predict(batch.samples[0].graph, &batch.samples[0].image);
  const auto b = model.Predict(batch.samples[0].graph, &batch.samples[0].image);
  CHECK(a.alpha == b.alpha);
  CHECK(a.theta == b.theta);
  CHECK(a.nodes == batch.samples[0].graph.size());
}

TEST_CASE("batching does not mix samples") {
  const auto batch = modelcheck::MakeToyBatch(Desk());
  RelationModel model(modelcheck::TinyConfig());
  ad::Tape tape(false);
  const auto joint = ToDistributions(model.Forward(tape, batch.inputs(), ForwardOptions{}));
  for (size_t k = 0; k < 2; ++k) {
    const auto alone = model.Predict(batch.samples[k].graph, &batch.samples[k].image);
    for (size_t i = 0; i < alone.theta.size(); ++i) {
      CHECK(alone.theta[i] == doctest::Approx(joint[k].theta[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("message passing respects the edge mask") {
  // Two groups that cannot see each other. After one round a node's state
  // depends only on itself, its neighbors and the new node, whose input to
  // that round is fixed.
  const Catalog& cat = Desk();
  const int house = cat.CategoriesOfKind(UnitKind::kArchitectural).front();
  Scene s = Scene::Empty(64, 64, cat);
  s.units.push_back({0, house, {2, 2, 4, 4}, Orientation::k0});
  s.units.push_back({1, house, {8, 2, 4, 4}, Orientation::k0});
  s.units.push_back({2, house, {40, 40, 4, 4}, Orientation::k0});
  s.units.push_back({3, house, {50, 40, 4, 4}, Orientation::k0});
  const RelationGraph g = BuildGraph(s, cat);
  REQUIRE(g.size() == 4);
  REQUIRE(g.find_edge(0, 1) != nullptr);
  for (int i : {0, 1}) {
    for (int j : {2, 3}) {
      REQUIRE(g.find_edge(i, j) == nullptr);
      REQUIRE(g.find_edge(j, i) == nullptr);
    }
  }
  ModelConfig c = modelcheck::TinyConfig(false);
  c.rounds = 1;
  RelationModel model(c);
  RelationGraph g2 = g;
  g2.nodes[3].category_id = 9;
  ad::Tape t1(false), t2(false);
  const auto o1 = model.Forward(t1, {ModelInput{&g, nullptr}}, ForwardOptions{});
  const auto o2 = model.Forward(t2, {ModelInput{&g2, nullptr}}, ForwardOptions{});
  for (int i : {0, 1}) CHECK((o1.states.value().col(i) - o2.states.value().col(i)).norm() == 0.0);
  CHECK((o1.states.value().col(3) - o2.states.value().col(3)).norm() > 0.0);
}

TEST_CASE("sample_edges") {
  EdgeDistribution d;
  d.mixtures = 2;
  d.nodes = 3;
  d.alpha = {0.25, 0.75};
  d.theta.assign(2 * 3 * kNumEdgeClasses, 0.0);
  auto set = [&](int s, int j, int c) { d.theta[(static_cast<size_t>(s) * 3 + j) * kNumEdgeClasses + c] = 1.0; };
  set(0, 0, 0); set(0, 1, 0); set(0, 2, 0);
  set(1, 0, 5); set(1, 1, 0); set(1, 2, 16);
  const EdgeSample arg = SampleEdges(d, DecodeMode::kArgmax);
  CHECK(arg.mixture == 1);
  REQUIRE(arg.edges.size() == 2);
  CHECK(arg.edges[0].node == 0);
  CHECK(arg.edges[0].edge_type == 5);
  CHECK(arg.edges[1].node == 2);
  CHECK(arg.edges[1].edge_type == 16);
  CHECK_FALSE(arg.empty);

  d.alpha = {0.0, 1.0};
  const EdgeSample smp = SampleEdges(d, DecodeMode::kSample, 42);
  CHECK(smp.edges.size() == 2);
  d.alpha = {1.0, 0.0};
  const EdgeSample none = SampleEdges(d, DecodeMode::kArgmax);
  CHECK(none.empty);
  CHECK(none.edges.empty());

  d.alpha = {0.5, 0.5};
  const auto x = SampleEdges(d, DecodeMode::kSample, 7);
  const auto y = SampleEdges(d, DecodeMode::kSample, 7);
  CHECK(x.mixture == y.mixture);
  CHECK(x.edges.size() == y.edges.size());
}

TEST_CASE("log likelihood of a mixture") {
  EdgeDistribution d;
  d.mixtures = 1;
  d.nodes = 2;
  d.alpha = {1.0};
  d.theta.assign(2 * kNumEdgeClasses, 1.0 / kNumEdgeClasses);
  CHECK(-d.LogLikelihood({0, 7}) == doctest::Approx(2 * std::log(17.0)).epsilon(1e-12));
  // Permuting mixture components leaves the likelihood unchanged.
  EdgeDistribution m;
  m.mixtures = 2;
  m.nodes = 1;
  m.alpha = {0.3, 0.7};
  m.theta.assign(2 * kNumEdgeClasses, 0.0);
  m.theta[3] = 0.6; m.theta[0] = 0.4;
  m.theta[kNumEdgeClasses + 3] = 0.1; m.theta[kNumEdgeClasses + 1] = 0.9;
  EdgeDistribution p = m;
  p.alpha = {0.7, 0.3};
  std::rotate(p.theta.begin(), p.theta.begin() + kNumEdgeClasses, p.theta.end());
  CHECK(m.LogLikelihood({3}) == doctest::Approx(p.LogLikelihood({3})).epsilon(1e-14));
  CHECK(m.LogLikelihood({3}) == doctest::Approx(std::log(0.3 * 0.6 + 0.7 * 0.1)));
}

TEST_CASE("full model gradients match finite differences") {
  const auto batch = modelcheck::MakeToyBatch(Desk());
  REQUIRE(batch.samples[0].graph.size() == 5);
  for (Variant v : {Variant::kFull, Variant::kGraphOnly}) {
    RelationModel model(ApplyVariant(modelcheck::TinyConfig(), v));
    // Zero biases put ReLUs fed by all-zero inputs exactly on their kink;
    // check at a generic point instead.
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto& p : model.params().all()) {
      if (p->value.cols() == 1) {
        for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += u(rng);
      }
    }
    TrainConfig tc;
    tc.variant = v;
    const auto errors = modelcheck::ParameterGradientErrors(
        model,
        [&](ad::Tape& tape, const RelationModel& m) {
          const auto out = m.Forward(tape, batch.inputs(), ForwardOptions{true, 0});
          return ComputeLoss(out, batch.pointers(), tc).total;
        },
        1e-5);
    for (const auto& [name, err] : errors) {
      INFO(VariantName(v) << " " << name);
      CHECK(err < 1e-3);
    }
  }
}
