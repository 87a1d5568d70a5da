#include <gtest/gtest.h>

#include <cstring>
#include <map>
#include <numeric>

#include "checks.hpp"
#include "test_paths.hpp"
#include "thoughttree/dataset.hpp"
#include "thoughttree/error.hpp"
#include "thoughttree/explainer.hpp"
#include "thoughttree/gnn_classifier.hpp"

using namespace thoughttree;

namespace {

TreeClassifier random_model(std::uint64_t seed, ClassifierConfig config = {}) {
  TreeClassifier m(config);
  m.initialize(seed);
  // Glorot init leaves biases at zero; jitter everything so every block matters.
  Rng rng(seed + 1);
  for (Eigen::Index i = 0; i < m.parameters().size(); ++i) m.parameters()[i] += 0.1 * rng.normal();
  return m;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<GraphSample> planted_graphs(std::size_t per_class, std::uint64_t seed) {
  std::vector<GraphSample> out;
  for (auto& s : generate_planted_dataset(per_class, {}, seed)) out.push_back(std::move(s.graph));
  return out;
}

}  // namespace

TEST(Classifier, ZeroParametersGiveOneHalf) {
  Rng rng(1);
  TreeClassifier m(ClassifierConfig{});
  m.parameters().setZero();
  for (int k = 0; k < 20; ++k) {
    EXPECT_EQ(m.forward(testgen::random_graph(rng, static_cast<std::size_t>(rng.between(1, 30)))), 0.5);
  }
}

TEST(Classifier, LayoutCoversParameters) {
  TreeClassifier m(ClassifierConfig{});
  std::size_t next = 0;
  for (const auto& b : m.layout()) {
    EXPECT_EQ(b.offset, next) << b.name;
    next += b.size();
  }
  EXPECT_EQ(next, m.parameter_count());
}

TEST(Classifier, PermutationInvariance) {
  Rng rng(2);
  const auto m = random_model(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = testgen::random_graph(rng, static_cast<std::size_t>(rng.between(2, 25)));
    std::vector<std::size_t> perm(g.num_nodes());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span(perm));  // old id -> new id
    GraphSample h = g;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      h.node_features.row(static_cast<Eigen::Index>(perm[i])) = g.node_features.row(static_cast<Eigen::Index>(i));
    }
    for (auto& e : h.edges) e = {perm[e.src], perm[e.dst], e.code};
    EXPECT_NEAR(m.forward(g), m.forward(h), 1e-9);
  }
}

TEST(Classifier, IsolatedNodeIsFinite) {
  GraphSample g;
  g.node_features = FeatureMatrix::Zero(1, kNodeFeatureCount);
  const auto m = random_model(3);
  const double p = m.forward(g);
  EXPECT_TRUE(std::isfinite(p));
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
}

TEST(Classifier, OutputsStayInOpenInterval) {
  auto m = random_model(4);
  m.parameters() *= 50.0;
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto g = testgen::random_graph(rng, 10);
    const double p = m.forward(g);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.parameter_count()));
    EXPECT_TRUE(std::isfinite(m.loss_and_gradient(g, *g.label, grad)));
    EXPECT_TRUE(grad.allFinite());
  }
}

TEST(Classifier, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    auto m = random_model(20 + trial);
    const auto g = testgen::random_graph(rng, 15);
    const auto r = testgen::check_parameter_gradients(m, g, *g.label, 120, rng);
    EXPECT_GE(r.checked, 100u);
    EXPECT_LE(r.worst_relative_error, 1e-3);
  }
}

TEST(Classifier, GradientsWithOtherShapes) {
  Rng rng(12);
  ClassifierConfig c;
  c.hidden_size = 7;
  c.num_layers = 3;
  c.mlp_layers = 3;
  auto m = random_model(30, c);
  const auto g = testgen::random_graph(rng, 9);
  EXPECT_LE(testgen::check_parameter_gradients(m, g, 1, 200, rng).worst_relative_error, 1e-3);
  EXPECT_LE(testgen::check_parameter_gradients(m, g, 0, 200, rng).worst_relative_error, 1e-3);
}

TEST(Classifier, MaskGradientsMatchFiniteDifferences) {
  Rng rng(13);
  const auto m = random_model(40);
  const auto g = testgen::random_graph(rng, 15);
  std::vector<double> mask(g.num_tree_edges());
  for (auto& v : mask) v = rng.uniform(0.1, 0.9);
  EXPECT_LE(testgen::check_mask_gradients(m, g, mask).worst_relative_error, 1e-3);
}

TEST(Classifier, UnitMaskEqualsNoMask) {
  Rng rng(14);
  const auto m = random_model(41);
  const auto g = testgen::random_graph(rng, 12);
  const std::vector<double> ones(g.num_tree_edges(), 1.0);
  EXPECT_EQ(m.logit(g), m.logit(g, ones));
  const std::vector<double> wrong(g.num_tree_edges() + 1, 1.0);
  EXPECT_THROW(m.logit(g, wrong), Error);
}

TEST(Classifier, SaveLoadIsBitIdentical) {
  TempDir dir;
  auto m = random_model(6);
  m.set_stats(NormalizationStats{{0.1, 0.2, 0.3, 0.4, 0.5}, {1.5, 2.5, 3.5, 4.5, 5.5}});
  m.mark_trained();
  m.save(dir / "model.json");
  const auto back = TreeClassifier::load(dir / "model.json");
  ASSERT_EQ(back.parameter_count(), m.parameter_count());
  for (Eigen::Index i = 0; i < m.parameters().size(); ++i) ASSERT_TRUE(bit_equal(back.parameters()[i], m.parameters()[i]));
  EXPECT_EQ(back.stats(), m.stats());
  EXPECT_TRUE(back.trained());
  Rng rng(6);
  for (int k = 0; k < 10; ++k) {
    const auto g = testgen::random_graph(rng, 10);
    EXPECT_TRUE(bit_equal(m.forward(g), back.forward(g)));
  }
}

TEST(Classifier, LoadRejectsWrongShape) {
  auto j = random_model(7).to_json();
  j["parameters"].erase(j["parameters"].begin());
  EXPECT_THROW(TreeClassifier::from_json(j), Error);
}

TEST(Classifier, ClassifyThreshold) {
  EXPECT_EQ(classify(0.7), Verdict::Positive);
  EXPECT_EQ(classify(0.5), Verdict::Negative);
  EXPECT_EQ(classify(0.3), Verdict::Negative);
}

TEST(Classifier, PredictNeedsTraining) {
  const TreeClassifier m(ClassifierConfig{});
  const std::vector<std::size_t> tokens{5, 5};
  ReasoningTree tree;
  tree.add_child(0, 1, 1, 1, ThoughtFunction::Continuation);
  try {
    predict_score(m, featurize(tree, tokens));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotTrained);
  }
}

TEST(Training, DeterministicAndLossDecreases) {
  const auto data = planted_graphs(100, 21);
  ClassifierConfig c;
  c.max_epochs = 10;
  c.seed = 4;
  const auto a = train(data, c);
  const auto b = train(data, c);
  ASSERT_EQ(a.model.parameter_count(), b.model.parameter_count());
  for (Eigen::Index i = 0; i < a.model.parameters().size(); ++i) {
    ASSERT_TRUE(bit_equal(a.model.parameters()[i], b.model.parameters()[i]));
  }
  ASSERT_EQ(a.log.size(), 10u);
  EXPECT_LT(a.log[9].train_loss, a.log[0].train_loss);
  EXPECT_EQ(a.train_size + a.validation_size, data.size());
  EXPECT_EQ(a.validation_size, 20u);
  EXPECT_TRUE(a.model.trained());
  // The kept epoch is the earliest with the best validation accuracy.
  double best = -1;
  int epoch = 0;
  for (const auto& e : a.log) {
    if (e.validation_accuracy > best) {
      best = e.validation_accuracy;
      epoch = e.epoch;
    }
  }
  EXPECT_EQ(a.best_epoch, epoch);
}

TEST(Training, RejectsDegenerateData) {
  auto data = planted_graphs(10, 3);
  for (auto& g : data) g.label = 1;
  EXPECT_THROW(train(data, {}), Error);
  const std::vector<GraphSample> few(data.begin(), data.begin() + 5);
  EXPECT_THROW(train(few, {}), Error);
  ClassifierConfig bad;
  bad.hidden_size = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(LengthBaseline, WeightSignFollowsData) {
  std::vector<LengthExample> ex;
  Rng rng(9);
  for (int k = 0; k < 200; ++k) {
    ex.push_back({rng.uniform(100, 1000), 1});
    ex.push_back({rng.uniform(800, 3000), 0});
  }
  const auto m = train_length_baseline(ex);
  EXPECT_LT(m.weight, 0.0);
  EXPECT_GT(baseline_score(m, 100), 0.5);
  EXPECT_LT(baseline_score(m, 3000), 0.5);
  const nlohmann::json j = m;
  EXPECT_EQ(j.get<LengthBaseline>(), m);
  EXPECT_THROW(train_length_baseline(std::vector<LengthExample>{}), Error);
}

TEST(FixtureModel, ReproducesCommittedScores) {
  const auto model = TreeClassifier::load(fixture_path("model.json"));
  std::map<std::string, double> committed;
  for (const auto& row : read_jsonl(golden_path("pipeline/predictions.jsonl"))) {
    committed[row.at("sample_id").get<std::string>()] = row.at("score").get<double>();
  }
  std::size_t checked = 0;
  for (const auto& row : read_jsonl(golden_path("pipeline/graphs.jsonl"))) {
    const auto g = row.get<GraphSample>();
    EXPECT_NEAR(predict_score(model, g), committed.at(g.sample_id), 5e-9) << g.sample_id;
    ++checked;
  }
  EXPECT_EQ(checked, committed.size());
}
