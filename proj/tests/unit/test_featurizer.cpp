#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "test_paths.hpp"
#include "thoughttree/dataset.hpp"
#include "thoughttree/error.hpp"
#include "thoughttree/featurizer.hpp"

using namespace thoughttree;

namespace {

std::vector<std::size_t> tokens_of(const AnnotatedChain& c) {
  std::vector<std::size_t> t;
  for (const auto& th : c.thoughts) t.push_back(th.thought.token_count);
  return t;
}

}  // namespace

TEST(Featurizer, RootOfOneThoughtTree) {
  ReasoningTree tree;
  tree.add_child(0, 0, 1, 1, ThoughtFunction::Continuation);
  const std::vector<std::size_t> tokens{42};
  const auto g = featurize(tree, tokens);
  EXPECT_EQ(g.node_features.row(0), (Eigen::RowVectorXd(5) << 0, 0, 0, 1, 1).finished());
  EXPECT_EQ(g.node_features.row(1), (Eigen::RowVectorXd(5) << 0, 1, 42, 0, 1).finished());
  EXPECT_EQ(g.token_length, 42u);
}

TEST(Featurizer, EdgeCodesAndDoubling) {
  ReasoningTree tree;
  NodeId prev = 0;
  for (int s = 1; s <= 7; ++s) prev = tree.add_child(prev, s, 1, s, function_from_code((s % 4) + 1));
  const std::vector<std::size_t> tokens(8, 1);
  const auto g = featurize(tree, tokens);
  ASSERT_EQ(g.edges.size(), 14u);
  for (std::size_t k = 0; k < 7; ++k) {
    const auto& e = tree.edges()[k];
    EXPECT_EQ(g.edges[2 * k], (DirectedEdge{e.parent, e.child, code(e.function)}));
    EXPECT_EQ(g.edges[2 * k + 1], (DirectedEdge{e.child, e.parent, -code(e.function)}));
  }
  // Verification: forward 4, reverse -4.
  EXPECT_EQ(g.edges[4].code, 4);
  EXPECT_EQ(g.edges[5].code, -4);
}

TEST(Featurizer, EdgeCategories) {
  EXPECT_EQ(edge_category(1), 0);
  EXPECT_EQ(edge_category(4), 3);
  EXPECT_EQ(edge_category(-1), 4);
  EXPECT_EQ(edge_category(-4), 7);
  EXPECT_THROW(edge_category(0), Error);
  EXPECT_THROW(edge_category(5), Error);
}

TEST(FeaturizerProperty, MatchesDefinitions) {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const auto chain = testgen::random_chain(rng, rng.between(1, 20), rng.between(1, 6));
    const auto tree = build_tree(chain);
    const auto tokens = tokens_of(chain);
    const auto g = featurize(tree, tokens);
    ASSERT_EQ(g.num_nodes(), tree.size());
    std::size_t total = 0;
    for (auto t : tokens) total += t;
    ASSERT_EQ(g.token_length, total);
    double last_cum = -1;
    std::size_t last_thought = 0;
    for (const auto& n : tree.nodes()) {
      const auto r = static_cast<Eigen::Index>(n.id);
      double cum = 0;
      if (n.id != 0) {
        for (std::size_t i = 0; i <= n.thought_index; ++i) cum += static_cast<double>(tokens[i]);
      }
      int occupancy = 0;
      for (NodeId m = 0; m <= n.id; ++m) occupancy += tree.node(m).step == n.step;
      ASSERT_EQ(g.node_features(r, kThoughtIndex), n.id == 0 ? 0.0 : static_cast<double>(n.thought_index));
      ASSERT_EQ(g.node_features(r, kStep), n.step);
      ASSERT_EQ(g.node_features(r, kCumulativeTokens), cum);
      ASSERT_EQ(g.node_features(r, kChildCount), static_cast<double>(tree.children(n.id).size()));
      ASSERT_EQ(g.node_features(r, kStepOccupancy), occupancy);
      // Nodes are created in thought order, so the token column never drops.
      ASSERT_GE(n.thought_index, last_thought);
      ASSERT_GE(cum, last_cum);
      last_cum = cum;
      last_thought = n.thought_index;
    }
    const nlohmann::json j = g;
    const auto back = j.get<GraphSample>();
    ASSERT_EQ(back.node_features, g.node_features);
    ASSERT_EQ(back.edges, g.edges);
    ASSERT_EQ(back.token_length, g.token_length);
  }
}

TEST(Normalize, ConstantColumnBecomesZero) {
  GraphSample g;
  g.node_features = FeatureMatrix::Constant(4, kNodeFeatureCount, 3.0);
  g.node_features(1, kStep) = 5.0;
  const std::vector<GraphSample> batch{g};
  const auto [out, stats] = normalize(batch);
  EXPECT_EQ(stats.stddev[kThoughtIndex], 1.0);
  for (int r = 0; r < 4; ++r) EXPECT_EQ(out[0].node_features(r, kThoughtIndex), 0.0);
}

TEST(Normalize, InvertRecoversInput) {
  Rng rng(1);
  std::vector<GraphSample> batch;
  for (int k = 0; k < 10; ++k) {
    const auto chain = testgen::random_chain(rng, rng.between(1, 12), 5);
    batch.push_back(featurize(build_tree(chain), tokens_of(chain)));
  }
  const auto [out, stats] = normalize(batch);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const FeatureMatrix back = stats.invert(out[k].node_features);
    EXPECT_LE((back - batch[k].node_features).cwiseAbs().maxCoeff(), 1e-9);
  }
}

// Stats fitted on the fixture graphs agree with a direct computation.
TEST(Normalize, FixtureStats) {
  std::vector<GraphSample> graphs;
  for (const auto& row : read_jsonl(golden_path("pipeline/graphs.jsonl"))) graphs.push_back(row.get<GraphSample>());
  ASSERT_GE(graphs.size(), 20u);
  const auto stats = NormalizationStats::fit(graphs);
  for (int c = 0; c < kNodeFeatureCount; ++c) {
    std::vector<double> v;
    for (const auto& g : graphs) {
      for (Eigen::Index r = 0; r < g.node_features.rows(); ++r) {
        v.push_back(c == kCumulativeTokens ? std::log(1.0 + g.node_features(r, c)) : g.node_features(r, c));
      }
    }
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    EXPECT_NEAR(stats.mean[c], mean, 1e-9);
    EXPECT_NEAR(stats.stddev[c], std::sqrt(var), 1e-9);
  }
  const nlohmann::json j = stats;
  EXPECT_EQ(j.get<NormalizationStats>(), stats);
}

TEST(Featurizer, DocumentFeaturizationMatchesGolden) {
  const auto rows = read_jsonl(golden_path("pipeline/graphs.jsonl"));
  for (const auto& row : rows) {
    const auto id = row.at("sample_id").get<std::string>();
    const auto doc = document_from_json(read_json_file(golden_path("pipeline/trees/" + id + ".json")));
    const nlohmann::json g = featurize(doc);
    EXPECT_EQ(g.dump(), row.dump()) << id;
  }
}
