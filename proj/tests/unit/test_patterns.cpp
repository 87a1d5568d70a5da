#include <gtest/gtest.h>

#include <set>

#include "checks.hpp"
#include "generators.hpp"
#include "thoughttree/error.hpp"
#include "thoughttree/explainer.hpp"

using namespace thoughttree;

namespace {

std::vector<ErrorPattern> kinds(const std::vector<PatternDetection>& ds) {
  std::vector<ErrorPattern> out;
  for (const auto& d : ds) out.push_back(d.pattern);
  return out;
}

std::set<ErrorPattern> kind_set(const std::vector<PatternDetection>& ds) {
  const auto k = kinds(ds);
  return {k.begin(), k.end()};
}

// Random tree with unconstrained shape for the monotonicity property.
ReasoningTree random_tree(Rng& rng) {
  ReasoningTree t;
  const int n = rng.between(1, 30);
  for (int k = 1; k < n; ++k) {
    const NodeId p = rng.below(t.size());
    t.add_child(p, static_cast<std::size_t>(k), 1, t.node(p).step + rng.between(1, 5), function_from_code(rng.between(1, 4)));
  }
  return t;
}

PatternThresholds random_thresholds(Rng& rng) {
  return {rng.between(1, 6), rng.between(1, 7), rng.between(1, 6), rng.between(1, 5)};
}

bool is_subset(const std::vector<PatternDetection>& small, const std::vector<PatternDetection>& big) {
  for (const auto& d : small) {
    if (std::find(big.begin(), big.end(), d) == big.end()) return false;
  }
  return true;
}

}  // namespace

TEST(Patterns, StarOverBranchesAtRoot) {
  ReasoningTree t;
  for (int k = 1; k <= 6; ++k) t.add_child(0, static_cast<std::size_t>(k), 1, k <= 3 ? 1 : 2, ThoughtFunction::Exploration);
  const auto ds = detect_patterns(t);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].pattern, ErrorPattern::OverBranching);
  EXPECT_EQ(ds[0].nodes, (std::vector<NodeId>{0}));
}

TEST(Patterns, OnlyExplorationAndVerificationCount) {
  ReasoningTree t;
  for (int k = 1; k <= 3; ++k) t.add_child(0, static_cast<std::size_t>(k), 1, 1, ThoughtFunction::Verification);
  t.add_child(0, 4, 1, 2, ThoughtFunction::Continuation);
  t.add_child(0, 5, 1, 2, ThoughtFunction::Backtracking);
  EXPECT_TRUE(detect_patterns(t).empty());
  t.add_child(0, 6, 1, 2, ThoughtFunction::Exploration);
  EXPECT_EQ(kinds(detect_patterns(t)), (std::vector<ErrorPattern>{ErrorPattern::OverBranching}));
}

TEST(Patterns, ShortChainIsClean) {
  ReasoningTree t;
  NodeId p = 0;
  for (int s = 1; s <= 3; ++s) p = t.add_child(p, static_cast<std::size_t>(s), 1, s, ThoughtFunction::Continuation);
  EXPECT_TRUE(detect_patterns(t).empty());
}

TEST(Patterns, SingleLongEdgeIsSkippedThinking) {
  ReasoningTree t;
  const NodeId a = t.add_child(0, 1, 1, 1, ThoughtFunction::Continuation);
  const NodeId b = t.add_child(a, 2, 1, 5, ThoughtFunction::Continuation);
  const auto ds = detect_patterns(t);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].pattern, ErrorPattern::SkippedThinking);
  EXPECT_EQ(ds[0].nodes, (std::vector<NodeId>{a, b}));
  // Gap 2 stays under the default threshold of 3.
  ReasoningTree u;
  u.add_child(u.add_child(0, 1, 1, 1, ThoughtFunction::Continuation), 2, 1, 3, ThoughtFunction::Continuation);
  EXPECT_TRUE(detect_patterns(u).empty());
}

TEST(Patterns, StepRedundancyReportsTheStep) {
  ReasoningTree t;
  const NodeId a = t.add_child(0, 1, 1, 1, ThoughtFunction::Continuation);
  for (int k = 0; k < 5; ++k) t.add_child(a, static_cast<std::size_t>(k + 2), 1, 2, ThoughtFunction::Backtracking);
  const auto ds = detect_patterns(t);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].pattern, ErrorPattern::StepRedundancy);
  EXPECT_EQ(ds[0].step, 2);
  EXPECT_EQ(ds[0].nodes.size(), 5u);
}

TEST(Patterns, DirectReasoningCountsEdges) {
  ReasoningTree t;
  NodeId p = 0;
  for (int s = 1; s <= 3; ++s) p = t.add_child(p, static_cast<std::size_t>(s), 1, s, ThoughtFunction::Continuation);
  EXPECT_TRUE(detect_patterns(t).empty());
  t.add_child(p, 4, 1, 4, ThoughtFunction::Continuation);
  const auto ds = detect_patterns(t);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].pattern, ErrorPattern::DirectReasoning);
  EXPECT_EQ(ds[0].nodes, (std::vector<NodeId>{0, 1, 2, 3, 4}));
}

TEST(Patterns, DirectReasoningStopsAtBranches) {
  // root -> a -> b, with b branching into two 2-edge chains: no segment has 4 edges.
  ReasoningTree t;
  const NodeId a = t.add_child(0, 1, 1, 1, ThoughtFunction::Continuation);
  const NodeId b = t.add_child(a, 2, 1, 2, ThoughtFunction::Continuation);
  t.add_child(t.add_child(b, 3, 1, 3, ThoughtFunction::Continuation), 4, 1, 4, ThoughtFunction::Continuation);
  t.add_child(t.add_child(b, 5, 1, 3, ThoughtFunction::Backtracking), 6, 1, 4, ThoughtFunction::Continuation);
  EXPECT_TRUE(detect_patterns(t).empty());
}

TEST(Patterns, Names) {
  for (auto p : kAllPatterns) EXPECT_EQ(parse_pattern(to_string(p)), p);
  EXPECT_EQ(parse_pattern("Over-Branching"), ErrorPattern::OverBranching);
  EXPECT_FALSE(parse_pattern("nope").has_value());
  PatternThresholds th{1, 2, 3, 4};
  const nlohmann::json j = th;
  const auto back = j.get<PatternThresholds>();
  EXPECT_EQ(back.over_branching, 1);
  EXPECT_EQ(back.skipped_thinking, 4);
  EXPECT_THROW((nlohmann::json{{"over_branching", 0}}.get<PatternThresholds>()), Error);
}

TEST(PatternsProperty, RaisingThresholdsNeverAddsDetections) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto tree = random_tree(rng);
    const auto low = random_thresholds(rng);
    auto high = low;
    switch (rng.below(5)) {
      case 0: high.over_branching += rng.between(1, 3); break;
      case 1: high.step_redundancy += rng.between(1, 3); break;
      case 2: high.direct_reasoning += rng.between(1, 3); break;
      case 3: high.skipped_thinking += rng.between(1, 3); break;
      default:
        high = {low.over_branching + 1, low.step_redundancy + 1, low.direct_reasoning + 1, low.skipped_thinking + 1};
    }
    ASSERT_TRUE(is_subset(detect_patterns(tree, high), detect_patterns(tree, low))) << "trial " << trial;
  }
}

TEST(Planted, DeterministicForASeed) {
  const auto a = generate_planted_dataset(30, {}, 5);
  const auto b = generate_planted_dataset(30, {}, 5);
  ASSERT_EQ(a.size(), 60u);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
  const auto c = generate_planted_dataset(30, {}, 6);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= to_json(a[i]).dump() != to_json(c[i]).dump();
  EXPECT_TRUE(differs);
}

TEST(Planted, AgreesWithDetectors) {
  const auto data = generate_planted_dataset(300, {}, 12);
  std::array<int, 4> per_pattern{};
  for (const auto& s : data) {
    const auto found = kind_set(detect_patterns(s.tree));
    ASSERT_EQ(found, std::set<ErrorPattern>(s.ground_truth.begin(), s.ground_truth.end()));
    ASSERT_EQ(s.tree, build_tree(s.chain));
    if (*s.graph.label == 1) {
      ASSERT_FALSE(s.planted.has_value());
      ASSERT_TRUE(found.empty());
    } else {
      ASSERT_TRUE(s.planted.has_value());
      ASSERT_TRUE(found.count(*s.planted));
      ASSERT_FALSE(s.planted_edges.empty());
      for (auto e : s.planted_edges) ASSERT_LT(e, s.tree.edges().size());
      ++per_pattern[static_cast<std::size_t>(*s.planted)];
    }
  }
  for (int n : per_pattern) EXPECT_GT(n, 30);
}

TEST(Planted, PatternMixOnlyAndThresholds) {
  const PatternThresholds th{3, 6, 3, 2};
  for (auto p : kAllPatterns) {
    for (const auto& s : generate_planted_dataset(40, PatternMix::only(p), 3, th)) {
      const auto found = kind_set(detect_patterns(s.tree, th));
      if (*s.graph.label == 0) {
        ASSERT_EQ(s.planted, p);
        ASSERT_TRUE(found.count(p));
      } else {
        ASSERT_TRUE(found.empty());
      }
    }
  }
}

TEST(Planted, OverBranchingEdgesLeaveTheHub) {
  for (const auto& s : generate_planted_dataset(50, PatternMix::only(ErrorPattern::OverBranching), 8)) {
    if (*s.graph.label == 1) continue;
    const NodeId hub = s.tree.edges()[s.planted_edges.front()].parent;
    for (auto e : s.planted_edges) {
      ASSERT_EQ(s.tree.edges()[e].parent, hub);
      const auto f = s.tree.edges()[e].function;
      ASSERT_TRUE(f == ThoughtFunction::Exploration || f == ThoughtFunction::Verification);
    }
    ASSERT_GE(static_cast<int>(s.planted_edges.size()), PatternThresholds{}.over_branching);
  }
}
