#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "thoughttree/tree_builder.hpp"

namespace thoughttree {

// Column order of GraphSample::node_features.
enum NodeFeature : int {
  kThoughtIndex = 0,
  kStep = 1,
  kCumulativeTokens = 2,
  kChildCount = 3,
  kStepOccupancy = 4,
};
inline constexpr int kNodeFeatureCount = 5;
inline constexpr int kEdgeCategoryCount = 8;

// Signed edge code -> one-hot column: +1..+4 map to 0..3, -1..-4 to 4..7.
int edge_category(int signed_code);

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DirectedEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  int code = 0;  // +function code parent->child, negated child->parent

  bool operator==(const DirectedEdge&) const = default;
};

// Classifier input. Directed edges come in pairs: entry 2k is tree edge k
// parent->child and entry 2k+1 is its child->parent twin.
struct GraphSample {
  std::string sample_id;
  FeatureMatrix node_features;
  std::vector<DirectedEdge> edges;
  std::optional<int> label;  // 1 positive, 0 negative
  std::size_t token_length = 0;  // total tokens of the transcript

  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(node_features.rows()); }
  std::size_t num_tree_edges() const noexcept { return edges.size() / 2; }
};

void to_json(nlohmann::json& j, const GraphSample& g);
void from_json(const nlohmann::json& j, GraphSample& g);

// Per node, in id order: thought index, step, cumulative tokens of thoughts
// 0..i, child count, and how many nodes at the same step were created up to
// and including this one. The root reports thought 0 and zero tokens.
GraphSample featurize(const ReasoningTree& tree, std::span<const std::size_t> thought_tokens,
                      std::string sample_id = {}, std::optional<int> label = std::nullopt);

// Column-wise standardization fitted on a training set. The token column is
// log1p-transformed before centering; a zero-variance column gets std 1.
struct NormalizationStats {
  std::array<double, kNodeFeatureCount> mean{};
  std::array<double, kNodeFeatureCount> stddev{};

  static NormalizationStats fit(std::span<const GraphSample> samples);

  FeatureMatrix apply(const FeatureMatrix& raw) const;
  FeatureMatrix invert(const FeatureMatrix& normalized) const;

  bool operator==(const NormalizationStats&) const = default;
};

void to_json(nlohmann::json& j, const NormalizationStats& s);
void from_json(const nlohmann::json& j, NormalizationStats& s);

// Normalizes a batch. Without stats they are fitted on the batch itself.
std::pair<std::vector<GraphSample>, NormalizationStats> normalize(
    std::span<const GraphSample> samples,
    const std::optional<NormalizationStats>& stats = std::nullopt);

}  // namespace thoughttree
