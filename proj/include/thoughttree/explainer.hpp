#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thoughttree/gnn_classifier.hpp"
#include "thoughttree/tree_builder.hpp"

namespace thoughttree {

// ---- Edge-mask explanation -------------------------------------------------

struct ExplainerConfig {
  int steps = 100;
  double learning_rate = 0.01;
  double size_weight = 0.005;     // coefficient on the sum of mask values
  double entropy_weight = 1.0;    // coefficient on the mean mask entropy
};

void to_json(nlohmann::json& j, const ExplainerConfig& c);
void from_json(const nlohmann::json& j, ExplainerConfig& c);

// One weight in [0, 1] per tree edge; both directions of an edge share it.
struct EdgeImportance {
  std::vector<double> weights;
};

// Learns a sigmoid-gated mask over the tree edges that keeps the model's
// prediction for `target_class` (1 positive, 0 negative) while staying small
// and close to binary, then min-max normalizes it. Takes a raw sample and
// normalizes it with the model's stats. Throws NotTrained for an untrained
// model. `trace`, when given, receives the raw mask after every step
// (entry 0 is the initial mask).
EdgeImportance explain(const TreeClassifier& model, const GraphSample& raw, int target_class,
                       const ExplainerConfig& config = {},
                       std::vector<std::vector<double>>* trace = nullptr);

// Indices of the top ceil(fraction * n) edges by importance, ties broken by
// lower index.
std::vector<std::size_t> top_band(const EdgeImportance& importance, double fraction = 0.2);

// ---- Structural error patterns ---------------------------------------------

enum class ErrorPattern { OverBranching, StepRedundancy, DirectReasoning, SkippedThinking };
inline constexpr std::array<ErrorPattern, 4> kAllPatterns{
    ErrorPattern::OverBranching, ErrorPattern::StepRedundancy, ErrorPattern::DirectReasoning,
    ErrorPattern::SkippedThinking};

const char* to_string(ErrorPattern p) noexcept;
std::optional<ErrorPattern> parse_pattern(std::string_view name);

struct PatternThresholds {
  int over_branching = 4;    // exploration + verification children of one node
  int step_redundancy = 5;   // nodes sharing one step
  int direct_reasoning = 4;  // edges along an unbranched path
  int skipped_thinking = 3;  // step jump across one edge
};

void to_json(nlohmann::json& j, const PatternThresholds& t);
void from_json(const nlohmann::json& j, PatternThresholds& t);

struct PatternDetection {
  ErrorPattern pattern = ErrorPattern::OverBranching;
  std::vector<NodeId> nodes;  // hub / nodes at the step / path / edge endpoints
  int step = -1;              // set for StepRedundancy

  bool operator==(const PatternDetection&) const = default;
};

void to_json(nlohmann::json& j, const PatternDetection& d);

// Detections are grouped by pattern in kAllPatterns order.
//  OverBranching   - a node with >= over_branching exploration/verification children.
//  StepRedundancy  - a step holding >= step_redundancy nodes.
//  DirectReasoning - a downward path of >= direct_reasoning edges whose inner
//                    nodes each have exactly one child.
//  SkippedThinking - an edge whose child is >= skipped_thinking steps below its parent.
std::vector<PatternDetection> detect_patterns(const ReasoningTree& tree,
                                              const PatternThresholds& thresholds = {});

// ---- Planted-pattern synthetic data ----------------------------------------

struct PlantedSample {
  AnnotatedChain chain;
  ReasoningTree tree;
  GraphSample graph;  // raw features; label 1 clean, 0 planted
  std::optional<ErrorPattern> planted;
  std::vector<std::size_t> planted_edges;  // tree edge indices carrying the pattern
  std::vector<ErrorPattern> ground_truth;  // patterns present by construction
};

// Relative frequency of each planted pattern among negatives, in kAllPatterns order.
struct PatternMix {
  std::array<double, 4> weights{1.0, 1.0, 1.0, 1.0};

  static PatternMix only(ErrorPattern p);
};

// Positives are random branchy trees that stay strictly under every
// threshold; negatives are drawn the same way and then receive exactly one
// planted pattern. Samples alternate positive/negative. Every sample is
// generated as an annotated chain and assembled with build_tree, and the
// generator checks that the builder reproduced the intended shape.
std::vector<PlantedSample> generate_planted_dataset(std::size_t n_per_class,
                                                    const PatternMix& mix, std::uint64_t seed,
                                                    const PatternThresholds& thresholds = {});

nlohmann::json to_json(const PlantedSample& s);

}  // namespace thoughttree
