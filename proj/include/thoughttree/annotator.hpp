#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "thoughttree/llm_client.hpp"
#include "thoughttree/segmenter.hpp"

namespace thoughttree {

// Relation of a thought to the one before it. The numeric codes are part of
// the graph encoding and must not change.
enum class ThoughtFunction : int {
  Continuation = 1,
  Exploration = 2,
  Backtracking = 3,
  Verification = 4,
};

inline int code(ThoughtFunction f) noexcept { return static_cast<int>(f); }
const char* to_string(ThoughtFunction f) noexcept;
ThoughtFunction function_from_code(int code);
// Accepts the canonical lowercase names plus the annotator's category labels
// ("Continuous Logic", "Validation", ...), case-insensitively.
std::optional<ThoughtFunction> parse_function_name(std::string_view name);

struct SketchStep {
  int number = 0;
  std::string text;

  bool operator==(const SketchStep&) const = default;
};

struct ReasoningSketch {
  std::vector<SketchStep> steps;

  int size() const noexcept { return static_cast<int>(steps.size()); }
  bool operator==(const ReasoningSketch&) const = default;
};

struct StepAssignment {
  std::size_t thought_index = 0;
  std::vector<int> steps;

  bool operator==(const StepAssignment&) const = default;
};

struct AnnotatedThought {
  Thought thought;
  std::vector<int> steps;
  // Empty for thought 0, which has no predecessor.
  std::optional<ThoughtFunction> function;

  bool operator==(const AnnotatedThought&) const = default;
};

struct AnnotatedChain {
  std::string sample_id;
  ReasoningSketch sketch;
  std::vector<AnnotatedThought> thoughts;
  std::vector<std::string> warnings;

  bool operator==(const AnnotatedChain&) const = default;
};

void to_json(nlohmann::json& j, const ReasoningSketch& s);
void from_json(const nlohmann::json& j, ReasoningSketch& s);
void to_json(nlohmann::json& j, const AnnotatedChain& c);
void from_json(const nlohmann::json& j, AnnotatedChain& c);

struct AnnotatorConfig {
  std::string model_name = "deepseek-chat";
  double temperature = 0.0;
  std::size_t word_budget = 600;
  std::size_t max_in_flight = 4;
};

// Half-open range of thought indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const IndexRange&) const = default;
};

// Prompt rendering, exposed for tests and for the fixture recorder.
std::string render_sketch_prompt(std::string_view transcript);
std::string render_assign_prompt(const ReasoningSketch& sketch, std::span<const Thought> batch);
std::string render_function_prompt(const Thought& previous, const Thought& current);

// Response parsing. All of these throw AnnotationParseError on bad input.
ReasoningSketch parse_sketch_response(const std::string& raw);
std::vector<StepAssignment> parse_assignment_response(const std::string& raw, int sketch_size,
                                                      std::span<const Thought> batch,
                                                      std::vector<std::string>* warnings);
ThoughtFunction parse_function_response(const std::string& raw);

ReasoningSketch extract_sketch(std::string_view transcript, LlmClient& client,
                               const AnnotatorConfig& config = {});

// Greedy left-to-right packing: a batch grows while its combined word count
// stays within `word_limit`; an oversized thought gets a batch of its own.
std::vector<IndexRange> batch_thoughts(std::span<const Thought> thoughts,
                                       std::size_t word_limit = 600);

std::vector<StepAssignment> assign_steps(const ReasoningSketch& sketch,
                                         std::span<const Thought> batch, LlmClient& client,
                                         const AnnotatorConfig& config = {},
                                         std::vector<std::string>* warnings = nullptr);

ThoughtFunction identify_function(const Thought& previous, const Thought& current,
                                  LlmClient& client, const AnnotatorConfig& config = {});

// Stages 1-4 over an already segmented transcript: one sketch call, one call
// per batch, and one function call per adjacent pair of thoughts.
AnnotatedChain annotate(std::string_view transcript, std::vector<Thought> thoughts,
                        LlmClient& client, const AnnotatorConfig& config = {});
AnnotatedChain annotate(std::string_view transcript, const SeparatorProfile& profile,
                        LlmClient& client, const AnnotatorConfig& config = {});

}  // namespace thoughttree
